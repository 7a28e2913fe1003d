#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dentmrf/sampler.hpp"

namespace dentmrf {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

json adapter_json(const BlockAdapter& a) {
  return json{{"log_scale", a.log_scale},   {"widths", a.widths},
              {"mean", a.mean},             {"m2", a.m2},
              {"window_n", a.window_n},     {"window", a.window},
              {"since_reset", a.since_reset}, {"proposed", a.proposed},
              {"accepted", a.accepted},     {"proposed_after", a.proposed_after},
              {"accepted_after", a.accepted_after}};
}

BlockAdapter adapter_from(const json& j) {
  BlockAdapter a;
  a.log_scale = j.at("log_scale");
  a.widths = j.at("widths").get<std::vector<double>>();
  a.mean = j.at("mean").get<std::vector<double>>();
  a.m2 = j.at("m2").get<std::vector<double>>();
  a.window_n = j.at("window_n");
  a.window = j.at("window");
  a.since_reset = j.at("since_reset");
  a.proposed = j.at("proposed");
  a.accepted = j.at("accepted");
  a.proposed_after = j.at("proposed_after");
  a.accepted_after = j.at("accepted_after");
  return a;
}

}  // namespace

std::string Sampler::checkpoint_json() const {
  json j;
  j["version"] = kCheckpointVersion;
  j["data_hash"] = std::to_string(data_hash_);
  j["seed"] = config_.seed;
  j["iteration"] = state_.iteration;
  j["hyper_rng"] = state_.hyper_rng.serialize();
  json hyper = json::array();
  for (const auto& block : state_.hyper.blocks) {
    json b = json::array();
    for (const auto& h : block) b.push_back({h.delta, h.sigma2});
    hyper.push_back(b);
  }
  j["hyper"] = hyper;
  json psus = json::array();
  for (const auto& psu : state_.psus) {
    json p;
    p["id"] = psu.id;
    p["rng"] = psu.rng.serialize();
    p["blocks"] = psu.params.blocks;
    p["phi2"] = psu.params.phi2;
    json adapters = json::array();
    for (const auto& a : psu.adapters) adapters.push_back(adapter_json(a));
    p["adapters"] = adapters;
    p["fluorosis"] = {psu.fluorosis.log_step, psu.fluorosis.proposed, psu.fluorosis.accepted};
    json subjects = json::array();
    for (const auto& s : psu.subjects) {
      subjects.push_back({{"person_id", s.person_id},
                          {"poverty", s.poverty},
                          {"sealant", s.sealant},
                          {"z", s.z},
                          {"x", s.mouth.x},
                          {"y", s.mouth.y}});
    }
    p["subjects"] = subjects;
    psus.push_back(p);
  }
  j["psus"] = psus;
  return j.dump() + "\n";
}

void Sampler::restore_json(const std::string& text) {
  const auto j = json::parse(text);
  if (j.at("version").get<int>() != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  if (j.at("data_hash").get<std::string>() != std::to_string(data_hash_)) {
    throw std::runtime_error("checkpoint was written for a different dataset");
  }
  if (j.at("seed").get<std::uint64_t>() != config_.seed) throw std::runtime_error("checkpoint seed differs from config");
  const auto& psus = j.at("psus");
  if (psus.size() != state_.psus.size()) throw std::runtime_error("checkpoint PSU count differs from dataset");

  ChainState next = state_;
  next.iteration = j.at("iteration");
  if (next.iteration > config_.n_iterations) throw std::runtime_error("checkpoint is past the configured run length");
  next.hyper_rng.deserialize(j.at("hyper_rng").get<std::string>());
  const auto& hyper = j.at("hyper");
  for (int b = 0; b < kNumBlocks; ++b) {
    auto& hb = next.hyper.blocks[b];
    if (hyper.at(b).size() != hb.size()) throw std::runtime_error("checkpoint hyperparameter layout differs");
    for (std::size_t k = 0; k < hb.size(); ++k) hb[k] = {hyper[b][k][0], hyper[b][k][1]};
  }
  for (std::size_t i = 0; i < psus.size(); ++i) {
    const auto& p = psus[i];
    auto& ps = next.psus[i];
    if (p.at("id").get<std::int64_t>() != ps.id) throw std::runtime_error("checkpoint PSU ids differ from dataset");
    ps.rng.deserialize(p.at("rng").get<std::string>());
    auto blocks = p.at("blocks").get<std::array<std::vector<double>, kNumBlocks>>();
    for (int b = 0; b < kNumBlocks; ++b) {
      if (blocks[b].size() != ps.params.blocks[b].size()) throw std::runtime_error("checkpoint parameter layout differs");
    }
    ps.params.blocks = std::move(blocks);
    ps.params.phi2 = p.at("phi2");
    for (int b = 0; b < kNumBlocks; ++b) ps.adapters[b] = adapter_from(p.at("adapters").at(b));
    const auto& fl = p.at("fluorosis");
    ps.fluorosis.log_step = fl.at(0);
    ps.fluorosis.proposed = fl.at(1);
    ps.fluorosis.accepted = fl.at(2);
    const auto& subjects = p.at("subjects");
    if (subjects.size() != ps.subjects.size()) throw std::runtime_error("checkpoint subject count differs");
    for (std::size_t k = 0; k < subjects.size(); ++k) {
      const auto& sj = subjects[k];
      auto& s = ps.subjects[k];
      if (sj.at("person_id").get<std::int64_t>() != s.person_id) throw std::runtime_error("checkpoint subjects differ");
      s.poverty = sj.at("poverty");
      s.sealant = sj.at("sealant");
      s.z = sj.at("z").get<CovariateVector>();
      s.mouth.x = sj.at("x").get<std::vector<std::uint8_t>>();
      s.mouth.y = sj.at("y").get<std::vector<std::uint8_t>>();
      check_state(s.mouth, model_.graph());
      model_.refresh(s);
    }
  }
  state_ = std::move(next);
}

void Sampler::save_checkpoint(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
    out << checkpoint_json();
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void Sampler::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  restore_json(buf.str());
}

}  // namespace dentmrf
