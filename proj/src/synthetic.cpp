#include "dentmrf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dentmrf/missingness.hpp"
#include "dentmrf/model.hpp"
#include "dentmrf/potts.hpp"
#include "dentmrf/rng.hpp"

namespace dentmrf {

using nlohmann::json;

namespace {

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(std::floor(rng.uniform() * (hi - lo + 1)));
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

ColumnTransform binary_or(std::span<const double> v, double fallback) {
  try {
    return fit_binary(v, "synthetic");
  } catch (const DegenerateSpecError&) {
    return ColumnTransform{ScaleKind::BinaryShift, fallback, 1.0};
  }
}

std::vector<double> draw_block(Block block, int q, const std::map<std::string, FamilyTruth>& truth,
                               std::map<std::string, double>& record, Rng& rng) {
  std::vector<double> out;
  for (const auto& name : block_family_names(block, q)) {
    FamilyTruth t;
    if (auto it = truth.find(name); it != truth.end()) t = it->second;
    double v = t.mean + t.sd * rng.normal();
    if (name.rfind("psi_", 0) == 0) {
      for (int tries = 0; v < 0.0 && tries < 1000; ++tries) v = t.mean + t.sd * rng.normal();
      v = std::max(v, 0.0);
    }
    out.push_back(v);
    record[name] = v;
  }
  return out;
}

std::set<std::string> known_families(int q) {
  std::set<std::string> names;
  for (auto b : {Block::Tooth, Block::Surface, Block::Norp, Block::Nord}) {
    for (const auto& n : block_family_names(b, q)) names.insert(n);
  }
  return names;
}

}  // namespace

std::map<std::string, FamilyTruth> default_truth() {
  return {
      {"psi_t", {0.6074, 0.05}},    {"alpha_m", {-1.5313, 0.1}}, {"alpha_mbar", {-1.9772, 0.1}},
      {"psi_p.A1", {0.0964, 0.02}}, {"psi_p.A2", {1.2626, 0.05}}, {"psi_p.B1", {0.8711, 0.05}},
      {"psi_p.B2", {0.6440, 0.05}}, {"psi_p.C", {0.0003, 0.0}},  {"alpha_d", {1.3158, 0.1}},
      {"alpha_f", {3.6222, 0.1}},
  };
}

void SyntheticSpec::validate() const {
  if (n_psus < 1) throw std::invalid_argument("n_psus must be at least 1");
  if (fixed_size && *fixed_size < 1) throw std::invalid_argument("fixed PSU size must be at least 1");
  if (!fixed_size) {
    if (size_min < 1 || size_max < size_min) throw std::invalid_argument("bad PSU size range");
    if (n_small < 0 || (n_small > 0 && (small_min < 1 || small_max < small_min))) {
      throw std::invalid_argument("bad small-PSU size range");
    }
    if (largest < 1) throw std::invalid_argument("largest PSU size must be positive");
  }
  if (spline_q < 0 || (spline_q > 0 && spline_q < 3)) throw std::invalid_argument("spline_q must be 0 or at least 3");
  if (sweeps < 0) throw std::invalid_argument("sweeps must be nonnegative");
  auto rate = [](double r, const char* what) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
  };
  rate(norp_max, "norp_max");
  rate(nord_max, "nord_max");
  if (norp_rate) rate(*norp_rate, "norp_rate");
  if (nord_rate) rate(*nord_rate, "nord_rate");
  for (double p : {p_female, p_white, p_black, p_poverty, p_sealant}) rate(p, "covariate probability");
  if (p_white + p_black > 1.0) throw std::invalid_argument("race probabilities exceed 1");
  if (fluorosis_levels.size() != 5) throw std::invalid_argument("fluorosis_levels needs 5 probabilities");
  double total = 0.0;
  for (double p : fluorosis_levels) {
    rate(p, "fluorosis level probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("fluorosis_levels must sum to 1");
  if (!(weight_min > 0.0) || !(weight_max >= weight_min)) throw std::invalid_argument("bad weight range");
  const auto known = known_families(spline_q);
  for (const auto& [name, t] : truth) {
    if (!known.count(name)) throw std::invalid_argument("unknown family '" + name + "' in truth");
    if (!(t.sd >= 0.0)) throw std::invalid_argument("truth sd for " + name + " must be nonnegative");
  }
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("spec is not valid JSON: ") + e.what());
  }
  static const std::set<std::string> allowed{"teeth",    "n_psus",    "psu_sizes", "spline_q",  "use_covariates",
                                             "sweeps",   "truth",     "norp_max",  "nord_max",  "norp_rate",
                                             "nord_rate", "covariates", "weight_range"};
  if (!j.is_object()) throw std::invalid_argument("spec must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw std::invalid_argument("unknown key '" + k + "' in spec");
  }
  SyntheticSpec s;
  try {
    if (j.contains("teeth")) s.teeth = j["teeth"].get<std::vector<int>>();
    if (j.contains("n_psus")) s.n_psus = j["n_psus"];
    if (j.contains("psu_sizes")) {
      const auto& p = j["psu_sizes"];
      if (p.contains("min")) s.size_min = p["min"];
      if (p.contains("max")) s.size_max = p["max"];
      if (p.contains("n_small")) s.n_small = p["n_small"];
      if (p.contains("small_min")) s.small_min = p["small_min"];
      if (p.contains("small_max")) s.small_max = p["small_max"];
      if (p.contains("largest")) s.largest = p["largest"];
      if (p.contains("fixed") && !p["fixed"].is_null()) s.fixed_size = p["fixed"].get<int>();
    }
    if (j.contains("spline_q")) s.spline_q = j["spline_q"];
    if (j.contains("use_covariates")) s.use_covariates = j["use_covariates"];
    if (j.contains("sweeps")) s.sweeps = j["sweeps"];
    if (j.contains("truth")) {
      for (const auto& [name, v] : j["truth"].items()) {
        FamilyTruth t;
        if (v.is_number()) {
          t.mean = v.get<double>();
        } else {
          t.mean = v.at("mean").get<double>();
          if (v.contains("sd")) t.sd = v["sd"].get<double>();
        }
        s.truth[name] = t;
      }
    }
    if (j.contains("norp_max")) s.norp_max = j["norp_max"];
    if (j.contains("nord_max")) s.nord_max = j["nord_max"];
    if (j.contains("norp_rate") && !j["norp_rate"].is_null()) s.norp_rate = j["norp_rate"].get<double>();
    if (j.contains("nord_rate") && !j["nord_rate"].is_null()) s.nord_rate = j["nord_rate"].get<double>();
    if (j.contains("covariates")) {
      const auto& c = j["covariates"];
      if (c.contains("p_female")) s.p_female = c["p_female"];
      if (c.contains("p_white")) s.p_white = c["p_white"];
      if (c.contains("p_black")) s.p_black = c["p_black"];
      if (c.contains("p_poverty")) s.p_poverty = c["p_poverty"];
      if (c.contains("p_sealant")) s.p_sealant = c["p_sealant"];
      if (c.contains("fluorosis_levels")) s.fluorosis_levels = c["fluorosis_levels"].get<std::vector<double>>();
    }
    if (j.contains("weight_range")) {
      const auto w = j["weight_range"].get<std::vector<double>>();
      if (w.size() != 2) throw std::invalid_argument("weight_range needs two values");
      s.weight_min = w[0];
      s.weight_max = w[1];
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad value in spec: ") + e.what());
  }
  s.validate();
  return s;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_synthetic_spec(buf.str());
}

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticData out;
  out.seed = seed;
  out.hyper = default_truth();
  for (const auto& [k, v] : spec.truth) out.hyper[k] = v;

  std::vector<int> teeth = spec.teeth;
  if (teeth.empty()) {
    for (int t = 1; t <= kNumTeeth; ++t) teeth.push_back(t);
  }
  std::sort(teeth.begin(), teeth.end());
  const auto graph = DentitionGraph::subgraph(teeth);
  auto& data = out.dataset;
  data.teeth = graph.tooth_ids();

  Rng master = Rng::stream(seed, 0);
  std::vector<int> sizes(spec.n_psus);
  for (int i = 0; i < spec.n_psus; ++i) {
    if (spec.fixed_size) {
      sizes[i] = *spec.fixed_size;
    } else if (i < spec.n_small) {
      sizes[i] = uniform_int(master, spec.small_min, spec.small_max);
    } else if (i == spec.n_small) {
      sizes[i] = spec.largest;
    } else {
      sizes[i] = uniform_int(master, spec.size_min, spec.size_max);
    }
  }
  std::shuffle(sizes.begin(), sizes.end(), master);

  // Demographics and weights.
  struct Draft {
    int sealant = 0;
    int fluorosis = 0;
  };
  std::vector<std::vector<Draft>> drafts(spec.n_psus);
  std::vector<Rng> rngs;
  const double log_w0 = std::log(spec.weight_min), log_w1 = std::log(spec.weight_max);
  std::int64_t next_person = 1;
  for (int i = 0; i < spec.n_psus; ++i) {
    rngs.push_back(Rng::stream(seed, static_cast<std::uint64_t>(i) + 1));
    auto& rng = rngs.back();
    Psu psu;
    psu.id = i + 1;
    for (int k = 0; k < sizes[i]; ++k) {
      Person p = make_person(graph);
      p.person_id = next_person++;
      p.weight = std::exp(log_w0 + (log_w1 - log_w0) * rng.uniform());
      p.gender = rng.bernoulli(spec.p_female) ? 1 : 0;
      const double u = rng.uniform();
      p.race = u < spec.p_white ? 1 : (u < spec.p_white + spec.p_black ? 2 : 3);
      p.poverty = rng.bernoulli(spec.p_poverty) ? 1 : 0;
      Draft d;
      d.sealant = rng.bernoulli(spec.p_sealant) ? 1 : 0;
      double c = rng.uniform();
      d.fluorosis = 4;
      for (int level = 0; level < 5; ++level) {
        if (c < spec.fluorosis_levels[level]) {
          d.fluorosis = level;
          break;
        }
        c -= spec.fluorosis_levels[level];
      }
      drafts[i].push_back(d);
      psu.people.push_back(std::move(p));
    }
    data.psus.push_back(std::move(psu));
  }

  // Covariate standardization from the complete draws.
  StandardizationSpec stdz = identity_standardization();
  std::vector<double> gender, poverty, white, black, sealant, fluor, probs;
  for (int i = 0; i < spec.n_psus; ++i) {
    for (std::size_t k = 0; k < data.psus[i].people.size(); ++k) {
      const auto& p = data.psus[i].people[k];
      gender.push_back(p.gender);
      poverty.push_back(*p.poverty);
      white.push_back(p.race == 1);
      black.push_back(p.race == 2);
      sealant.push_back(drafts[i][k].sealant);
      fluor.push_back(drafts[i][k].fluorosis);
      probs.push_back(inclusion_probability(p.weight));
    }
  }
  if (spec.use_covariates && !gender.empty()) {
    stdz.covariates[0] = binary_or(gender, spec.p_female);
    stdz.covariates[1] = binary_or(poverty, spec.p_poverty);
    stdz.covariates[2] = binary_or(white, spec.p_white);
    stdz.covariates[3] = binary_or(black, spec.p_black);
    stdz.covariates[4] = binary_or(sealant, spec.p_sealant);
    stdz.covariates[5] = fit_half_sd(fluor);
  }
  std::optional<SplineBasis> basis;
  if (spec.spline_q > 0 && std::set<double>(probs.begin(), probs.end()).size() >= static_cast<std::size_t>(spec.spline_q)) {
    basis = make_knots(probs, spec.spline_q);
  }
  const int q = basis ? basis->count() : 0;

  // PSU parameters and outcomes.
  std::vector<std::vector<CovariateVector>> zs(spec.n_psus);
  std::vector<std::vector<MouthState>> mouths(spec.n_psus);
  std::vector<std::vector<double>> norp_coef(spec.n_psus), nord_coef(spec.n_psus);
  for (int i = 0; i < spec.n_psus; ++i) {
    auto& rng = rngs[i];
    PsuTruth truth;
    truth.id = data.psus[i].id;
    auto tooth = ToothParams::unflatten(draw_block(Block::Tooth, q, out.hyper, truth.params, rng));
    auto surface = SurfaceParams::unflatten(draw_block(Block::Surface, q, out.hyper, truth.params, rng));
    norp_coef[i] = draw_block(Block::Norp, q, out.hyper, truth.params, rng);
    nord_coef[i] = draw_block(Block::Nord, q, out.hyper, truth.params, rng);
    truth.norp_rate = spec.norp_rate ? *spec.norp_rate : spec.norp_max * rng.uniform();
    truth.nord_rate = spec.nord_rate ? *spec.nord_rate : spec.nord_max * rng.uniform();
    for (std::size_t k = 0; k < data.psus[i].people.size(); ++k) {
      auto& p = data.psus[i].people[k];
      const auto& d = drafts[i][k];
      RawCovariates raw{p.gender, p.race, p.poverty, d.sealant, static_cast<double>(d.fluorosis)};
      const CovariateVector z = spec.use_covariates ? stdz.standardize(raw) : CovariateVector{};
      std::vector<double> spline;
      if (basis) spline = basis->eval(inclusion_probability(p.weight));
      auto mouth = MouthState::all_present(graph);
      // x from its own Potts model, then y given x.
      const auto tf = make_field(tooth, z, spline);
      const auto sf = make_field(surface, z, spline);
      for (int s = 0; s < spec.sweeps; ++s) tooth_sweep(mouth, graph, tf, rng);
      for (int s = 0; s < spec.sweeps; ++s) surface_sweep(mouth, graph, sf, rng);
      set_mouth(p, mouth);
      for (std::size_t t = 0; t < graph.num_teeth(); ++t) {
        if (mouth.x[t] == kToothPresent) {
          p.teeth[t].sealant = d.sealant;
          p.teeth[t].fluorosis = d.fluorosis;
        }
      }
      zs[i].push_back(z);
      mouths[i].push_back(std::move(mouth));
    }
    out.psus.push_back(std::move(truth));
  }

  // Selection models on the standardized spatial statistics.
  std::array<std::vector<double>, kNumSpatialStats> stat_cols;
  for (const auto& ms : mouths) {
    for (const auto& m : ms) {
      const auto s = spatial_stats(m, graph);
      for (int j = 0; j < kNumSpatialStats; ++j) stat_cols[j].push_back(s[j]);
    }
  }
  for (int j = 0; j < kNumSpatialStats; ++j) stdz.spatial[j] = fit_half_sd(stat_cols[j]);
  for (int i = 0; i < spec.n_psus; ++i) {
    auto& rng = rngs[i];
    auto& truth = out.psus[i];
    auto& coef1 = norp_coef[i];
    auto& coef2 = nord_coef[i];
    // intercepts carry the PSU's response rate
    coef1[0] = truth.norp_rate > 0.0 ? logit(1.0 - truth.norp_rate) : 0.0;
    coef2[0] = truth.nord_rate > 0.0 ? logit(1.0 - truth.nord_rate) : 0.0;
    truth.params["norp.intercept"] = coef1[0];
    truth.params["nord.intercept"] = coef2[0];
    for (std::size_t k = 0; k < data.psus[i].people.size(); ++k) {
      auto& p = data.psus[i].people[k];
      Subject s;
      s.z = zs[i][k];
      s.stats = stdz.standardize(spatial_stats(mouths[i][k], graph));
      s.r1 = 1;
      p.r1 = truth.norp_rate > 0.0 ? (rng.uniform() < selection_prob(predictor(Block::Norp, s), coef1) ? 1 : 0) : 1;
      s.r1 = p.r1;
      p.r2 = truth.nord_rate > 0.0 ? (rng.uniform() < selection_prob(predictor(Block::Nord, s), coef2) ? 1 : 0) : 1;
      if (p.r1 == 0) p.poverty.reset();
      if (p.r2 == 0) {
        for (auto& t : p.teeth) t = ToothRecord{};
        for (auto& y : p.surfaces) y.reset();
      }
    }
  }
  return out;
}

std::string SyntheticData::truth_json() const {
  json j;
  j["seed"] = seed;
  json hyper = json::object();
  for (const auto& [name, t] : this->hyper) hyper[name] = {{"mean", t.mean}, {"sd", t.sd}};
  j["hyper"] = hyper;
  json psus = json::array();
  for (const auto& p : this->psus) {
    psus.push_back({{"id", p.id}, {"norp_rate", p.norp_rate}, {"nord_rate", p.nord_rate}, {"params", p.params}});
  }
  j["psus"] = psus;
  return j.dump(2) + "\n";
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  save_dataset(data.dataset, dir);
  std::ofstream out(dir / "truth.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "truth.json").string());
  out << data.truth_json();
}

}  // namespace dentmrf
