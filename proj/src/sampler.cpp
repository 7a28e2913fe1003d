#include "dentmrf/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

namespace dentmrf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const SurveyDataset& validated(const SurveyDataset& dataset) {
  auto issues = validate(dataset);
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return dataset;
}

double base_scale(const ChainConfig& c, Block b) {
  switch (b) {
    case Block::Tooth: return c.tooth_scale;
    case Block::Surface: return c.surface_scale;
    default: return c.regression_scale;
  }
}

bool has_present_tooth(const MouthState& m) {
  return std::find(m.x.begin(), m.x.end(), kToothPresent) != m.x.end();
}

}  // namespace

void ChainConfig::validate() const {
  if (n_iterations < 1) throw std::invalid_argument("n_iterations must be at least 1");
  if (burn_in >= n_iterations) throw std::invalid_argument("burn_in must be smaller than n_iterations");
  if (thinning < 1) throw std::invalid_argument("thinning must be at least 1");
  if (aux.n_aux < 1) throw std::invalid_argument("n_aux must be at least 1");
  if (aux.sweeps < 0) throw std::invalid_argument("aux_sweeps must be nonnegative");
  if (aux.mode == AuxMode::Thinned && aux.thin < 1) throw std::invalid_argument("aux_thin must be at least 1");
  if (!(tooth_scale > 0.0) || !(surface_scale > 0.0) || !(regression_scale > 0.0) || !(fluorosis_step > 0.0)) {
    throw std::invalid_argument("proposal scales must be positive");
  }
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  if (init_sweeps < 0) throw std::invalid_argument("init_sweeps must be nonnegative");
}

std::uint64_t ChainConfig::retained() const { return (n_iterations - burn_in) / thinning; }

bool ChainConfig::retains(std::uint64_t it) const {
  return it > burn_in && it <= n_iterations && (it - burn_in) % thinning == 0;
}

ExchangeOutcome exchange_update(Level level, std::span<const double> current, std::span<const double> proposal_sd,
                                std::span<const Subject> subjects, const DentitionGraph& graph,
                                const std::function<double(std::span<const double>)>& log_prior,
                                PartitionRatio& ratio, Rng& rng) {
  if (level == Level::Joint) throw std::invalid_argument("exchange updates act on one Potts level at a time");
  if (proposal_sd.size() != current.size()) throw std::invalid_argument("proposal widths have wrong length");
  ExchangeOutcome out;
  std::vector<double> prop(current.begin(), current.end());
  for (std::size_t k = 0; k < prop.size(); ++k) {
    if (proposal_sd[k] > 0.0) prop[k] += proposal_sd[k] * rng.normal();
  }
  const double lp1 = log_prior(prop);
  if (lp1 == kNegInf) {
    out.theta.assign(current.begin(), current.end());
    out.log_alpha = kNegInf;
    return out;
  }
  double la = lp1 - log_prior(current);
  if (level == Level::Tooth) {
    const auto p0 = ToothParams::unflatten(current);
    const auto p1 = ToothParams::unflatten(prop);
    for (const auto& s : subjects) {
      const auto f0 = make_field(p0, s.z, s.spline);
      const auto f1 = make_field(p1, s.z, s.spline);
      la += log_unnorm_diff(s.tooth_counts, f1, f0) + ratio.log_tooth(s.mouth, graph, f0, f1, rng);
    }
  } else {
    const auto p0 = SurfaceParams::unflatten(current);
    const auto p1 = SurfaceParams::unflatten(prop);
    for (const auto& s : subjects) {
      if (!has_present_tooth(s.mouth)) continue;
      const auto f0 = make_field(p0, s.z, s.spline);
      const auto f1 = make_field(p1, s.z, s.spline);
      la += log_unnorm_diff(s.surface_counts, f1, f0) + ratio.log_surface(s.mouth, graph, f0, f1, rng);
    }
  }
  out.log_alpha = la;
  out.accepted = std::log(rng.uniform()) < la;
  if (out.accepted) {
    out.theta = std::move(prop);
  } else {
    out.theta.assign(current.begin(), current.end());
  }
  return out;
}

Sampler::Sampler(const SurveyDataset& dataset, ModelOptions options, ChainConfig config)
    : model_(validated(dataset), std::move(options)), config_(config) {
  config_.validate();
  data_hash_ = observed_hash(dataset);
  state_.hyper = initial_hyper(model_);
  state_.hyper_rng = Rng::stream(config_.seed, 0);

  std::vector<const Psu*> order;
  for (const auto& psu : dataset.psus) order.push_back(&psu);
  std::sort(order.begin(), order.end(), [](const Psu* a, const Psu* b) { return a->id < b->id; });

  const auto& graph = model_.graph();
  for (const Psu* psu : order) {
    PsuState ps;
    ps.id = psu->id;
    ps.params = model_.initial_params();
    ps.rng = Rng::stream(config_.seed, static_cast<std::uint64_t>(psu->id) + 1);
    for (int b = 0; b < kNumBlocks; ++b) {
      const auto block = static_cast<Block>(b);
      const auto& fams = model_.layout(block).families;
      auto& a = ps.adapters[b];
      a.widths.resize(fams.size());
      for (std::size_t k = 0; k < fams.size(); ++k) a.widths[k] = fams[k].free ? base_scale(config_, block) : 0.0;
      a.mean.assign(fams.size(), 0.0);
      a.m2.assign(fams.size(), 0.0);
    }
    ps.fluorosis.log_step = std::log(config_.fluorosis_step);
    const auto tp = ps.params.tooth();
    const auto sp = ps.params.surface();
    for (const auto& person : psu->people) {
      auto s = model_.make_subject(person);
      if (s.r2 == 0) {
        for (int k = 0; k < config_.init_sweeps; ++k) {
          gibbs_sweep(s.mouth, graph, Level::Joint, tp, sp, s.z, s.spline, ps.rng);
        }
        model_.refresh(s);
      }
      ps.subjects.push_back(std::move(s));
    }
    state_.psus.push_back(std::move(ps));
  }
}

std::unique_ptr<PartitionRatio> Sampler::make_ratio() const {
  if (config_.ratio == RatioMode::Exact) return std::make_unique<ExactPartitionRatio>();
  return std::make_unique<NoisyPartitionRatio>(config_.aux);
}

double Sampler::log_prior(Block block, std::span<const double> theta) const {
  const auto& fams = model_.layout(block).families;
  const auto& hyper = state_.hyper[block];
  double lp = 0.0;
  for (std::size_t k = 0; k < fams.size(); ++k) {
    if (!fams[k].free) continue;
    const auto& f = fams[k];
    const double v = model_.pooled() ? prior_logpdf(theta[k], hyper[k].delta, hyper[k].sigma2, f.support)
                                              : prior_logpdf(theta[k], f.constants.lambda,
                                                             f.constants.tau * f.constants.tau, f.support);
    if (v == kNegInf) return kNegInf;
    lp += v;
  }
  return lp;
}

void Sampler::adapt(BlockAdapter& a, Block block, std::span<const double> theta, bool accepted,
                    std::uint64_t it) const {
  ++a.proposed;
  a.accepted += accepted;
  if (it > config_.burn_in) {
    ++a.proposed_after;
    a.accepted_after += accepted;
    return;
  }
  if (!config_.adapt) return;
  const auto free = model_.layout(block).free_indices();
  const double target = free.size() == 1 ? 0.44 : 0.234;
  ++a.since_reset;
  a.log_scale += std::pow(static_cast<double>(a.since_reset) + 1.0, -0.6) * ((accepted ? 1.0 : 0.0) - target);
  a.log_scale = std::clamp(a.log_scale, -12.0, 6.0);

  ++a.window_n;
  const double n = static_cast<double>(a.window_n);
  for (auto k : free) {
    const double d = theta[k] - a.mean[k];
    a.mean[k] += d / n;
    a.m2[k] += d * (theta[k] - a.mean[k]);
  }
  if (a.window_n < a.window) return;
  bool moved = false;
  for (auto k : free) moved |= a.m2[k] > 0.0;
  if (moved) {
    for (auto k : free) a.widths[k] = std::max(std::sqrt(a.m2[k] / (n - 1.0)), 1e-4);
    a.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(free.size())));
    a.since_reset = 0;
  }
  a.window *= 2;
  a.window_n = 0;
  std::fill(a.mean.begin(), a.mean.end(), 0.0);
  std::fill(a.m2.begin(), a.m2.end(), 0.0);
}

void Sampler::update_potts_block(PsuState& psu, Block block, PartitionRatio& ratio, std::uint64_t it) {
  auto& a = psu.adapters[static_cast<int>(block)];
  if (model_.layout(block).free_indices().empty()) return;
  std::vector<double> sd(a.widths.size());
  const double scale = std::exp(a.log_scale);
  for (std::size_t k = 0; k < sd.size(); ++k) sd[k] = a.widths[k] * scale;
  auto out = exchange_update(
      block == Block::Tooth ? Level::Tooth : Level::Surface, psu.params[block], sd, psu.subjects, model_.graph(),
      [&](std::span<const double> t) { return log_prior(block, t); }, ratio, psu.rng);
  if (out.accepted) psu.params[block] = std::move(out.theta);
  adapt(a, block, psu.params[block], out.accepted, it);
}

void Sampler::update_regression_block(PsuState& psu, Block block, std::uint64_t it) {
  auto& a = psu.adapters[static_cast<int>(block)];
  if (model_.layout(block).free_indices().empty()) return;
  auto& theta = psu.params[block];
  const double phi2 = psu.params.phi2;
  const bool logistic = block != Block::FluorosisModel;

  std::vector<std::vector<double>> rows(psu.subjects.size());
  std::vector<double> y(psu.subjects.size());
  for (std::size_t i = 0; i < psu.subjects.size(); ++i) {
    predictor(block, psu.subjects[i], rows[i]);
    y[i] = response(block, psu.subjects[i]);
  }
  auto loglik = [&](std::span<const double> t) {
    double ll = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double eta = 0.0;
      for (std::size_t k = 0; k < t.size(); ++k) eta += rows[i][k] * t[k];
      if (logistic) {
        ll += y[i] * eta - (eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)));
      } else {
        const double r = y[i] - eta;
        ll -= 0.5 * r * r / phi2;
      }
    }
    return ll;
  };

  std::vector<double> prop = theta;
  const double scale = std::exp(a.log_scale);
  for (std::size_t k = 0; k < prop.size(); ++k) {
    if (a.widths[k] > 0.0) prop[k] += a.widths[k] * scale * psu.rng.normal();
  }
  const double lp1 = log_prior(block, prop);
  bool accepted = false;
  if (lp1 != kNegInf) {
    const double la = lp1 + loglik(prop) - log_prior(block, theta) - loglik(theta);
    accepted = std::log(psu.rng.uniform()) < la;
  }
  if (accepted) theta = std::move(prop);
  adapt(a, block, theta, accepted, it);
}

void Sampler::update_phi2(PsuState& psu) {
  double a0 = model_.options().hyper.a, b0 = model_.options().hyper.b;
  if (auto it = model_.options().hyper.overrides.find("phi2"); it != model_.options().hyper.overrides.end()) {
    a0 = it->second.a;
    b0 = it->second.b;
  }
  const auto& gamma = psu.params[Block::FluorosisModel];
  double sse = 0.0;
  std::vector<double> row;
  for (const auto& s : psu.subjects) {
    predictor(Block::FluorosisModel, s, row);
    double eta = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) eta += row[k] * gamma[k];
    const double r = response(Block::FluorosisModel, s) - eta;
    sse += r * r;
  }
  psu.params.phi2 = draw_inv_gamma(a0 + 0.5 * static_cast<double>(psu.subjects.size()), b0 + 0.5 * sse, psu.rng);
}

void Sampler::psu_phase(PsuState& psu, std::uint64_t it) {
  auto ratio = make_ratio();
  auto& rng = psu.rng;
  const bool adapting = config_.adapt && it <= config_.burn_in;
  for (auto& s : psu.subjects) {
    if (s.r1 == 0 && model_.active(Block::PovertyModel)) impute_poverty(s, model_, psu.params, *ratio, rng);
    if (s.r2 != 0) continue;
    if (model_.active(Block::SealantModel)) impute_sealant(s, model_, psu.params, *ratio, rng);
    if (model_.active(Block::FluorosisModel)) {
      const bool acc = impute_fluorosis(s, model_, psu.params, psu.fluorosis.step(), *ratio, rng);
      ++psu.fluorosis.proposed;
      psu.fluorosis.accepted += acc;
      if (adapting) psu.fluorosis.adapt(acc, psu.fluorosis.proposed);
    }
    impute_outcomes(s, model_, psu.params, rng);
  }
  if (model_.active(Block::Tooth)) update_potts_block(psu, Block::Tooth, *ratio, it);
  if (model_.active(Block::Surface)) update_potts_block(psu, Block::Surface, *ratio, it);
  for (auto block : {Block::Norp, Block::Nord, Block::PovertyModel, Block::SealantModel, Block::FluorosisModel}) {
    if (model_.active(block)) update_regression_block(psu, block, it);
  }
  if (model_.active(Block::FluorosisModel)) update_phi2(psu);
}

void Sampler::hyper_phase() {
  if (!model_.pooled()) return;
  std::vector<double> values(state_.psus.size());
  for (int b = 0; b < kNumBlocks; ++b) {
    const auto block = static_cast<Block>(b);
    if (!model_.active(block)) continue;
    const auto& fams = model_.layout(block).families;
    for (std::size_t k = 0; k < fams.size(); ++k) {
      if (!fams[k].free) continue;
      for (std::size_t i = 0; i < state_.psus.size(); ++i) values[i] = state_.psus[i].params[block][k];
      update_family(state_.hyper[block][k], fams[k], values, state_.hyper_rng);
    }
  }
}

void Sampler::step() {
  const std::uint64_t it = state_.iteration + 1;
  auto& psus = state_.psus;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config_.threads), psus.size());
  if (workers <= 1) {
    for (auto& psu : psus) psu_phase(psu, it);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(psus.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < psus.size(); i = next++) {
          try {
            psu_phase(psus[i], it);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  hyper_phase();
  state_.iteration = it;
}

std::vector<SampleLabel> Sampler::labels() const {
  std::vector<SampleLabel> out;
  const bool pooled = model_.pooled();
  for (int b = 0; b < kNumBlocks; ++b) {
    const auto block = static_cast<Block>(b);
    if (!model_.active(block)) continue;
    for (const auto& f : model_.layout(block).families) {
      if (!f.free) continue;
      for (const auto& psu : state_.psus) out.push_back({f.name, "psu", psu.id});
      if (pooled) {
        out.push_back({f.name, "pooled", std::nullopt});
        out.push_back({f.name, "variance", std::nullopt});
      }
    }
  }
  if (model_.active(Block::FluorosisModel)) {
    for (const auto& psu : state_.psus) out.push_back({"phi2", "psu", psu.id});
  }
  return out;
}

void Sampler::values(std::vector<double>& out) const {
  out.clear();
  const bool pooled = model_.pooled();
  for (int b = 0; b < kNumBlocks; ++b) {
    const auto block = static_cast<Block>(b);
    if (!model_.active(block)) continue;
    const auto& fams = model_.layout(block).families;
    for (std::size_t k = 0; k < fams.size(); ++k) {
      if (!fams[k].free) continue;
      for (const auto& psu : state_.psus) out.push_back(psu.params[block][k]);
      if (pooled) {
        out.push_back(state_.hyper[block][k].delta);
        out.push_back(state_.hyper[block][k].sigma2);
      }
    }
  }
  if (model_.active(Block::FluorosisModel)) {
    for (const auto& psu : state_.psus) out.push_back(psu.params.phi2);
  }
}

AcceptanceReport Sampler::acceptance() const {
  AcceptanceReport r;
  for (int b = 0; b < kNumBlocks; ++b) {
    const auto block = static_cast<Block>(b);
    if (!model_.active(block) || model_.layout(block).free_indices().empty() || state_.psus.empty()) {
      r.block[b] = -1.0;
      continue;
    }
    double sum = 0.0;
    for (const auto& psu : state_.psus) sum += psu.adapters[b].rate_after_burn_in();
    r.block[b] = sum / static_cast<double>(state_.psus.size());
  }
  if (model_.active(Block::FluorosisModel)) {
    std::uint64_t p = 0, a = 0;
    for (const auto& psu : state_.psus) {
      p += psu.fluorosis.proposed;
      a += psu.fluorosis.accepted;
    }
    if (p) r.fluorosis = static_cast<double>(a) / static_cast<double>(p);
  }
  return r;
}

void Sampler::run(SampleSink* sink, const std::optional<std::filesystem::path>& checkpoint) {
  if (sink) sink->begin(labels());
  std::vector<double> row;
  bool saved = false;
  while (state_.iteration < config_.n_iterations) {
    step();
    const auto it = state_.iteration;
    saved = false;
    if (sink && config_.retains(it)) {
      values(row);
      sink->record(it, row);
    }
    if (config_.progress_every && it % config_.progress_every == 0) {
      std::uint64_t p = 0, a = 0;
      for (const auto& psu : state_.psus) {
        for (const auto& ad : psu.adapters) {
          p += ad.proposed;
          a += ad.accepted;
        }
      }
      std::fprintf(stderr, "iteration %llu/%llu acceptance %.3f\n", static_cast<unsigned long long>(it),
                   static_cast<unsigned long long>(config_.n_iterations),
                   p ? static_cast<double>(a) / static_cast<double>(p) : 0.0);
    }
    if (checkpoint && config_.checkpoint_every && it % config_.checkpoint_every == 0) {
      save_checkpoint(*checkpoint);
      saved = true;
    }
  }
  if (checkpoint && !saved) save_checkpoint(*checkpoint);
  if (sink) sink->finish();
}

PosteriorSamples run_chain(const SurveyDataset& dataset, const ModelOptions& options, const ChainConfig& config) {
  Sampler sampler(dataset, options, config);
  MemorySink sink;
  sampler.run(&sink);
  return std::move(sink.samples());
}

}  // namespace dentmrf
