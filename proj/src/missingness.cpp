#include "dentmrf/missingness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dentmrf {

namespace {

// log(1 + e^eta) without overflow.
double log1pexp(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

bool is_logistic(Block b) { return b != Block::FluorosisModel; }

double measurement_delta(const Subject& s, const ModelContext& model, const PsuParams& params,
                         const CovariateVector& z_from, const CovariateVector& z_to, PartitionRatio& ratio,
                         Rng& rng) {
  const auto& graph = model.graph();
  double d = 0.0;
  if (model.active(Block::Tooth)) {
    const auto tp = params.tooth();
    const auto f0 = make_field(tp, z_from, s.spline);
    const auto f1 = make_field(tp, z_to, s.spline);
    d += log_unnorm_diff(s.tooth_counts, f1, f0) + ratio.log_tooth(s.mouth, graph, f0, f1, rng);
  }
  if (model.active(Block::Surface)) {
    const auto sp = params.surface();
    const auto f0 = make_field(sp, z_from, s.spline);
    const auto f1 = make_field(sp, z_to, s.spline);
    d += log_unnorm_diff(s.surface_counts, f1, f0) + ratio.log_surface(s.mouth, graph, f0, f1, rng);
  }
  return d;
}

template <typename Set>
void impute_binary(Subject& s, const ModelContext& model, const PsuParams& params, PartitionRatio& ratio, Rng& rng,
                   Set set) {
  set(s, 0);
  const double g0 = tractable_log_factor(model, s, params);
  const auto z0 = s.z;
  set(s, 1);
  const double g1 = tractable_log_factor(model, s, params);
  const auto z1 = s.z;
  const double delta = g1 - g0 + measurement_delta(s, model, params, z0, z1, ratio, rng);
  set(s, rng.uniform() < inv_logit(delta) ? 1 : 0);
}

}  // namespace

double inv_logit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double selection_prob(std::span<const double> u, std::span<const double> theta) {
  if (u.size() != theta.size()) {
    throw std::invalid_argument("predictor has " + std::to_string(u.size()) + " entries but coefficients have " +
                                std::to_string(theta.size()));
  }
  return inv_logit(dot(u, theta));
}

double selection_loglik(std::span<const double> theta, const std::vector<std::vector<double>>& u,
                        std::span<const int> r, std::vector<double>* grad) {
  if (u.size() != r.size()) throw std::invalid_argument("predictor rows and responses differ in number");
  if (grad) grad->assign(theta.size(), 0.0);
  double ll = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i].size() != theta.size()) throw std::invalid_argument("predictor row has wrong length");
    const double eta = dot(u[i], theta);
    ll += r[i] * eta - log1pexp(eta);
    if (grad) {
      const double resid = r[i] - inv_logit(eta);
      for (std::size_t k = 0; k < theta.size(); ++k) (*grad)[k] += resid * u[i][k];
    }
  }
  return ll;
}

SelectionParams selection_params(const PsuParams& p) { return {p[Block::Norp], p[Block::Nord]}; }

ImputationParams imputation_params(const PsuParams& p) {
  return {p[Block::PovertyModel], p[Block::SealantModel], p[Block::FluorosisModel], p.phi2};
}

void predictor(Block block, const Subject& s, std::vector<double>& out) {
  const auto& layout = predictor_layout(block);
  out.clear();
  out.push_back(1.0);
  for (auto c : layout.covariates) out.push_back(s.z[static_cast<int>(c)]);
  out.insert(out.end(), s.stats.begin(), s.stats.end());
  if (block == Block::Norp) out.push_back(s.z[static_cast<int>(Covariate::Poverty)]);
  if (block == Block::Nord) out.push_back(s.r1);
}

std::vector<double> predictor(Block block, const Subject& s) {
  std::vector<double> out;
  predictor(block, s, out);
  return out;
}

double response(Block block, const Subject& s) {
  switch (block) {
    case Block::Norp: return s.r1;
    case Block::Nord: return s.r2;
    case Block::PovertyModel: return s.poverty;
    case Block::SealantModel: return s.sealant;
    case Block::FluorosisModel: return s.z[static_cast<int>(Covariate::Fluorosis)];
    default: throw std::invalid_argument("block " + block_name(block) + " is not a regression");
  }
}

double regression_loglik(Block block, const Subject& s, std::span<const double> coef, double phi2) {
  thread_local std::vector<double> u;
  predictor(block, s, u);
  if (u.size() != coef.size()) throw std::invalid_argument("coefficient length does not match predictor");
  const double eta = dot(u, coef);
  const double y = response(block, s);
  if (is_logistic(block)) return y * eta - log1pexp(eta);
  if (!(phi2 > 0.0)) throw std::domain_error("fluorosis variance must be positive");
  const double r = y - eta;
  return -0.5 * std::log(2.0 * std::numbers::pi * phi2) - 0.5 * r * r / phi2;
}

double tractable_log_factor(const ModelContext& model, const Subject& s, const PsuParams& params) {
  double total = 0.0;
  for (auto block : {Block::Norp, Block::Nord, Block::PovertyModel, Block::SealantModel, Block::FluorosisModel}) {
    if (model.active(block)) total += regression_loglik(block, s, params[block], params.phi2);
  }
  return total;
}

void impute_poverty(Subject& s, const ModelContext& model, const PsuParams& params, PartitionRatio& ratio,
                    Rng& rng) {
  if (s.r1 != 0) throw std::logic_error("poverty is observed for this subject");
  impute_binary(s, model, params, ratio, rng, [&](Subject& t, int v) { model.set_poverty(t, v); });
}

void impute_sealant(Subject& s, const ModelContext& model, const PsuParams& params, PartitionRatio& ratio,
                    Rng& rng) {
  if (s.r2 != 0) throw std::logic_error("sealant is observed for this subject");
  impute_binary(s, model, params, ratio, rng, [&](Subject& t, int v) { model.set_sealant(t, v); });
}

void FluorosisTuner::adapt(bool was_accepted, std::uint64_t t) {
  const double gain = 1.0 / std::pow(static_cast<double>(std::max<std::uint64_t>(t, 1)), 0.6);
  log_step += gain * ((was_accepted ? 1.0 : 0.0) - target);
  log_step = std::clamp(log_step, std::log(1e-4), std::log(1e3));
}

bool impute_fluorosis(Subject& s, const ModelContext& model, const PsuParams& params, double step,
                      PartitionRatio& ratio, Rng& rng) {
  if (s.r2 != 0) throw std::logic_error("fluorosis is observed for this subject");
  if (!(params.phi2 > 0.0)) throw std::domain_error("fluorosis variance must be positive");
  const int k = static_cast<int>(Covariate::Fluorosis);
  const double current = s.z[k];
  const double proposal = current + step * rng.normal();
  const double g0 = tractable_log_factor(model, s, params);
  const auto z0 = s.z;
  model.set_fluorosis(s, proposal);
  const double g1 = tractable_log_factor(model, s, params);
  const auto z1 = s.z;
  const double log_alpha = g1 - g0 + measurement_delta(s, model, params, z0, z1, ratio, rng);
  if (std::log(rng.uniform()) < log_alpha) return true;
  model.set_fluorosis(s, current);
  return false;
}

void impute_outcomes(Subject& s, const ModelContext& model, const PsuParams& params, Rng& rng) {
  if (s.r2 != 0) throw std::logic_error("outcomes are observed for this subject");
  const auto& graph = model.graph();
  const auto tf = make_field(params.tooth(), s.z, s.spline);
  const auto sf = make_field(params.surface(), s.z, s.spline);
  const bool surfaces = model.active(Block::Surface);

  if (!model.factors_use_stats(params)) {
    tooth_sweep(s.mouth, graph, tf, rng, &sf);
    if (surfaces) surface_sweep(s.mouth, graph, sf, rng);
    model.refresh(s);
    return;
  }

  double g = tractable_log_factor(model, s, params);
  std::vector<std::uint8_t> saved;
  for (int t = 0; t < static_cast<int>(graph.num_teeth()); ++t) {
    const auto before = s.mouth.x[t];
    const auto after = draw_code(tooth_site_conditional(s.mouth, graph, t, tf), rng);
    if (after == before) continue;
    const auto [first, last] = graph.tooth_surfaces(t);
    saved.assign(s.mouth.y.begin() + first, s.mouth.y.begin() + last);
    s.mouth.x[t] = after;
    if (before == kToothPresent) {
      std::fill(s.mouth.y.begin() + first, s.mouth.y.begin() + last, kNoSurface);
    } else if (after == kToothPresent) {
      init_tooth_surfaces(s.mouth, graph, t, &sf, rng);
    }
    model.refresh(s);
    const double g_new = tractable_log_factor(model, s, params);
    if (std::log(rng.uniform()) < g_new - g) {
      g = g_new;
    } else {
      s.mouth.x[t] = before;
      std::copy(saved.begin(), saved.end(), s.mouth.y.begin() + first);
      model.refresh(s);
    }
  }
  if (!surfaces) return;
  for (int k = 0; k < static_cast<int>(graph.num_surfaces()); ++k) {
    const auto before = s.mouth.y[k];
    if (before == kNoSurface) continue;
    const auto after = draw_code(surface_site_conditional(s.mouth, graph, k, sf), rng);
    if (after == before) continue;
    s.mouth.y[k] = after;
    model.refresh(s);
    const double g_new = tractable_log_factor(model, s, params);
    if (std::log(rng.uniform()) < g_new - g) {
      g = g_new;
    } else {
      s.mouth.y[k] = before;
      model.refresh(s);
    }
  }
}

}  // namespace dentmrf
