#include "dentmrf/ratio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dentmrf {

namespace {

bool same(const ToothField& a, const ToothField& b) { return a.psi == b.psi && a.field == b.field; }
bool same(const SurfaceField& a, const SurfaceField& b) { return a.psi == b.psi && a.field == b.field; }

}  // namespace

double log_mean_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_mean_exp of an empty set");
  const double m = *std::max_element(values.begin(), values.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s / static_cast<double>(values.size()));
}

double noisy_log_ratio(std::span<const double> theta, std::span<const double> theta_prop,
                       const std::vector<std::vector<double>>& aux_stats) {
  if (theta.size() != theta_prop.size()) throw std::invalid_argument("parameter vectors differ in length");
  std::vector<double> v;
  v.reserve(aux_stats.size());
  for (const auto& s : aux_stats) {
    if (s.size() != theta.size()) throw std::invalid_argument("auxiliary statistic has wrong length");
    double e = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) e += (theta[k] - theta_prop[k]) * s[k];
    v.push_back(e);
  }
  return log_mean_exp(v);
}

double noisy_ratio(std::span<const double> theta, std::span<const double> theta_prop,
                   const std::vector<std::vector<double>>& aux_stats) {
  return std::exp(noisy_log_ratio(theta, theta_prop, aux_stats));
}

NoisyPartitionRatio::NoisyPartitionRatio(AuxSettings settings) : settings_(settings) {
  if (settings_.n_aux < 1) throw std::invalid_argument("n_aux must be at least 1");
  if (settings_.sweeps < 0) throw std::invalid_argument("aux sweeps must be nonnegative");
  if (settings_.mode == AuxMode::Thinned && settings_.thin < 1) throw std::invalid_argument("aux thin must be >= 1");
}

template <typename Field, typename Sweep, typename Diff>
double NoisyPartitionRatio::estimate(MouthState& aux, const MouthState& start, const Field& from, const Field& to,
                                     Sweep sweep, Diff diff) {
  values_.resize(settings_.n_aux);
  if (settings_.mode == AuxMode::Independent) {
    for (int m = 0; m < settings_.n_aux; ++m) {
      aux.x = start.x;
      if (!aux.y.empty()) aux.y = start.y;
      for (int k = 0; k < settings_.sweeps; ++k) sweep(aux);
      values_[m] = diff(aux, from, to);
    }
  } else {
    aux.x = start.x;
    if (!aux.y.empty()) aux.y = start.y;
    for (int k = 0; k < settings_.sweeps; ++k) sweep(aux);
    for (int m = 0; m < settings_.n_aux; ++m) {
      if (m > 0) {
        for (int k = 0; k < settings_.thin; ++k) sweep(aux);
      }
      values_[m] = diff(aux, from, to);
    }
  }
  return log_mean_exp(values_);
}

double NoisyPartitionRatio::log_tooth(const MouthState& start, const DentitionGraph& graph, const ToothField& from,
                                      const ToothField& to, Rng& rng) {
  if (same(from, to)) return 0.0;
  aux_.y.clear();
  const ToothWeights w(to);
  return estimate(
      aux_, start, from, to, [&](MouthState& s) { tooth_sweep(s, graph, w, rng); },
      [&](const MouthState& s, const ToothField& a, const ToothField& b) {
        return log_unnorm_diff(tooth_counts(s, graph), a, b);
      });
}

double NoisyPartitionRatio::log_surface(const MouthState& start, const DentitionGraph& graph,
                                        const SurfaceField& from, const SurfaceField& to, Rng& rng) {
  if (same(from, to)) return 0.0;
  aux_.y = start.y;
  const SurfaceWeights w(to);
  return estimate(
      aux_, start, from, to, [&](MouthState& s) { surface_sweep(s, graph, w, rng); },
      [&](const MouthState& s, const SurfaceField& a, const SurfaceField& b) {
        return log_unnorm_diff(surface_counts(s, graph), a, b);
      });
}

double ExactPartitionRatio::log_tooth(const MouthState&, const DentitionGraph& graph, const ToothField& from,
                                      const ToothField& to, Rng&) {
  if (same(from, to)) return 0.0;
  return exact_log_partition(graph, from) - exact_log_partition(graph, to);
}

double ExactPartitionRatio::log_surface(const MouthState& start, const DentitionGraph& graph,
                                        const SurfaceField& from, const SurfaceField& to, Rng&) {
  if (same(from, to)) return 0.0;
  return exact_log_partition(graph, start.x, from) - exact_log_partition(graph, start.x, to);
}

}  // namespace dentmrf
