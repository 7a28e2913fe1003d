#pragma once

#include <span>
#include <vector>

#include "dentmrf/potts.hpp"
#include "dentmrf/rng.hpp"

namespace dentmrf {

// log of the mean of exp(values), computed stably.
double log_mean_exp(std::span<const double> values);

// Importance estimate of kappa(theta)/kappa(theta_prop) from sufficient
// statistics of auxiliary draws made at theta_prop:
// (1/M) sum_m exp((theta - theta_prop)' S_m).
double noisy_log_ratio(std::span<const double> theta, std::span<const double> theta_prop,
                       const std::vector<std::vector<double>>& aux_stats);
double noisy_ratio(std::span<const double> theta, std::span<const double> theta_prop,
                   const std::vector<std::vector<double>>& aux_stats);

enum class AuxMode { Independent, Thinned };

struct AuxSettings {
  int n_aux = 20;      // M
  int sweeps = 50;     // sweeps per auxiliary draw (burn-in of the single chain when thinned)
  AuxMode mode = AuxMode::Independent;
  int thin = 5;        // sweeps between retained draws when thinned
};

// Estimates log[kappa(from) / kappa(to)] for one individual. The surface
// level conditions on the tooth codes of `start`.
class PartitionRatio {
 public:
  virtual ~PartitionRatio() = default;
  virtual double log_tooth(const MouthState& start, const DentitionGraph& graph, const ToothField& from,
                           const ToothField& to, Rng& rng) = 0;
  virtual double log_surface(const MouthState& start, const DentitionGraph& graph, const SurfaceField& from,
                             const SurfaceField& to, Rng& rng) = 0;
};

// Auxiliary Gibbs chains at `to`, hot-started from `start`. Not thread-safe;
// use one instance per worker.
class NoisyPartitionRatio final : public PartitionRatio {
 public:
  explicit NoisyPartitionRatio(AuxSettings settings);
  double log_tooth(const MouthState& start, const DentitionGraph& graph, const ToothField& from,
                   const ToothField& to, Rng& rng) override;
  double log_surface(const MouthState& start, const DentitionGraph& graph, const SurfaceField& from,
                     const SurfaceField& to, Rng& rng) override;
  const AuxSettings& settings() const { return settings_; }

 private:
  template <typename Field, typename Sweep, typename Diff>
  double estimate(MouthState& aux, const MouthState& start, const Field& from, const Field& to, Sweep sweep,
                  Diff diff);

  AuxSettings settings_;
  MouthState aux_;
  std::vector<double> values_;
};

// Exhaustive enumeration; only for small dentitions.
class ExactPartitionRatio final : public PartitionRatio {
 public:
  double log_tooth(const MouthState& start, const DentitionGraph& graph, const ToothField& from,
                   const ToothField& to, Rng& rng) override;
  double log_surface(const MouthState& start, const DentitionGraph& graph, const SurfaceField& from,
                     const SurfaceField& to, Rng& rng) override;
};

}  // namespace dentmrf
