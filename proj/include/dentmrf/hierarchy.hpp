#pragma once

#include <array>
#include <span>
#include <vector>

#include "dentmrf/model.hpp"
#include "dentmrf/rng.hpp"

namespace dentmrf {

struct NormalPosterior {
  double mean = 0.0;
  double var = 1.0;
};

struct InvGammaPosterior {
  double shape = 1.0;
  double rate = 1.0;
};

// Conditional of a group mean given I group members with common variance
// sigma2 and a N(lambda, tau^2) prior. With I = 0 this is the prior.
NormalPosterior group_mean_posterior(std::span<const double> values, double sigma2, double lambda, double tau);
double update_group_mean(std::span<const double> values, double sigma2, double lambda, double tau, Rng& rng);

// Conditional of a group variance under an IG(a, b) prior (shape a, rate b).
InvGammaPosterior group_var_posterior(std::span<const double> values, double delta, double a, double b);
double update_group_var(std::span<const double> values, double delta, double a, double b, Rng& rng);

double draw_inv_gamma(double shape, double rate, Rng& rng);

// log Phi(x), accurate far into the lower tail.
double log_normal_cdf(double x);

// Normal log-density, or the zero-truncated one for nonnegative families
// (-inf below zero).
double prior_logpdf(double theta, double delta, double sigma2, Support support);

// Group updates for zero-truncated members: the conjugate draw is used as an
// independence proposal corrected for the truncation normalizer, followed by
// a slice-sampling step on the same conditional.
double update_group_mean_truncated(std::span<const double> values, double current, double sigma2, double lambda,
                                   double tau, Rng& rng);
double update_group_var_truncated(std::span<const double> values, double delta, double current, double a, double b,
                                  Rng& rng);

struct HyperParam {
  double delta = 0.0;
  double sigma2 = 1.0;
  bool operator==(const HyperParam&) const = default;
};

// Group mean and variance for every family of every block (entries of
// families that are not free are carried but never updated).
struct HyperState {
  std::array<std::vector<HyperParam>, kNumBlocks> blocks;

  std::vector<HyperParam>& operator[](Block b) { return blocks[static_cast<int>(b)]; }
  const std::vector<HyperParam>& operator[](Block b) const { return blocks[static_cast<int>(b)]; }
  bool operator==(const HyperState&) const = default;
};

HyperState initial_hyper(const ModelContext& model);

// One pass of group updates for family `index` of `block`, given the current
// PSU-level values.
void update_family(HyperParam& hyper, const FamilyInfo& family, std::span<const double> values, Rng& rng);

}  // namespace dentmrf
