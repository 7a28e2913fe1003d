#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dentmrf/model.hpp"
#include "dentmrf/ratio.hpp"
#include "dentmrf/rng.hpp"

namespace dentmrf {

double inv_logit(double eta);
// Logistic probability sigma(theta' u); throws std::invalid_argument when the
// lengths differ.
double selection_prob(std::span<const double> u, std::span<const double> theta);

// Sum of Bernoulli log-likelihoods over rows `u` with responses `r`; fills
// `grad` (same length as theta) when non-null.
double selection_loglik(std::span<const double> theta, const std::vector<std::vector<double>>& u,
                        std::span<const int> r, std::vector<double>* grad = nullptr);

struct SelectionParams {
  std::vector<double> norp;  // predictor coefficients then the poverty coefficient
  std::vector<double> nord;  // predictor coefficients then the r1 coefficient
};

struct ImputationParams {
  std::vector<double> poverty;
  std::vector<double> sealant;
  std::vector<double> fluorosis;
  double phi2 = 1.0;
};

SelectionParams selection_params(const PsuParams& params);
ImputationParams imputation_params(const PsuParams& params);

// Design row of a regression block for the subject's current values. The
// selection rows carry the extra (poverty or r1) term last.
std::vector<double> predictor(Block block, const Subject& subject);
void predictor(Block block, const Subject& subject, std::vector<double>& out);
// Response of a regression block: r1, r2, poverty, sealant or the
// standardized fluorosis value.
double response(Block block, const Subject& subject);

// Log-likelihood contribution of one subject to one regression block.
double regression_loglik(Block block, const Subject& subject, std::span<const double> coef, double phi2);

// Sum of the active regression contributions; these are the tractable
// factors multiplying the Potts likelihood.
double tractable_log_factor(const ModelContext& model, const Subject& subject, const PsuParams& params);

// Two-point Gibbs draws for the missing binary covariates.
void impute_poverty(Subject& subject, const ModelContext& model, const PsuParams& params, PartitionRatio& ratio,
                    Rng& rng);
void impute_sealant(Subject& subject, const ModelContext& model, const PsuParams& params, PartitionRatio& ratio,
                    Rng& rng);

// Random-walk step size adapted toward an acceptance rate during burn-in.
struct FluorosisTuner {
  double log_step = std::log(0.5);
  double target = 0.44;
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;

  double step() const { return std::exp(log_step); }
  // Robbins-Monro update after proposal number `t` (1-based).
  void adapt(bool was_accepted, std::uint64_t t);
  bool operator==(const FluorosisTuner&) const = default;
};

// Metropolis update of the standardized fluorosis value; returns acceptance.
bool impute_fluorosis(Subject& subject, const ModelContext& model, const PsuParams& params, double step,
                      PartitionRatio& ratio, Rng& rng);

// One scan over the tooth and surface codes of an unexamined subject. Sites
// are proposed from their Potts conditionals and accepted by the ratio of the
// tractable factors; with no dependence on the spatial statistics this is a
// plain Gibbs sweep.
void impute_outcomes(Subject& subject, const ModelContext& model, const PsuParams& params, Rng& rng);

}  // namespace dentmrf
