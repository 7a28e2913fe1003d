#include "dentmrf/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dentmrf {

NormalPosterior group_mean_posterior(std::span<const double> values, double sigma2, double lambda, double tau) {
  if (!(sigma2 > 0.0)) throw std::domain_error("group variance must be positive");
  if (!(tau > 0.0)) throw std::domain_error("tau must be positive");
  const double tau2 = tau * tau;
  if (values.empty()) return {lambda, tau2};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  NormalPosterior post;
  if (std::isinf(sigma2)) return {lambda, tau2};
  post.var = 1.0 / (1.0 / tau2 + n / sigma2);
  post.mean = post.var * (lambda / tau2 + sum / sigma2);
  return post;
}

double update_group_mean(std::span<const double> values, double sigma2, double lambda, double tau, Rng& rng) {
  const auto p = group_mean_posterior(values, sigma2, lambda, tau);
  return p.mean + std::sqrt(p.var) * rng.normal();
}

InvGammaPosterior group_var_posterior(std::span<const double> values, double delta, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("inverse-gamma constants must be positive");
  double sse = 0.0;
  for (double v : values) sse += (v - delta) * (v - delta);
  return {a + 0.5 * static_cast<double>(values.size()), b + 0.5 * sse};
}

double draw_inv_gamma(double shape, double rate, Rng& rng) {
  // rate / G with G ~ Gamma(shape, 1), in logs to survive tiny shapes
  const double v = std::exp(std::log(rate) - rng.log_gamma(shape));
  return std::clamp(v, std::numeric_limits<double>::min(), std::numeric_limits<double>::max());
}

double update_group_var(std::span<const double> values, double delta, double a, double b, Rng& rng) {
  const auto p = group_var_posterior(values, delta, a, b);
  return draw_inv_gamma(p.shape, p.rate, rng);
}

double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // asymptotic series of the Mills ratio
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double prior_logpdf(double theta, double delta, double sigma2, Support support) {
  if (!(sigma2 > 0.0)) throw std::domain_error("prior variance must be positive");
  const double r = theta - delta;
  double lp = -0.5 * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * r * r / sigma2;
  if (support == Support::NonNegative) {
    if (theta < 0.0) return -std::numeric_limits<double>::infinity();
    lp -= log_normal_cdf(delta / std::sqrt(sigma2));
  }
  return lp;
}

namespace {

// Univariate slice sampler with stepping out (Neal 2003).
template <typename LogF>
double slice_step(double x0, LogF logf, double width, Rng& rng) {
  const double y = logf(x0) + std::log(rng.uniform());
  double lo = x0 - width * rng.uniform();
  double hi = lo + width;
  for (int k = 0; k < 64 && logf(lo) > y; ++k) lo -= width;
  for (int k = 0; k < 64 && logf(hi) > y; ++k) hi += width;
  for (int k = 0; k < 200; ++k) {
    const double x = lo + (hi - lo) * rng.uniform();
    if (logf(x) > y) return x;
    (x < x0 ? lo : hi) = x;
  }
  return x0;
}

double truncated_loglik(std::span<const double> values, double delta, double sigma2) {
  double ll = 0.0;
  for (double v : values) ll += prior_logpdf(v, delta, sigma2, Support::NonNegative);
  return ll;
}

}  // namespace

// The conjugate draw serves as an independence proposal; it mixes poorly when
// the members crowd the boundary, so a slice step on the exact conditional
// follows it.
double update_group_mean_truncated(std::span<const double> values, double current, double sigma2, double lambda,
                                   double tau, Rng& rng) {
  const double proposal = update_group_mean(values, sigma2, lambda, tau, rng);
  const double sd = std::sqrt(sigma2);
  const double n = static_cast<double>(values.size());
  const double log_alpha = n * (log_normal_cdf(current / sd) - log_normal_cdf(proposal / sd));
  double delta = std::log(rng.uniform()) < log_alpha ? proposal : current;
  const double tau2 = tau * tau;
  auto logf = [&](double d) {
    return -0.5 * (d - lambda) * (d - lambda) / tau2 + truncated_loglik(values, d, sigma2);
  };
  const auto conj = group_mean_posterior(values, sigma2, lambda, tau);
  return slice_step(delta, logf, 2.0 * std::sqrt(conj.var), rng);
}

double update_group_var_truncated(std::span<const double> values, double delta, double current, double a, double b,
                                  Rng& rng) {
  const double proposal = update_group_var(values, delta, a, b, rng);
  const double n = static_cast<double>(values.size());
  const double log_alpha =
      n * (log_normal_cdf(delta / std::sqrt(current)) - log_normal_cdf(delta / std::sqrt(proposal)));
  const double s2 = std::log(rng.uniform()) < log_alpha ? proposal : current;
  // Slice on log(sigma2); the IG density picks up the Jacobian.
  auto logf = [&](double u) {
    const double v = std::exp(u);
    if (!(v > 0.0) || !std::isfinite(v)) return -std::numeric_limits<double>::infinity();
    return -a * u - b / v + truncated_loglik(values, delta, v);
  };
  return std::exp(slice_step(std::log(s2), logf, 1.0, rng));
}

HyperState initial_hyper(const ModelContext& model) {
  HyperState h;
  for (int b = 0; b < kNumBlocks; ++b) {
    for (const auto& f : model.layout(static_cast<Block>(b)).families) {
      h.blocks[b].push_back(HyperParam{f.initial, 1.0});
    }
  }
  return h;
}

void update_family(HyperParam& hyper, const FamilyInfo& family, std::span<const double> values, Rng& rng) {
  const auto& c = family.constants;
  if (family.support == Support::NonNegative) {
    hyper.delta = update_group_mean_truncated(values, hyper.delta, hyper.sigma2, c.lambda, c.tau, rng);
    hyper.sigma2 = update_group_var_truncated(values, hyper.delta, hyper.sigma2, c.a, c.b, rng);
  } else {
    hyper.delta = update_group_mean(values, hyper.sigma2, c.lambda, c.tau, rng);
    hyper.sigma2 = update_group_var(values, hyper.delta, c.a, c.b, rng);
  }
}

}  // namespace dentmrf
