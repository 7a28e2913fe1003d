#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dentmrf {

// Reproducible random stream. The only state is the engine, so a stream can
// be serialized and restored exactly (no cached normal deviates).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  // Stream `index` of the family keyed by `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  // log of a Gamma(shape, 1) draw; stable for very small shapes.
  double log_gamma(double shape);
  double gamma(double shape);

  std::string serialize() const;
  void deserialize(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

// n independent streams derived from (seed, 0..n-1).
std::vector<Rng> rng_streams(std::uint64_t seed, std::size_t n);

}  // namespace dentmrf
