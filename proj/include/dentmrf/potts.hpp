#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dentmrf/dentition.hpp"
#include "dentmrf/design_matrix.hpp"
#include "dentmrf/rng.hpp"

namespace dentmrf {

// Tooth codes: 1 present, 2 absent (disease), 3 absent (other).
// Surface codes: 1 healthy, 2 decayed, 3 filled; 0 marks the surfaces of a
// tooth that is not present.
inline constexpr std::uint8_t kToothPresent = 1;
inline constexpr std::uint8_t kNoSurface = 0;

struct MouthState {
  std::vector<std::uint8_t> x;  // per tooth slot
  std::vector<std::uint8_t> y;  // per surface slot

  static MouthState all_present(const DentitionGraph& graph, std::uint8_t surface_code = 1);
  bool operator==(const MouthState&) const = default;
};

// Throws std::invalid_argument if sizes or codes are inconsistent.
void check_state(const MouthState& state, const DentitionGraph& graph);

struct ToothParams {
  double psi = 0.0;
  double alpha_m = 0.0;
  double alpha_mbar = 0.0;
  CovariateVector beta_m{};
  CovariateVector beta_mbar{};
  std::vector<double> beta_spline;

  static constexpr std::size_t kFixedSize = 3 + 2 * kNumCovariates;
  std::size_t size() const { return kFixedSize + beta_spline.size(); }
  std::vector<double> flatten() const;
  static ToothParams unflatten(std::span<const double> flat);
};

struct SurfaceParams {
  std::array<double, kNumInteractions> psi{};
  double alpha_d = 0.0;
  double alpha_f = 0.0;
  CovariateVector beta_d{};
  CovariateVector beta_f{};
  std::vector<double> beta_spline;

  static constexpr std::size_t kFixedSize = kNumInteractions + 2 + 2 * kNumCovariates;
  std::size_t size() const { return kFixedSize + beta_spline.size(); }
  std::vector<double> flatten() const;
  static SurfaceParams unflatten(std::span<const double> flat);
};

// Per-individual reduction of the parameters: interaction strengths plus the
// linear field for each code (field[0] is always 0).
struct ToothField {
  double psi = 0.0;
  std::array<double, 3> field{};
};

struct SurfaceField {
  std::array<double, kNumInteractions> psi{};
  std::array<double, 3> field{};
};

ToothField make_field(const ToothParams& params, const CovariateVector& z, std::span<const double> spline);
SurfaceField make_field(const SurfaceParams& params, const CovariateVector& z, std::span<const double> spline);

// Integer sufficient statistics before the covariate expansion.
struct ToothCounts {
  int agree = 0;
  int disease = 0;
  int other = 0;
  bool operator==(const ToothCounts&) const = default;
};

struct SurfaceCounts {
  std::array<int, kNumInteractions> s{};
  int decayed = 0;
  int filled = 0;
  bool operator==(const SurfaceCounts&) const = default;
};

ToothCounts tooth_counts(const MouthState& state, const DentitionGraph& graph);
// s_h counts agreeing pairs of type h whose teeth are both present.
SurfaceCounts surface_counts(const MouthState& state, const DentitionGraph& graph);

// Sufficient statistics laid out like ToothParams::flatten / SurfaceParams::flatten.
std::vector<double> tooth_suff_stats(const MouthState& state, const DentitionGraph& graph, const CovariateVector& z,
                                     std::span<const double> spline);
std::vector<double> surface_suff_stats(const MouthState& state, const DentitionGraph& graph,
                                       const CovariateVector& z, std::span<const double> spline);

SpatialStats spatial_stats(const MouthState& state, const DentitionGraph& graph);

double tooth_log_unnorm(const MouthState& state, const DentitionGraph& graph, const ToothParams& params,
                        const CovariateVector& z, std::span<const double> spline);
double surface_log_unnorm(const MouthState& state, const DentitionGraph& graph, const SurfaceParams& params,
                          const CovariateVector& z, std::span<const double> spline);

double log_unnorm(const MouthState& state, const DentitionGraph& graph, const ToothField& field);
double log_unnorm(const MouthState& state, const DentitionGraph& graph, const SurfaceField& field);
// Exponent difference between two fields evaluated at the same state.
double log_unnorm_diff(const ToothCounts& counts, const ToothField& a, const ToothField& b);
double log_unnorm_diff(const SurfaceCounts& counts, const SurfaceField& a, const SurfaceField& b);

// Exhaustive enumeration, for instances with at most 3^13 configurations.
inline constexpr std::uint64_t kMaxEnumerationStates = 1594323;  // 3^13

class EnumerationTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

double exact_log_partition(const DentitionGraph& graph, const ToothField& field);
// Surface level conditions on the tooth codes `x`.
double exact_log_partition(const DentitionGraph& graph, std::span<const std::uint8_t> x, const SurfaceField& field);
double exact_log_partition(const DentitionGraph& graph, const ToothParams& params, const CovariateVector& z,
                           std::span<const double> spline);
double exact_log_partition(const DentitionGraph& graph, std::span<const std::uint8_t> x, const SurfaceParams& params,
                           const CovariateVector& z, std::span<const double> spline);

// Probabilities of every configuration, indexed in base 3 with slot 0 the
// least significant digit (digit d means code d+1). For the surface level
// only the surfaces of present teeth are enumerated, in slot order.
std::vector<double> exact_distribution(const DentitionGraph& graph, const ToothField& field);
std::vector<double> exact_distribution(const DentitionGraph& graph, std::span<const std::uint8_t> x,
                                       const SurfaceField& field);
std::uint64_t tooth_state_index(const MouthState& state);
std::uint64_t surface_state_index(const MouthState& state);

// Full conditional of one site, holding the rest fixed.
std::array<double, 3> tooth_site_conditional(const MouthState& state, const DentitionGraph& graph, int tooth_slot,
                                             const ToothField& field);
// Throws std::logic_error when the owning tooth is not present.
std::array<double, 3> surface_site_conditional(const MouthState& state, const DentitionGraph& graph,
                                               int surface_slot, const SurfaceField& field);

std::uint8_t draw_code(const std::array<double, 3>& probs, Rng& rng);

// Systematic scan over teeth in arch order. A tooth that becomes present gets
// its surfaces drawn one by one from their site conditionals under
// `surfaces` (healthy when null); a tooth that leaves drops its surfaces.
// A state with an empty `y` is treated as tooth-only.
void tooth_sweep(MouthState& state, const DentitionGraph& graph, const ToothField& field, Rng& rng,
                 const SurfaceField* surfaces = nullptr);
void surface_sweep(MouthState& state, const DentitionGraph& graph, const SurfaceField& field, Rng& rng);

// Exponentiated fields for repeated sweeps under one field.
struct ToothWeights {
  std::array<double, 3> field{};
  double psi = 1.0;
  // Cumulative site probabilities keyed by the codes of up to two neighbours
  // (0 = no neighbour), 4 * a + b.
  std::array<std::array<double, 2>, 16> cumulative{};
  explicit ToothWeights(const ToothField& f);
};
struct SurfaceWeights {
  std::array<double, 3> field{};
  std::array<double, kNumInteractions> psi{};
  explicit SurfaceWeights(const SurfaceField& f);
};
void tooth_sweep(MouthState& state, const DentitionGraph& graph, const ToothWeights& w, Rng& rng,
                 const SurfaceField* surfaces = nullptr);
void surface_sweep(MouthState& state, const DentitionGraph& graph, const SurfaceWeights& w, Rng& rng);
// Draws fresh surfaces for a tooth that has just become present.
void init_tooth_surfaces(MouthState& state, const DentitionGraph& graph, int tooth_slot, const SurfaceField* field,
                         Rng& rng);

enum class Level { Tooth, Surface, Joint };

// One systematic-scan update at the requested level; Joint runs a tooth
// sweep followed by a surface sweep.
void gibbs_sweep(MouthState& state, const DentitionGraph& graph, Level level, const ToothParams& tooth,
                 const SurfaceParams& surface, const CovariateVector& z, std::span<const double> spline, Rng& rng);

}  // namespace dentmrf
