#include "dentmrf/potts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dentmrf {

namespace {

double dot(const CovariateVector& a, const CovariateVector& b) {
  double s = 0.0;
  for (int r = 0; r < kNumCovariates; ++r) s += a[r] * b[r];
  return s;
}

double spline_term(std::span<const double> coef, std::span<const double> basis) {
  if (coef.empty()) return 0.0;
  if (coef.size() != basis.size()) throw std::invalid_argument("spline coefficient/basis size mismatch");
  double s = 0.0;
  for (std::size_t q = 0; q < coef.size(); ++q) s += coef[q] * basis[q];
  return s;
}

std::array<double, 3> softmax3(double a, double b, double c) {
  const double m = std::max({a, b, c});
  const double ea = std::exp(a - m), eb = std::exp(b - m), ec = std::exp(c - m);
  const double inv = 1.0 / (ea + eb + ec);
  return {ea * inv, eb * inv, ec * inv};
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::uint64_t checked_state_count(std::size_t sites) {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < sites; ++i) {
    n *= 3;
    if (n > kMaxEnumerationStates) {
      throw EnumerationTooLarge("enumeration over " + std::to_string(sites) + " sites exceeds 3^13 states");
    }
  }
  return n;
}

// Odometer increment over codes 1..3; returns false after the last state.
template <typename Slots>
bool advance(std::vector<std::uint8_t>& codes, const Slots& slots) {
  for (auto s : slots) {
    if (codes[s] < 3) {
      ++codes[s];
      return true;
    }
    codes[s] = 1;
  }
  return false;
}

std::vector<int> present_surface_slots(const DentitionGraph& graph, std::span<const std::uint8_t> x) {
  std::vector<int> slots;
  for (std::size_t t = 0; t < graph.num_teeth(); ++t) {
    if (x[t] != kToothPresent) continue;
    auto [first, last] = graph.tooth_surfaces(static_cast<int>(t));
    for (int s = first; s < last; ++s) slots.push_back(s);
  }
  return slots;
}

void check_x(const DentitionGraph& graph, std::span<const std::uint8_t> x) {
  if (x.size() != graph.num_teeth()) throw std::invalid_argument("tooth state size does not match dentition");
  for (auto c : x) {
    if (c < 1 || c > 3) throw std::invalid_argument("tooth code outside 1..3");
  }
}

}  // namespace

MouthState MouthState::all_present(const DentitionGraph& graph, std::uint8_t surface_code) {
  return MouthState{std::vector<std::uint8_t>(graph.num_teeth(), kToothPresent),
                    std::vector<std::uint8_t>(graph.num_surfaces(), surface_code)};
}

void check_state(const MouthState& state, const DentitionGraph& graph) {
  check_x(graph, state.x);
  if (state.y.size() != graph.num_surfaces()) throw std::invalid_argument("surface state size does not match dentition");
  for (std::size_t s = 0; s < state.y.size(); ++s) {
    const bool present = state.x[graph.surface_owner(static_cast<int>(s))] == kToothPresent;
    const auto c = state.y[s];
    if (present ? (c < 1 || c > 3) : c != kNoSurface) {
      throw std::invalid_argument("surface code inconsistent with tooth presence at slot " + std::to_string(s));
    }
  }
}

std::vector<double> ToothParams::flatten() const {
  std::vector<double> out{psi, alpha_m, alpha_mbar};
  out.insert(out.end(), beta_m.begin(), beta_m.end());
  out.insert(out.end(), beta_mbar.begin(), beta_mbar.end());
  out.insert(out.end(), beta_spline.begin(), beta_spline.end());
  return out;
}

ToothParams ToothParams::unflatten(std::span<const double> flat) {
  if (flat.size() < kFixedSize) throw std::invalid_argument("tooth parameter vector too short");
  ToothParams p;
  p.psi = flat[0];
  p.alpha_m = flat[1];
  p.alpha_mbar = flat[2];
  std::copy_n(flat.begin() + 3, kNumCovariates, p.beta_m.begin());
  std::copy_n(flat.begin() + 3 + kNumCovariates, kNumCovariates, p.beta_mbar.begin());
  p.beta_spline.assign(flat.begin() + kFixedSize, flat.end());
  return p;
}

std::vector<double> SurfaceParams::flatten() const {
  std::vector<double> out(psi.begin(), psi.end());
  out.push_back(alpha_d);
  out.push_back(alpha_f);
  out.insert(out.end(), beta_d.begin(), beta_d.end());
  out.insert(out.end(), beta_f.begin(), beta_f.end());
  out.insert(out.end(), beta_spline.begin(), beta_spline.end());
  return out;
}

SurfaceParams SurfaceParams::unflatten(std::span<const double> flat) {
  if (flat.size() < kFixedSize) throw std::invalid_argument("surface parameter vector too short");
  SurfaceParams p;
  std::copy_n(flat.begin(), kNumInteractions, p.psi.begin());
  p.alpha_d = flat[kNumInteractions];
  p.alpha_f = flat[kNumInteractions + 1];
  std::copy_n(flat.begin() + kNumInteractions + 2, kNumCovariates, p.beta_d.begin());
  std::copy_n(flat.begin() + kNumInteractions + 2 + kNumCovariates, kNumCovariates, p.beta_f.begin());
  p.beta_spline.assign(flat.begin() + kFixedSize, flat.end());
  return p;
}

ToothField make_field(const ToothParams& params, const CovariateVector& z, std::span<const double> spline) {
  const double w = spline_term(params.beta_spline, spline);
  return ToothField{params.psi,
                    {0.0, params.alpha_m + dot(params.beta_m, z) + w, params.alpha_mbar + dot(params.beta_mbar, z) + w}};
}

SurfaceField make_field(const SurfaceParams& params, const CovariateVector& z, std::span<const double> spline) {
  const double w = spline_term(params.beta_spline, spline);
  return SurfaceField{params.psi,
                      {0.0, params.alpha_d + dot(params.beta_d, z) + w, params.alpha_f + dot(params.beta_f, z) + w}};
}

ToothCounts tooth_counts(const MouthState& state, const DentitionGraph& graph) {
  ToothCounts c;
  for (auto [a, b] : graph.tooth_edge_slots()) c.agree += state.x[a] == state.x[b];
  for (auto code : state.x) {
    c.disease += code == 2;
    c.other += code == 3;
  }
  return c;
}

SurfaceCounts surface_counts(const MouthState& state, const DentitionGraph& graph) {
  SurfaceCounts c;
  for (auto kind : kAllInteractions) {
    int n = 0;
    for (auto [a, b] : graph.pair_slots(kind)) n += state.y[a] != kNoSurface && state.y[a] == state.y[b];
    c.s[static_cast<int>(kind)] = n;
  }
  for (auto code : state.y) {
    c.decayed += code == 2;
    c.filled += code == 3;
  }
  return c;
}

std::vector<double> tooth_suff_stats(const MouthState& state, const DentitionGraph& graph, const CovariateVector& z,
                                     std::span<const double> spline) {
  const auto c = tooth_counts(state, graph);
  std::vector<double> out{static_cast<double>(c.agree), static_cast<double>(c.disease), static_cast<double>(c.other)};
  for (double v : z) out.push_back(c.disease * v);
  for (double v : z) out.push_back(c.other * v);
  for (double b : spline) out.push_back((c.disease + c.other) * b);
  return out;
}

std::vector<double> surface_suff_stats(const MouthState& state, const DentitionGraph& graph,
                                       const CovariateVector& z, std::span<const double> spline) {
  const auto c = surface_counts(state, graph);
  std::vector<double> out(c.s.begin(), c.s.end());
  out.push_back(c.decayed);
  out.push_back(c.filled);
  for (double v : z) out.push_back(c.decayed * v);
  for (double v : z) out.push_back(c.filled * v);
  for (double b : spline) out.push_back((c.decayed + c.filled) * b);
  return out;
}

SpatialStats spatial_stats(const MouthState& state, const DentitionGraph& graph) {
  const auto t = tooth_counts(state, graph);
  const auto s = surface_counts(state, graph);
  return {static_cast<double>(t.agree), static_cast<double>(s.s[0]), static_cast<double>(s.s[1]),
          static_cast<double>(s.s[2]), static_cast<double>(s.s[3]), static_cast<double>(s.s[4])};
}

double tooth_log_unnorm(const MouthState& state, const DentitionGraph& graph, const ToothParams& params,
                        const CovariateVector& z, std::span<const double> spline) {
  double agree = 0.0;
  for (auto [a, b] : graph.tooth_edge_slots()) agree += state.x[a] == state.x[b] ? 1.0 : 0.0;
  const double lin_m = params.alpha_m + dot(params.beta_m, z);
  const double lin_mbar = params.alpha_mbar + dot(params.beta_mbar, z);
  const double w = spline_term(params.beta_spline, spline);
  double total = params.psi * agree;
  for (auto code : state.x) {
    if (code == 2) total += lin_m;
    if (code == 3) total += lin_mbar;
    if (code != kToothPresent) total += w;
  }
  return total;
}

double surface_log_unnorm(const MouthState& state, const DentitionGraph& graph, const SurfaceParams& params,
                          const CovariateVector& z, std::span<const double> spline) {
  double total = 0.0;
  for (auto kind : kAllInteractions) {
    for (auto [a, b] : graph.pair_slots(kind)) {
      const bool both_present = state.x[graph.surface_owner(a)] == kToothPresent &&
                                state.x[graph.surface_owner(b)] == kToothPresent;
      if (both_present && state.y[a] == state.y[b]) total += params.psi[static_cast<int>(kind)];
    }
  }
  const double lin_d = params.alpha_d + dot(params.beta_d, z);
  const double lin_f = params.alpha_f + dot(params.beta_f, z);
  const double w = spline_term(params.beta_spline, spline);
  for (std::size_t s = 0; s < state.y.size(); ++s) {
    if (state.x[graph.surface_owner(static_cast<int>(s))] != kToothPresent) continue;
    if (state.y[s] == 2) total += lin_d + w;
    if (state.y[s] == 3) total += lin_f + w;
  }
  return total;
}

double log_unnorm(const MouthState& state, const DentitionGraph& graph, const ToothField& field) {
  double total = 0.0;
  for (auto [a, b] : graph.tooth_edge_slots()) {
    if (state.x[a] == state.x[b]) total += field.psi;
  }
  for (auto code : state.x) total += field.field[code - 1];
  return total;
}

double log_unnorm(const MouthState& state, const DentitionGraph& graph, const SurfaceField& field) {
  double total = 0.0;
  for (auto kind : kAllInteractions) {
    const double psi = field.psi[static_cast<int>(kind)];
    for (auto [a, b] : graph.pair_slots(kind)) {
      if (state.y[a] != kNoSurface && state.y[a] == state.y[b]) total += psi;
    }
  }
  for (auto code : state.y) {
    if (code != kNoSurface) total += field.field[code - 1];
  }
  return total;
}

double log_unnorm_diff(const ToothCounts& c, const ToothField& a, const ToothField& b) {
  return (a.psi - b.psi) * c.agree + (a.field[1] - b.field[1]) * c.disease + (a.field[2] - b.field[2]) * c.other;
}

double log_unnorm_diff(const SurfaceCounts& c, const SurfaceField& a, const SurfaceField& b) {
  double d = (a.field[1] - b.field[1]) * c.decayed + (a.field[2] - b.field[2]) * c.filled;
  for (int h = 0; h < kNumInteractions; ++h) d += (a.psi[h] - b.psi[h]) * c.s[h];
  return d;
}

std::vector<double> exact_distribution(const DentitionGraph& graph, const ToothField& field) {
  const auto n = checked_state_count(graph.num_teeth());
  MouthState state = MouthState::all_present(graph, kNoSurface);
  std::vector<int> slots(graph.num_teeth());
  std::iota(slots.begin(), slots.end(), 0);
  std::vector<double> logw;
  logw.reserve(n);
  do {
    logw.push_back(log_unnorm(state, graph, field));
  } while (advance(state.x, slots));
  const double lz = log_sum_exp(logw);
  for (auto& v : logw) v = std::exp(v - lz);
  return logw;
}

std::vector<double> exact_distribution(const DentitionGraph& graph, std::span<const std::uint8_t> x,
                                       const SurfaceField& field) {
  check_x(graph, x);
  const auto slots = present_surface_slots(graph, x);
  const auto n = checked_state_count(slots.size());
  MouthState state{std::vector<std::uint8_t>(x.begin(), x.end()), std::vector<std::uint8_t>(graph.num_surfaces(), kNoSurface)};
  for (int s : slots) state.y[s] = 1;
  std::vector<double> logw;
  logw.reserve(n);
  do {
    logw.push_back(log_unnorm(state, graph, field));
  } while (advance(state.y, slots));
  const double lz = log_sum_exp(logw);
  for (auto& v : logw) v = std::exp(v - lz);
  return logw;
}

double exact_log_partition(const DentitionGraph& graph, const ToothField& field) {
  checked_state_count(graph.num_teeth());
  MouthState state = MouthState::all_present(graph, kNoSurface);
  std::vector<int> slots(graph.num_teeth());
  std::iota(slots.begin(), slots.end(), 0);
  std::vector<double> logw;
  do {
    logw.push_back(log_unnorm(state, graph, field));
  } while (advance(state.x, slots));
  return log_sum_exp(logw);
}

double exact_log_partition(const DentitionGraph& graph, std::span<const std::uint8_t> x, const SurfaceField& field) {
  check_x(graph, x);
  const auto slots = present_surface_slots(graph, x);
  checked_state_count(slots.size());
  MouthState state{std::vector<std::uint8_t>(x.begin(), x.end()), std::vector<std::uint8_t>(graph.num_surfaces(), kNoSurface)};
  for (int s : slots) state.y[s] = 1;
  std::vector<double> logw;
  do {
    logw.push_back(log_unnorm(state, graph, field));
  } while (advance(state.y, slots));
  return log_sum_exp(logw);
}

double exact_log_partition(const DentitionGraph& graph, const ToothParams& params, const CovariateVector& z,
                           std::span<const double> spline) {
  return exact_log_partition(graph, make_field(params, z, spline));
}

double exact_log_partition(const DentitionGraph& graph, std::span<const std::uint8_t> x, const SurfaceParams& params,
                           const CovariateVector& z, std::span<const double> spline) {
  return exact_log_partition(graph, x, make_field(params, z, spline));
}

std::uint64_t tooth_state_index(const MouthState& state) {
  std::uint64_t index = 0, place = 1;
  for (auto code : state.x) {
    index += (code - 1) * place;
    place *= 3;
  }
  return index;
}

std::uint64_t surface_state_index(const MouthState& state) {
  std::uint64_t index = 0, place = 1;
  for (auto code : state.y) {
    if (code == kNoSurface) continue;
    index += (code - 1) * place;
    place *= 3;
  }
  return index;
}

std::array<double, 3> tooth_site_conditional(const MouthState& state, const DentitionGraph& graph, int tooth_slot,
                                             const ToothField& field) {
  std::array<double, 3> w = field.field;
  for (int nb : graph.tooth_adjacent(tooth_slot)) w[state.x[nb] - 1] += field.psi;
  return softmax3(w[0], w[1], w[2]);
}

std::array<double, 3> surface_site_conditional(const MouthState& state, const DentitionGraph& graph,
                                               int surface_slot, const SurfaceField& field) {
  if (state.x[graph.surface_owner(surface_slot)] != kToothPresent) {
    throw std::logic_error("surface site of an absent tooth has no conditional");
  }
  std::array<double, 3> w = field.field;
  for (const auto& nb : graph.surface_adjacent(surface_slot)) {
    const auto c = state.y[nb.slot];
    if (c != kNoSurface) w[c - 1] += field.psi[static_cast<int>(nb.kind)];
  }
  return softmax3(w[0], w[1], w[2]);
}

std::uint8_t draw_code(const std::array<double, 3>& probs, Rng& rng) {
  const double u = rng.uniform();
  if (u < probs[0]) return 1;
  if (u < probs[0] + probs[1]) return 2;
  return 3;
}

void init_tooth_surfaces(MouthState& state, const DentitionGraph& graph, int tooth_slot, const SurfaceField* field,
                         Rng& rng) {
  auto [first, last] = graph.tooth_surfaces(tooth_slot);
  for (int s = first; s < last; ++s) state.y[s] = kNoSurface;
  for (int s = first; s < last; ++s) {
    state.y[s] = field ? draw_code(surface_site_conditional(state, graph, s, *field), rng) : 1;
  }
}

namespace {

// Site weights built from precomputed exponentials; numerically equivalent to
// the *_site_conditional functions but free of exp() calls in the scan.
std::array<double, 3> scaled_exp(const std::array<double, 3>& field) {
  const double m = std::max({field[0], field[1], field[2]});
  return {std::exp(field[0] - m), std::exp(field[1] - m), std::exp(field[2] - m)};
}

std::uint8_t draw_weighted(const std::array<double, 3>& w, double u) {
  // branch-free: the outcome is unpredictable by design
  u *= w[0] + w[1] + w[2];
  return static_cast<std::uint8_t>(1 + (u >= w[0]) + (u >= w[0] + w[1]));
}

// Two 32-bit uniforms per engine call; plenty of resolution for a
// three-way draw and it halves the generator cost of a sweep.
class HalfUniforms {
 public:
  explicit HalfUniforms(Rng& rng) : rng_(rng) {}
  double next() {
    if (spare_) {
      spare_ = false;
      return static_cast<double>(bits_ & 0xffffffffu) * 0x1.0p-32;
    }
    bits_ = rng_();
    spare_ = true;
    return static_cast<double>(bits_ >> 32) * 0x1.0p-32;
  }

 private:
  Rng& rng_;
  std::uint64_t bits_ = 0;
  bool spare_ = false;
};

}  // namespace

ToothWeights::ToothWeights(const ToothField& f) : field(scaled_exp(f.field)), psi(std::exp(f.psi)) {
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      auto w = field;
      if (a) w[a - 1] *= psi;
      if (b) w[b - 1] *= psi;
      const double total = w[0] + w[1] + w[2];
      cumulative[4 * a + b] = {w[0] / total, (w[0] + w[1]) / total};
    }
  }
}

SurfaceWeights::SurfaceWeights(const SurfaceField& f) : field(scaled_exp(f.field)) {
  for (int h = 0; h < kNumInteractions; ++h) psi[h] = std::exp(f.psi[h]);
}

void tooth_sweep(MouthState& state, const DentitionGraph& graph, const ToothField& field, Rng& rng,
                 const SurfaceField* surfaces) {
  tooth_sweep(state, graph, ToothWeights(field), rng, surfaces);
}

void tooth_sweep(MouthState& state, const DentitionGraph& graph, const ToothWeights& tw, Rng& rng,
                 const SurfaceField* surfaces) {
  const bool track_surfaces = !state.y.empty();
  HalfUniforms u(rng);
  const int n = static_cast<int>(graph.num_teeth());
  if (!track_surfaces && graph.max_tooth_degree() <= 2) {
    for (int t = 0; t < n; ++t) {
      const auto adj = graph.tooth_adjacent(t);
      const int a = adj.size() > 0 ? state.x[adj[0]] : 0;
      const int b = adj.size() > 1 ? state.x[adj[1]] : 0;
      const auto& c = tw.cumulative[4 * a + b];
      const double v = u.next();
      state.x[t] = static_cast<std::uint8_t>(1 + (v >= c[0]) + (v >= c[1]));
    }
    return;
  }
  for (int t = 0; t < n; ++t) {
    auto w = tw.field;
    for (int nb : graph.tooth_adjacent(t)) w[state.x[nb] - 1] *= tw.psi;
    const auto before = state.x[t];
    const auto after = draw_weighted(w, u.next());
    if (after == before) continue;
    state.x[t] = after;
    if (before == kToothPresent) {
      auto [first, last] = graph.tooth_surfaces(t);
      std::fill(state.y.begin() + first, state.y.begin() + last, kNoSurface);
    } else if (after == kToothPresent) {
      init_tooth_surfaces(state, graph, t, surfaces, rng);
    }
  }
}

void surface_sweep(MouthState& state, const DentitionGraph& graph, const SurfaceField& field, Rng& rng) {
  surface_sweep(state, graph, SurfaceWeights(field), rng);
}

void surface_sweep(MouthState& state, const DentitionGraph& graph, const SurfaceWeights& sw, Rng& rng) {
  HalfUniforms u(rng);
  for (int s = 0; s < static_cast<int>(graph.num_surfaces()); ++s) {
    if (state.y[s] == kNoSurface) continue;
    auto w = sw.field;
    for (const auto& nb : graph.surface_adjacent(s)) {
      const auto c = state.y[nb.slot];
      if (c != kNoSurface) w[c - 1] *= sw.psi[static_cast<int>(nb.kind)];
    }
    state.y[s] = draw_weighted(w, u.next());
  }
}

void gibbs_sweep(MouthState& state, const DentitionGraph& graph, Level level, const ToothParams& tooth,
                 const SurfaceParams& surface, const CovariateVector& z, std::span<const double> spline, Rng& rng) {
  const auto tf = make_field(tooth, z, spline);
  const auto sf = make_field(surface, z, spline);
  if (level == Level::Tooth || level == Level::Joint) tooth_sweep(state, graph, tf, rng, &sf);
  if (level == Level::Surface || level == Level::Joint) surface_sweep(state, graph, sf, rng);
}

}  // namespace dentmrf
