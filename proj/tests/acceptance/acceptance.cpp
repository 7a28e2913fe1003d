// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero when any selected criterion fails. Pass criterion names (C1..C9)
// to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dentmrf/hierarchy.hpp"
#include "dentmrf/missingness.hpp"
#include "dentmrf/posterior.hpp"
#include "dentmrf/potts.hpp"
#include "dentmrf/ratio.hpp"
#include "dentmrf/sampler.hpp"
#include "dentmrf/synthetic.hpp"
#include "oracles.hpp"

using namespace dentmrf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean_of(std::span<const double> s) {
  double m = 0;
  for (double v : s) m += v;
  return m / static_cast<double>(s.size());
}

double var_of(std::span<const double> s) {
  const double m = mean_of(s);
  double v = 0;
  for (double x : s) v += (x - m) * (x - m);
  return v / static_cast<double>(s.size() - 1);
}

// Tooth-level-only synthetic data with the three tooth parameters pinned.
SyntheticSpec tooth_spec(std::vector<int> teeth, int n_psus, std::optional<int> size) {
  SyntheticSpec s;
  s.teeth = std::move(teeth);
  s.n_psus = n_psus;
  s.fixed_size = size;
  s.spline_q = 0;
  s.use_covariates = false;
  s.norp_rate = 0.0;
  s.nord_rate = 0.0;
  return s;
}

ModelOptions tooth_model() {
  ModelOptions o;
  o.spline_q = 0;
  o.use_covariates = false;
  o.surface_level = false;
  return o;
}

// ---------------------------------------------------------------- C1

struct Marginals {
  std::vector<std::array<double, 3>> site;
  std::vector<std::array<double, 9>> pair;
};

// Single-site and pairwise marginals of a distribution over base-3 states
// (site 0 least significant).
Marginals marginals(const std::vector<double>& p, int n, const std::vector<std::pair<int, int>>& pairs) {
  Marginals m;
  m.site.assign(n, {});
  m.pair.assign(pairs.size(), {});
  std::vector<int> digit(n);
  for (std::size_t idx = 0; idx < p.size(); ++idx) {
    if (p[idx] == 0.0) continue;
    std::size_t r = idx;
    for (int i = 0; i < n; ++i, r /= 3) digit[i] = static_cast<int>(r % 3);
    for (int i = 0; i < n; ++i) m.site[i][digit[i]] += p[idx];
    for (std::size_t k = 0; k < pairs.size(); ++k) m.pair[k][3 * digit[pairs[k].first] + digit[pairs[k].second]] += p[idx];
  }
  return m;
}

double max_marginal_tv(const Marginals& a, const Marginals& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.site.size(); ++i) {
    worst = std::max(worst, oracle::total_variation({a.site[i].begin(), a.site[i].end()}, {b.site[i].begin(), b.site[i].end()}));
  }
  for (std::size_t i = 0; i < a.pair.size(); ++i) {
    worst = std::max(worst, oracle::total_variation({a.pair[i].begin(), a.pair[i].end()}, {b.pair[i].begin(), b.pair[i].end()}));
  }
  return worst;
}

struct Instance {
  std::string name;
  Level level;
  std::vector<int> teeth;
};

Outcome c1() {
  const std::vector<Instance> instances{
      {"tooth{1}", Level::Tooth, {1}},
      {"tooth{1,2}", Level::Tooth, {1, 2}},
      {"tooth{1,2,3}", Level::Tooth, {1, 2, 3}},
      {"tooth{1..4}", Level::Tooth, {1, 2, 3, 4}},
      {"tooth{1..4,15..18}", Level::Tooth, {1, 2, 3, 4, 15, 16, 17, 18}},
      {"tooth{1..13}", Level::Tooth, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}},
      {"surface{6}", Level::Surface, {6}},
      {"surface{1}", Level::Surface, {1}},
      {"surface{1,2}", Level::Surface, {1, 2}},
      {"surface{1,15}", Level::Surface, {1, 15}},
      {"surface{4,5,6}", Level::Surface, {4, 5, 6}},
  };
  const ToothField tf{0.6, {0.0, -0.8, 0.3}};
  const SurfaceField sf{{0.1, 1.2, 0.8, 0.6, 0.3}, {0.0, -0.6, 0.4}};
  const int sweeps = 100000;
  Outcome out{true, ""};
  Rng rng(2024);
  for (const auto& inst : instances) {
    const auto graph = DentitionGraph::subgraph(inst.teeth);
    std::vector<double> exact;
    int n = 0;
    std::vector<std::pair<int, int>> pairs;
    if (inst.level == Level::Tooth) {
      exact = oracle::tooth_distribution(inst.teeth, tf.psi, tf.field);
      n = static_cast<int>(inst.teeth.size());
      for (int i = 0; i + 1 < n; ++i)
        if (oracle::adjacent(inst.teeth[i], inst.teeth[i + 1])) pairs.emplace_back(i, i + 1);
    } else {
      exact = oracle::surface_distribution(inst.teeth, sf.psi, sf.field);
      const auto sites = oracle::surfaces_of(inst.teeth);
      n = static_cast<int>(sites.size());
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (oracle::classify(sites[i].tooth, sites[i].surface, sites[j].tooth, sites[j].surface)) pairs.emplace_back(i, j);
    }
    auto state = MouthState::all_present(graph);
    std::vector<double> freq(exact.size(), 0.0);
    for (int s = 0; s < 200; ++s) inst.level == Level::Tooth ? tooth_sweep(state, graph, tf, rng) : surface_sweep(state, graph, sf, rng);
    for (int s = 0; s < sweeps; ++s) {
      if (inst.level == Level::Tooth) {
        tooth_sweep(state, graph, tf, rng);
        freq[tooth_state_index(state)] += 1.0 / sweeps;
      } else {
        surface_sweep(state, graph, sf, rng);
        freq[surface_state_index(state)] += 1.0 / sweeps;
      }
    }
    const double joint = oracle::total_variation(freq, exact);
    const double marg = max_marginal_tv(marginals(freq, n, pairs), marginals(exact, n, pairs));
    // Expected TV of an iid sample of this size. When it eats half the
    // tolerance the joint table cannot resolve 0.01, so the site and pair
    // marginals are judged instead.
    double noise = 0;
    for (double p : exact) noise += 0.5 * std::sqrt(2.0 * p * (1.0 - p) / (3.141592653589793 * sweeps));
    const bool use_joint = noise <= 0.005;
    const double tv = use_joint ? joint : marg;
    out.pass &= tv < 0.01;
    out.detail += fmt(" %s[%zu states] %s=%.4f (joint %.4f, floor %.4f);", inst.name.c_str(), exact.size(),
                      use_joint ? "joint" : "marginal", tv, joint, noise);
  }
  return out;
}

// ---------------------------------------------------------------- C2

Outcome c2() {
  const std::vector<int> teeth{1, 2};
  const auto graph = DentitionGraph::subgraph(teeth);
  AuxSettings aux;
  aux.n_aux = 100000;
  NoisyPartitionRatio noisy(aux);
  Rng rng(77);
  Outcome out{true, ""};
  double worst = 0;
  for (int k = 0; k < 10; ++k) {
    ToothField a{1.5 * rng.uniform(), {0.0, -2.5 + 3.5 * rng.uniform(), -2.5 + 3.5 * rng.uniform()}};
    ToothField b{std::max(0.0, a.psi + 0.25 * rng.normal()), {0.0, a.field[1] + 0.25 * rng.normal(), a.field[2] + 0.25 * rng.normal()}};
    MouthState start;
    start.x = {static_cast<std::uint8_t>(1 + rng() % 3), static_cast<std::uint8_t>(1 + rng() % 3)};
    const double est = noisy.log_tooth(start, graph, a, b, rng);
    const double exact = oracle::tooth_log_partition(teeth, a.psi, a.field) - oracle::tooth_log_partition(teeth, b.psi, b.field);
    const double rel = std::abs(std::exp(est - exact) - 1.0);
    worst = std::max(worst, rel);
    if (rel >= 0.01) out.pass = false;
  }
  out.detail = fmt("max relative error %.5f over 10 pairs (M=%d)", worst, aux.n_aux);
  return out;
}

// ---------------------------------------------------------------- C3

Outcome c3() {
  auto spec = tooth_spec({1, 2, 3, 4, 5, 6}, 1, 200);
  const std::map<std::string, double> truth{{"psi_t", 0.6}, {"alpha_m", -1.5}, {"alpha_mbar", -2.0}};
  for (const auto& [k, v] : truth) spec.truth[k] = FamilyTruth{v, 0.0};
  ChainConfig cfg;
  cfg.n_iterations = 6000;
  cfg.burn_in = 1000;
  cfg.progress_every = 0;
  int covered = 0, close = 0;
  double psi_sum = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = generate_synthetic(spec, 1000 + seed);
    cfg.seed = seed;
    const auto draws = run_chain(data.dataset, tooth_model(), cfg);
    bool all_in = true;
    const auto id = data.dataset.psus[0].id;
    for (const auto& [name, v] : truth) {
      const auto s = draws.series(name + "@psu:" + std::to_string(id));
      const auto h = hpd_interval(s, 0.95);
      all_in &= h.lo <= v && v <= h.hi;
    }
    const double psi_mean = mean_of(draws.series("psi_t@psu:" + std::to_string(id)));
    // Same "4 of 5" quantifier as coverage: one unlucky dataset can sit 2 sd out.
    close += std::abs(psi_mean - 0.6) < 0.15;
    psi_sum += psi_mean;
    covered += all_in;
    detail += fmt(" seed%d:%s psi_t=%.3f", static_cast<int>(seed), all_in ? "in" : "out", psi_mean);
  }
  return {covered >= 4 && close >= 4,
          fmt("%d/5 seeds cover all truths, %d/5 psi_t means within 0.15 (average %.3f);", covered, close,
              psi_sum / 5) + detail};
}

// ---------------------------------------------------------------- C4

Outcome c4() {
  auto spec = tooth_spec({1, 2, 3}, 1, 50);
  for (const auto& [k, v] : std::map<std::string, double>{{"psi_t", 0.6}, {"alpha_m", -1.5}, {"alpha_mbar", -2.0}}) {
    spec.truth[k] = FamilyTruth{v, 0.0};
  }
  const auto data = generate_synthetic(spec, 4);
  ChainConfig cfg;
  cfg.thinning = 10;
  cfg.burn_in = 5000;
  cfg.n_iterations = cfg.burn_in + 5000 * cfg.thinning;
  cfg.progress_every = 0;
  cfg.seed = 41;
  const auto noisy = run_chain(data.dataset, tooth_model(), cfg);
  cfg.ratio = RatioMode::Exact;
  cfg.seed = 42;
  const auto exact = run_chain(data.dataset, tooth_model(), cfg);
  const std::string key = "psi_t@psu:" + std::to_string(data.dataset.psus[0].id);
  const auto a = noisy.series(key), b = exact.series(key);
  const double ks = ks_statistic(a, b);
  return {a.size() == 5000 && b.size() == 5000 && ks < 0.05,
          fmt("KS=%.4f over %zu/%zu draws (ESS %.0f/%.0f, means %.4f/%.4f)", ks, a.size(), b.size(),
              effective_sample_size(a), effective_sample_size(b), mean_of(a), mean_of(b))};
}

// ---------------------------------------------------------------- C5

Outcome c5() {
  SyntheticSpec spec = tooth_spec({1, 2, 3, 4}, 30, std::nullopt);
  const auto data = generate_synthetic(spec, 55);
  ChainConfig cfg;
  cfg.n_iterations = 6000;
  cfg.burn_in = 1000;
  cfg.thinning = 1;
  cfg.ratio = RatioMode::Exact;
  cfg.progress_every = 0;
  cfg.seed = 5;
  const auto pooled = run_chain(data.dataset, tooth_model(), cfg);
  auto sep_opt = tooth_model();
  sep_opt.pooling = false;
  const auto separate = run_chain(data.dataset, sep_opt, cfg);

  Outcome out{true, ""};
  for (const auto& fam : {"psi_t", "alpha_m", "alpha_mbar"}) {
    const auto hp = psu_summary(pooled, fam);
    const auto sp = psu_summary(separate, fam);
    const double vh = var_of(hp.means), vs = var_of(sp.means);
    const auto delta = pooled.series(std::string(fam) + "@pooled");
    const double truth = data.hyper.at(fam).mean;
    const double z = std::abs(mean_of(delta) - truth) / std::sqrt(var_of(delta));
    out.pass &= vh <= vs && z <= 3.0;
    out.detail += fmt(" %s: var %.5f<=%.5f delta=%.3f truth=%.3f z=%.2f;", fam, vh, vs, mean_of(delta), truth, z);
  }
  return out;
}

// ---------------------------------------------------------------- C6

Outcome c6() {
  auto spec = tooth_spec({1, 2, 3, 4}, 1, 300);
  spec.nord_rate = 0.3;
  for (const auto& s : {"s_x", "s1", "s2", "s3", "s4", "s5"}) spec.truth[std::string("nord.") + s] = FamilyTruth{0.0, 0.0};
  ChainConfig cfg;
  cfg.n_iterations = 22000;
  cfg.burn_in = 2000;
  cfg.thinning = 1;
  cfg.ratio = RatioMode::Exact;
  cfg.progress_every = 0;
  auto aug_opt = tooth_model();
  aug_opt.fixed = {{"nord.s*", 0.0}};
  const double c_alpha = 1.628;  // two-sample KS, alpha = 0.01
  Outcome out{true, ""};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto synth = generate_synthetic(spec, 600 + seed);
    auto complete = synth.dataset;
    for (auto& psu : complete.psus) {
      std::erase_if(psu.people, [](const Person& p) { return p.r2 == 0; });
    }
    cfg.seed = seed;
    const auto aug = run_chain(synth.dataset, aug_opt, cfg);
    const auto cc = run_chain(complete, tooth_model(), cfg);
    const auto id = std::to_string(synth.dataset.psus[0].id);
    out.detail += fmt(" seed%d", static_cast<int>(seed));
    for (const auto& fam : {"psi_t", "alpha_m", "alpha_mbar"}) {
      const auto a = aug.series(std::string(fam) + "@psu:" + id), b = cc.series(std::string(fam) + "@psu:" + id);
      const double ea = effective_sample_size(a), eb = effective_sample_size(b);
      const double crit = c_alpha * std::sqrt((ea + eb) / (ea * eb));
      const double d = ks_statistic(a, b);
      out.pass &= d < crit;
      out.detail += fmt(" %s D=%.3f/%.3f", fam, d, crit);
    }
    out.detail += ";";
  }
  return out;
}

// ---------------------------------------------------------------- C7

Outcome c7() {
  Rng rng(7);
  double conj_err = 0, pu_err = 0, grad_err = 0;
  int hpd_mismatch = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(1 + t % 9);
    for (auto& x : v) x = rng.normal(0.5, 1.3);
    const double sigma2 = 0.1 + rng.uniform(), lambda = rng.normal(), tau = 0.5 + 4 * rng.uniform();
    const auto p = group_mean_posterior(v, sigma2, lambda, tau);
    double sum = 0, sse = 0;
    for (double x : v) sum += x;
    const double var = 1.0 / (1.0 / (tau * tau) + v.size() / sigma2);
    conj_err = std::max({conj_err, std::abs(p.var - var), std::abs(p.mean - var * (lambda / (tau * tau) + sum / sigma2))});
    const double delta = rng.normal(), a = 0.001 + rng.uniform(), b = 0.001 + rng.uniform();
    for (double x : v) sse += (x - delta) * (x - delta);
    const auto g = group_var_posterior(v, delta, a, b);
    conj_err = std::max({conj_err, std::abs(g.shape - (a + 0.5 * v.size())), std::abs(g.rate - (b + 0.5 * sse))});
  }
  for (int t = 0; t < 20; ++t) {
    std::vector<double> probs(200);
    for (auto& x : probs) x = std::pow(rng.uniform(), 1 + t % 3);
    const auto basis = make_knots(probs, 3 + t % 6);
    for (int k = 0; k < 500; ++k) {
      const auto b = eval_basis(basis, rng.uniform());
      double s = 0;
      for (double x : b) s += x;
      pu_err = std::max(pu_err, std::abs(s - 1.0));
    }
  }
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(20 + rng() % 400);
    for (auto& x : s) x = t % 2 ? rng.normal() : std::exp(rng.normal());
    const auto h = hpd_interval(s, 0.95);
    const auto b = oracle::brute_hpd(s, 0.95);
    hpd_mismatch += h.lo != b.lo || h.hi != b.hi;
  }
  for (int t = 0; t < 25; ++t) {
    const int k = 2 + t % 5;
    std::vector<std::vector<double>> rows(40, std::vector<double>(k));
    std::vector<int> r(40);
    for (auto& row : rows)
      for (auto& x : row) x = rng.normal();
    for (auto& y : r) y = rng.uniform() < 0.6;
    std::vector<double> theta(k);
    for (auto& x : theta) x = rng.normal(0, 0.7);
    std::vector<double> grad;
    selection_loglik(theta, rows, r, &grad);
    const auto fd = oracle::fd_gradient([&](const std::vector<double>& th) { return selection_loglik(th, rows, r); }, theta);
    for (int j = 0; j < k; ++j) grad_err = std::max(grad_err, std::abs(grad[j] - fd[j]) / std::max(1.0, std::abs(fd[j])));
  }
  return {conj_err < 1e-10 && pu_err < 1e-12 && hpd_mismatch == 0 && grad_err < 1e-5,
          fmt("conjugate err %.2e, partition of unity err %.2e, HPD mismatches %d/100, gradient rel err %.2e", conj_err,
              pu_err, hpd_mismatch, grad_err)};
}

// ---------------------------------------------------------------- C8

Outcome c8() {
  const ChainConfig c;
  std::uint64_t kept = 0;
  for (std::uint64_t it = 1; it <= c.n_iterations; ++it) kept += c.retains(it);
  const bool ok = c.n_iterations == 30000 && c.burn_in == 5000 && c.thinning == 5 && c.retained() == 5000 &&
                  kept == 5000 && c.aux.n_aux == 20;
  return {ok, fmt("iterations %llu, burn-in %llu, thin %llu, retained %llu (counted %llu), n_aux %d",
                  (unsigned long long)c.n_iterations, (unsigned long long)c.burn_in, (unsigned long long)c.thinning,
                  (unsigned long long)c.retained(), (unsigned long long)kept, c.aux.n_aux)};
}

// ---------------------------------------------------------------- C9

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Outcome c9() {
  SyntheticSpec spec;
  spec.teeth = {1, 2, 3, 15};
  spec.n_psus = 4;
  spec.fixed_size = 25;
  spec.sweeps = 50;
  spec.norp_rate = 0.2;
  spec.nord_rate = 0.2;
  const auto data = generate_synthetic(spec, 9);
  const auto dir = fs::temp_directory_path() / "dentmrf_acceptance_c9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  ChainConfig cfg;
  cfg.n_iterations = 60;
  cfg.burn_in = 20;
  cfg.thinning = 2;
  cfg.aux.n_aux = 4;
  cfg.aux.sweeps = 5;
  cfg.seed = 99;
  cfg.progress_every = 0;
  ModelOptions opt;
  opt.spline_q = 3;
  std::vector<std::string> outputs;
  for (int threads : {1, 1, 4}) {
    cfg.threads = threads;
    const auto path = dir / ("run" + std::to_string(outputs.size()) + ".csv");
    Sampler sampler(data.dataset, opt, cfg);
    CsvSink sink(path);
    sampler.run(&sink);
    outputs.push_back(slurp(path));
  }
  fs::remove_all(dir);
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
  return {same, fmt("3 runs (threads 1, 1, 4): %s, %zu bytes", same ? "byte-identical" : "differ", outputs[0].size())};
}

struct Criterion {
  std::string id, title;
  double budget_s;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"C1", "exact-oracle agreement", 60, c1},
      {"C2", "noisy-ratio calibration", 30, c2},
      {"C3", "posterior recovery", 900, c3},
      {"C4", "noisy vs exact sampler", 600, c4},
      {"C5", "hierarchy shrinkage", 1200, c5},
      {"C6", "MCAR reduction", 1200, c6},
      {"C7", "closed-form suites", 10, c7},
      {"C8", "schedule fidelity", 1, c8},
      {"C9", "determinism", 300, c9},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  bool ok = true;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.budget_s;
    ok &= pass;
    std::printf("%s %s %s (%.1fs, budget %.0fs): %s\n", c.id.c_str(), pass ? "PASS" : "FAIL", c.title.c_str(), secs,
                c.budget_s, o.detail.c_str());
    std::fflush(stdout);
  }
  return ok ? 0 : 1;
}
