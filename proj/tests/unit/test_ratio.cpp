#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dentmrf/ratio.hpp"
#include "oracles.hpp"

using namespace dentmrf;

TEST_CASE("log_mean_exp") {
  const std::vector<double> v{1000.0, 1000.0};
  CHECK(log_mean_exp(v) == doctest::Approx(1000.0));
  const std::vector<double> w{0.0, std::log(3.0)};
  CHECK(log_mean_exp(w) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK_THROWS(log_mean_exp(std::vector<double>{}));
}

TEST_CASE("noisy ratio closed forms") {
  const std::vector<double> theta{0.4, -1.0, 2.0};
  const std::vector<std::vector<double>> aux{{3, 1, 0}, {0, 2, 5}, {1, 1, 1}};
  CHECK(noisy_ratio(theta, theta, aux) == 1.0);

  const std::vector<double> a{0.7}, b{0.2};
  const std::vector<std::vector<double>> one{{4.0}};
  CHECK(noisy_ratio(a, b, one) == doctest::Approx(std::exp(0.5 * 4.0)).epsilon(1e-14));

  const std::vector<double> b2{0.2, 0.1};
  CHECK_THROWS_AS(noisy_ratio(a, b2, one), std::invalid_argument);
  const std::vector<std::vector<double>> bad{{1.0, 2.0}};
  CHECK_THROWS_AS(noisy_ratio(a, b, bad), std::invalid_argument);

  // Huge exponents stay finite in log space.
  const std::vector<std::vector<double>> big{{2000.0}, {1990.0}};
  CHECK(std::isfinite(noisy_log_ratio(a, b, big)));
}

TEST_CASE("importance estimate converges to the enumerated ratio on two teeth") {
  const std::vector<int> teeth{1, 2};
  const auto g = DentitionGraph::subgraph(teeth);
  Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    const ToothField from{std::abs(rng.normal()), {0.0, rng.normal(), rng.normal()}};
    const ToothField to{std::abs(rng.normal()), {0.0, rng.normal(), rng.normal()}};
    // Exact draws at `to`, then the importance average.
    const auto p = oracle::tooth_distribution(teeth, to.psi, to.field);
    std::vector<std::vector<double>> stats;
    for (int m = 0; m < 100000; ++m) {
      double u = rng.uniform();
      std::size_t k = 0;
      while (k + 1 < p.size() && u >= p[k]) u -= p[k++];
      MouthState s;
      s.x = {static_cast<std::uint8_t>(1 + k % 3), static_cast<std::uint8_t>(1 + k / 3)};
      const auto c = tooth_counts(s, g);
      stats.push_back({static_cast<double>(c.agree), static_cast<double>(c.disease), static_cast<double>(c.other)});
    }
    const std::vector<double> th{from.psi, from.field[1], from.field[2]};
    const std::vector<double> tp{to.psi, to.field[1], to.field[2]};
    const double exact = std::exp(oracle::tooth_log_partition(teeth, from.psi, from.field) -
                                  oracle::tooth_log_partition(teeth, to.psi, to.field));
    CHECK(std::abs(noisy_ratio(th, tp, stats) / exact - 1.0) < 0.01);
  }
}

TEST_CASE("partition ratio estimators") {
  const std::vector<int> teeth{1, 2};
  const auto g = DentitionGraph::subgraph(teeth);
  const auto start = MouthState::all_present(g);
  const ToothField from{0.9, {0.0, -0.3, 0.4}};
  const ToothField to{0.4, {0.0, 0.2, -0.1}};
  const double exact =
      oracle::tooth_log_partition(teeth, from.psi, from.field) - oracle::tooth_log_partition(teeth, to.psi, to.field);

  Rng rng(1);
  ExactPartitionRatio ex;
  CHECK(ex.log_tooth(start, g, from, to, rng) == doctest::Approx(exact).epsilon(1e-12));
  CHECK(ex.log_tooth(start, g, from, from, rng) == 0.0);

  NoisyPartitionRatio noisy({20000, 10, AuxMode::Independent, 5});
  CHECK(noisy.log_tooth(start, g, from, from, rng) == 0.0);
  CHECK(std::abs(noisy.log_tooth(start, g, from, to, rng) - exact) < 0.02);

  NoisyPartitionRatio thinned({20000, 20, AuxMode::Thinned, 2});
  CHECK(std::abs(thinned.log_tooth(start, g, from, to, rng) - exact) < 0.03);

  // Surface level on one molar.
  const std::vector<int> molar{1};
  const auto gm = DentitionGraph::subgraph(molar);
  const auto sm = MouthState::all_present(gm);
  const SurfaceField sf{{0.1, 1.2, 0, 0, 0}, {0.0, -0.5, -1.0}};
  const SurfaceField st{{0.3, 0.9, 0, 0, 0}, {0.0, -0.2, -0.8}};
  const double sexact = oracle::surface_log_partition(molar, sf.psi, sf.field) -
                        oracle::surface_log_partition(molar, st.psi, st.field);
  CHECK(ex.log_surface(sm, gm, sf, st, rng) == doctest::Approx(sexact).epsilon(1e-12));
  CHECK(std::abs(noisy.log_surface(sm, gm, sf, st, rng) - sexact) < 0.03);

  CHECK_THROWS(NoisyPartitionRatio({0, 10, AuxMode::Independent, 5}));
}

TEST_CASE("noisy estimates are reproducible") {
  const auto g = DentitionGraph::subgraph({1, 2, 3});
  const auto start = MouthState::all_present(g);
  const ToothField from{0.9, {0.0, -0.3, 0.4}};
  const ToothField to{0.4, {0.0, 0.2, -0.1}};
  NoisyPartitionRatio a({20, 50, AuxMode::Independent, 5}), b({20, 50, AuxMode::Independent, 5});
  Rng ra(5), rb(5);
  CHECK(a.log_tooth(start, g, from, to, ra) == b.log_tooth(start, g, from, to, rb));
}
