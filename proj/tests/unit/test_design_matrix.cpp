#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dentmrf/dataset.hpp"
#include "dentmrf/design_matrix.hpp"
#include "oracles.hpp"

using namespace dentmrf;

namespace {

// n people on a one-tooth dentition; gender[i] decides the gender column.
SurveyDataset people(const std::vector<int>& genders, const std::vector<double>& weights) {
  SurveyDataset d;
  d.teeth = {1};
  const auto g = d.graph();
  Psu psu;
  psu.id = 1;
  for (std::size_t i = 0; i < genders.size(); ++i) {
    Person p = make_person(g);
    p.person_id = static_cast<std::int64_t>(i + 1);
    p.gender = genders[i];
    p.weight = weights[i];
    p.race = 1 + static_cast<int>(i % 3);
    p.poverty = static_cast<int>(i % 2);
    p.teeth[0].status = 1;
    p.teeth[0].sealant = static_cast<int>((i / 2) % 2);
    p.teeth[0].fluorosis = static_cast<int>(i % 5);
    for (auto& s : p.surfaces) s = 1;
    psu.people.push_back(p);
  }
  d.psus.push_back(psu);
  return d;
}

}  // namespace

TEST_CASE("binary shift reproduces the 0.43 / -0.57 coding") {
  std::vector<double> v(100, 0.0);
  for (int i = 0; i < 57; ++i) v[i] = 1.0;
  const auto t = fit_binary(v, "gender");
  CHECK(t.apply(1.0) == doctest::Approx(0.43).epsilon(1e-12));
  CHECK(t.apply(0.0) == doctest::Approx(-0.57).epsilon(1e-12));
  CHECK_THROWS_AS(fit_binary(std::vector<double>(10, 1.0), "x"), DegenerateSpecError);
  CHECK_THROWS_AS(fit_binary(std::vector<double>(10, 0.0), "x"), DegenerateSpecError);
}

TEST_CASE("half-sd scaling") {
  const std::vector<double> already{-0.5, 0.5};
  const auto id = fit_half_sd(already);
  CHECK(id.apply(0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(id.apply(-0.5) == doctest::Approx(-0.5).epsilon(1e-14));

  // Population sd of {1,2,3} is sqrt(2/3).
  const std::vector<double> w{1, 2, 3};
  const auto t = fit_half_sd(w);
  const double k = 0.5 / std::sqrt(2.0 / 3.0);
  CHECK(t.apply(1) == doctest::Approx(-k).epsilon(1e-14));
  CHECK(t.apply(2) == doctest::Approx(0.0));
  CHECK(t.apply(3) == doctest::Approx(k).epsilon(1e-14));
}

TEST_CASE("fitted standardization round-trips on its own data") {
  std::vector<int> genders;
  std::vector<double> weights;
  for (int i = 0; i < 40; ++i) {
    genders.push_back(i % 7 < 4);
    weights.push_back(465.59 + 97.0 * i * i);
  }
  const auto d = people(genders, weights);
  const auto spec = fit_standardization(d);
  const auto g = d.graph();

  std::array<std::vector<double>, kNumCovariates> cols;
  std::vector<double> w;
  for (const auto& p : d.psus[0].people) {
    const auto z = spec.standardize(raw_covariates(p, g));
    for (int r = 0; r < kNumCovariates; ++r) cols[r].push_back(z[r]);
    w.push_back(spec.weight.apply(p.weight));
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  auto sd = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / v.size());
  };
  for (int r = 0; r < kNumCovariates; ++r) CHECK(std::abs(mean(cols[r])) < 1e-12);
  CHECK(std::abs(sd(cols[5]) - 0.5) < 1e-12);
  CHECK(std::abs(mean(w)) < 1e-12);
  CHECK(std::abs(sd(w) - 0.5) < 1e-12);
  // Binary columns keep unit spread between levels.
  CHECK(spec.covariates[0].apply(1) - spec.covariates[0].apply(0) == doctest::Approx(1.0));

  const auto back = StandardizationSpec::from_json(spec.to_json());
  CHECK(back == spec);
}

TEST_CASE("degenerate and empty inputs") {
  const auto constant_gender = people(std::vector<int>(10, 1), std::vector<double>(10, 5.0));
  CHECK_THROWS_AS(fit_standardization(constant_gender), DegenerateSpecError);
  SurveyDataset empty;
  empty.teeth = {1};
  CHECK_THROWS(fit_standardization(empty));
  CHECK(fit_standardization(empty, false) == identity_standardization());
}

TEST_CASE("inclusion probability") {
  CHECK(inclusion_probability(1.0) == 1.0);
  CHECK(inclusion_probability(2.0) == 0.5);
  CHECK(inclusion_probability(465.59) == doctest::Approx(0.0021478).epsilon(1e-4));
  CHECK_THROWS_AS(inclusion_probability(0.0), std::domain_error);
  CHECK_THROWS_AS(inclusion_probability(-3.0), std::domain_error);
}

TEST_CASE("knot placement") {
  std::vector<double> uniform;
  for (int i = 0; i <= 100; ++i) uniform.push_back(i / 100.0);
  const auto b5 = make_knots(uniform, 5);
  REQUIRE(b5.interior().size() == 2);
  CHECK(b5.interior()[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(b5.interior()[1] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(b5.count() == 5);

  const auto b3 = make_knots(uniform, 3);
  CHECK(b3.interior().empty());
  // Bernstein basis on [0, 1].
  const auto v = b3.eval(0.3);
  CHECK(v[0] == doctest::Approx(0.49));
  CHECK(v[1] == doctest::Approx(0.42));
  CHECK(v[2] == doctest::Approx(0.09));

  CHECK_THROWS(make_knots(uniform, 2));
  CHECK_THROWS(make_knots(std::vector<double>{0.1, 0.2, 0.2, 0.1}, 3));
}

TEST_CASE("basis values") {
  const SplineBasis b(0.0, 1.0, {1.0 / 3, 2.0 / 3});
  const auto mid = b.eval(0.5);
  CHECK(mid[0] == doctest::Approx(0.0));
  CHECK(mid[1] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(mid[2] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(mid[3] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(mid[4] == doctest::Approx(0.0));

  const auto lo = b.eval(0.0);
  CHECK(lo == std::vector<double>{1, 0, 0, 0, 0});
  const auto hi = b.eval(1.0);
  CHECK(hi[4] == doctest::Approx(1.0));
  // Clamped outside the range.
  CHECK(b.eval(-4.0) == lo);
  CHECK(b.eval(7.0) == hi);
}

TEST_CASE("partition of unity, local support and agreement with recursive Cox-de Boor") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SplineBasis b(0.01, 0.9, {0.05, 0.05, 0.2, 0.6});
  for (int i = 0; i < 1000; ++i) {
    const double p = b.lower() + (b.upper() - b.lower()) * u(gen);
    const auto v = b.eval(p);
    double sum = 0;
    int nonzero = 0;
    for (int q = 0; q < b.count(); ++q) {
      CHECK(v[q] >= 0.0);
      sum += v[q];
      nonzero += v[q] != 0.0;
      CHECK(std::abs(v[q] - oracle::cox_de_boor(b.knots(), q, 2, p)) < 1e-12);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(nonzero <= 3);
  }
}
