#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "dentmrf/posterior.hpp"
#include "dentmrf/rng.hpp"
#include "oracles.hpp"

using namespace dentmrf;

namespace {

std::vector<double> normals(std::uint64_t seed, int n, double mean = 0.0, double sd = 1.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(mean, sd);
  return v;
}

PosteriorSamples two_psu_samples() {
  PosteriorSamples s({SampleLabel{"psi_t", "psu", 1}, SampleLabel{"psi_t", "psu", 2},
                      SampleLabel{"psi_t", "pooled", std::nullopt}, SampleLabel{"psi_t", "variance", std::nullopt}});
  for (std::uint64_t it = 1; it <= 30; ++it) {
    const std::vector<double> row{1.0, 3.0, 2.0, 0.5};
    s.append(it, row);
  }
  return s;
}

}  // namespace

TEST_CASE("HPD on a uniform grid takes the lowest window") {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  const auto h = hpd_interval(grid, 0.95);
  CHECK(h.lo == 0.0);
  CHECK(h.hi == doctest::Approx(0.95).epsilon(1e-12));
}

TEST_CASE("HPD equals the brute-force window scan") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 20 + static_cast<int>(rng() % 500);
    std::vector<double> s(n);
    for (auto& x : s) x = trial % 2 ? rng.normal() : std::exp(rng.normal());
    for (double mass : {0.5, 0.9, 0.95}) {
      const auto h = hpd_interval(s, mass);
      const auto b = oracle::brute_hpd(s, mass);
      CHECK(h.lo == b.lo);
      CHECK(h.hi == b.hi);
      const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
      CHECK(h.hi - h.lo <= *mx - *mn);
    }
  }
}

TEST_CASE("HPD preconditions and equivariance") {
  CHECK_THROWS(hpd_interval(std::vector<double>(19, 1.0), 0.95));
  const auto s = normals(1, 200);
  CHECK_THROWS(hpd_interval(s, 0.0));
  CHECK_THROWS(hpd_interval(s, 1.0));
  const auto h = hpd_interval(s, 0.9);
  std::vector<double> t;
  for (double x : s) t.push_back(2.5 * x - 4.0);
  const auto g = hpd_interval(t, 0.9);
  CHECK(g.lo == doctest::Approx(2.5 * h.lo - 4.0).epsilon(1e-12));
  CHECK(g.hi == doctest::Approx(2.5 * h.hi - 4.0).epsilon(1e-12));
}

TEST_CASE("HPD covers the modal bin of unimodal samples") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = normals(seed, 5000, 1.0, 2.0);
    const auto h = hpd_interval(s, 0.95);
    // Histogram with 0.5-wide bins.
    std::map<long, int> bins;
    for (double x : s) ++bins[static_cast<long>(std::floor(x / 0.5))];
    const auto mode = std::max_element(bins.begin(), bins.end(), [](auto& a, auto& b) { return a.second < b.second; });
    const double lo = mode->first * 0.5, hi = lo + 0.5;
    CHECK(h.lo <= lo);
    CHECK(h.hi >= hi);
  }
}

TEST_CASE("effective sample size") {
  CHECK(effective_sample_size(std::vector<double>(100, 3.0)) == 100.0);
  const auto iid = normals(2, 5000);
  const double e = effective_sample_size(iid);
  CHECK(e > 2500);
  CHECK(e < 7500);

  // AR(1) with phi = 0.9: ESS near n (1 - phi) / (1 + phi).
  Rng rng(3);
  std::vector<double> ar(20000);
  double x = 0;
  for (auto& v : ar) v = x = 0.9 * x + rng.normal();
  const double ea = effective_sample_size(ar);
  const double expect = 20000 * 0.1 / 1.9;
  CHECK(ea > 0.6 * expect);
  CHECK(ea < 1.5 * expect);
}

TEST_CASE("KS distance") {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 2, 3, 4};
  CHECK(ks_statistic(a, b) == 0.0);
  const std::vector<double> c{5, 6, 7};
  CHECK(ks_statistic(a, c) == 1.0);
  const std::vector<double> d{2.5};
  CHECK(ks_statistic(a, d) == doctest::Approx(0.5));
  CHECK_THROWS(ks_statistic(a, std::vector<double>{}));
}

TEST_CASE("labels") {
  const SampleLabel l{"beta_m.gender", "psu", 42};
  CHECK(l.key() == "beta_m.gender@psu:42");
  CHECK(SampleLabel::parse(l.key()) == l);
  CHECK(SampleLabel::parse("psi_t@pooled").psu == std::nullopt);
  CHECK_THROWS(SampleLabel::parse("psi_t"));
  CHECK_THROWS(SampleLabel::parse("psi_t@hyper"));
  CHECK_THROWS(SampleLabel::parse("psi_t@psu:x"));
}

TEST_CASE("summaries") {
  PosteriorSamples s({SampleLabel{"c", "pooled", std::nullopt}, SampleLabel{"z", "psu", 1}});
  const auto z = normals(4, 400);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::vector<double> row{0.25, z[i]};
    s.append(i + 1, row);
  }
  const auto rows = summarize(s);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean == 0.25);
  CHECK(rows[0].hpd.lo == 0.25);
  CHECK(rows[0].hpd.hi == 0.25);
  double m = 0;
  for (double v : z) m += v;
  m /= z.size();
  CHECK(std::abs(rows[1].mean - m) < 1e-12);

  std::ostringstream a, b;
  write_summary(summarize(s), a);
  write_summary(summarize(s), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("family,level,psu_id,mean,hpd_lo,hpd_hi,ess\n", 0) == 0);
}

TEST_CASE("PSU summaries and plot data") {
  const auto s = two_psu_samples();
  const auto p = psu_summary(s, "psi_t");
  CHECK(p.psu_ids == std::vector<std::int64_t>{1, 2});
  CHECK(p.means == std::vector<double>{1.0, 3.0});
  REQUIRE(p.pooled_mean);
  CHECK(*p.pooled_mean == 2.0);
  CHECK_THROWS_AS(psu_summary(s, "alpha_m"), std::invalid_argument);
  CHECK(psu_families(s) == std::vector<std::string>{"psi_t"});

  std::ostringstream out;
  write_plot_data(s, out);
  CHECK(out.str() == "family,psu_id,posterior_mean\npsi_t,1,1\npsi_t,2,3\npsi_t,pooled,2\n");
}

TEST_CASE("CSV round trip and resumable sink") {
  const auto dir = std::filesystem::temp_directory_path() / "dentmrf_posterior_test";
  std::filesystem::create_directories(dir);
  const auto s = two_psu_samples();
  s.write_csv(dir / "a.csv");
  CHECK(PosteriorSamples::read_csv(dir / "a.csv") == s);

  {
    CsvSink sink(dir / "b.csv");
    sink.begin(s.labels());
    for (std::uint64_t it = 1; it <= 10; ++it) {
      const std::vector<double> row{double(it), 0, 0, 0};
      sink.record(it, row);
    }
    sink.finish();
  }
  {
    // Resume from iteration 6: rows 7.. are rewritten.
    CsvSink sink(dir / "b.csv", 6);
    sink.begin(s.labels());
    for (std::uint64_t it = 7; it <= 12; ++it) {
      const std::vector<double> row{double(100 + it), 0, 0, 0};
      sink.record(it, row);
    }
    sink.finish();
  }
  const auto r = PosteriorSamples::read_csv(dir / "b.csv");
  REQUIRE(r.num_draws() == 12);
  CHECK(r.series(0)[5] == 6.0);
  CHECK(r.series(0)[6] == 107.0);
  CHECK(r.iterations().back() == 12);

  std::istringstream bad("iteration,psi_t@psu:1\n1,abc\n");
  CHECK_THROWS(PosteriorSamples::read_csv(bad));
  std::filesystem::remove_all(dir);
}
