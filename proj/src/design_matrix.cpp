#include "dentmrf/design_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dentmrf/dataset.hpp"
#include "dentmrf/potts.hpp"

namespace dentmrf {

using nlohmann::json;

const std::array<std::string, kNumCovariates>& covariate_names() {
  static const std::array<std::string, kNumCovariates> names{"gender", "poverty", "race_white",
                                                            "race_black", "sealant", "fluorosis"};
  return names;
}

namespace {

const std::array<std::string, kNumSpatialStats> kSpatialNames{"s_x", "s1", "s2", "s3", "s4", "s5"};

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

json transform_json(const std::string& name, const ColumnTransform& t) {
  return json{{"name", name},
              {"kind", t.kind == ScaleKind::BinaryShift ? "binary_shift" : "half_sd"},
              {"center", t.center},
              {"scale", t.scale}};
}

ColumnTransform transform_from_json(const json& j) {
  ColumnTransform t;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "binary_shift") {
    t.kind = ScaleKind::BinaryShift;
  } else if (kind == "half_sd") {
    t.kind = ScaleKind::HalfSd;
  } else {
    throw std::invalid_argument("unknown transform kind '" + kind + "'");
  }
  t.center = j.at("center").get<double>();
  t.scale = j.at("scale").get<double>();
  return t;
}

}  // namespace

ColumnTransform fit_binary(std::span<const double> values, const std::string& name) {
  if (values.empty()) throw DegenerateSpecError("binary covariate '" + name + "' has no observed values");
  const double p = mean_of(values);
  if (p <= 0.0 || p >= 1.0) throw DegenerateSpecError("binary covariate '" + name + "' is constant in the data");
  return ColumnTransform{ScaleKind::BinaryShift, p, 1.0};
}

ColumnTransform fit_half_sd(std::span<const double> values) {
  if (values.empty()) return ColumnTransform{ScaleKind::HalfSd, 0.0, 1.0};
  const double m = mean_of(values);
  double ss = 0.0;
  for (double x : values) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(values.size()));
  return ColumnTransform{ScaleKind::HalfSd, m, sd > 0.0 ? 0.5 / sd : 1.0};
}

CovariateVector StandardizationSpec::standardize(const RawCovariates& raw) const {
  const auto& c = covariates;
  CovariateVector z{};
  z[0] = c[0].apply(raw.gender);
  z[1] = raw.poverty ? c[1].apply(*raw.poverty) : 0.0;
  z[2] = c[2].apply(raw.race == 1 ? 1.0 : 0.0);
  z[3] = c[3].apply(raw.race == 2 ? 1.0 : 0.0);
  z[4] = raw.sealant ? c[4].apply(*raw.sealant) : 0.0;
  z[5] = raw.fluorosis ? c[5].apply(*raw.fluorosis) : 0.0;
  return z;
}

SpatialStats StandardizationSpec::standardize(const SpatialStats& raw) const {
  SpatialStats out{};
  for (int i = 0; i < kNumSpatialStats; ++i) out[i] = spatial[i].apply(raw[i]);
  return out;
}

std::string StandardizationSpec::to_json() const {
  json j;
  j["covariates"] = json::array();
  for (int r = 0; r < kNumCovariates; ++r) j["covariates"].push_back(transform_json(covariate_names()[r], covariates[r]));
  j["weight"] = transform_json("weight", weight);
  j["spatial"] = json::array();
  for (int i = 0; i < kNumSpatialStats; ++i) j["spatial"].push_back(transform_json(kSpatialNames[i], spatial[i]));
  return j.dump(2) + "\n";
}

StandardizationSpec StandardizationSpec::from_json(const std::string& text) {
  const auto j = json::parse(text);
  StandardizationSpec spec;
  const auto& cov = j.at("covariates");
  if (cov.size() != kNumCovariates) throw std::invalid_argument("standardization needs 6 covariate transforms");
  for (int r = 0; r < kNumCovariates; ++r) spec.covariates[r] = transform_from_json(cov[r]);
  spec.weight = transform_from_json(j.at("weight"));
  const auto& sp = j.at("spatial");
  if (sp.size() != kNumSpatialStats) throw std::invalid_argument("standardization needs 6 spatial transforms");
  for (int i = 0; i < kNumSpatialStats; ++i) spec.spatial[i] = transform_from_json(sp[i]);
  return spec;
}

void StandardizationSpec::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json();
}

StandardizationSpec StandardizationSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

StandardizationSpec identity_standardization() {
  StandardizationSpec spec;
  for (auto& t : spec.covariates) t = ColumnTransform{ScaleKind::HalfSd, 0.0, 1.0};
  for (auto& t : spec.spatial) t = ColumnTransform{ScaleKind::HalfSd, 0.0, 1.0};
  spec.weight = ColumnTransform{ScaleKind::HalfSd, 0.0, 1.0};
  return spec;
}

StandardizationSpec fit_standardization(const SurveyDataset& dataset, bool covariates) {
  if (dataset.num_people() == 0) {
    if (covariates) throw std::invalid_argument("cannot standardize an empty dataset");
    return identity_standardization();
  }
  const auto graph = dataset.graph();
  std::vector<double> gender, poverty, white, black, sealant, fluorosis, weight;
  std::array<std::vector<double>, kNumSpatialStats> spatial;
  for (const auto& psu : dataset.psus) {
    for (const auto& person : psu.people) {
      const auto raw = raw_covariates(person, graph);
      gender.push_back(raw.gender);
      white.push_back(raw.race == 1);
      black.push_back(raw.race == 2);
      weight.push_back(person.weight);
      if (raw.poverty) poverty.push_back(*raw.poverty);
      if (person.r2 == 1) {
        if (raw.sealant) sealant.push_back(*raw.sealant);
        if (raw.fluorosis) fluorosis.push_back(*raw.fluorosis);
        const auto stats = spatial_stats(observed_mouth(person, graph), graph);
        for (int i = 0; i < kNumSpatialStats; ++i) spatial[i].push_back(stats[i]);
      }
    }
  }
  StandardizationSpec spec = identity_standardization();
  for (int i = 0; i < kNumSpatialStats; ++i) spec.spatial[i] = fit_half_sd(spatial[i]);
  if (!covariates) return spec;
  spec.covariates[0] = fit_binary(gender, "gender");
  spec.covariates[1] = fit_binary(poverty, "poverty");
  spec.covariates[2] = fit_binary(white, "race_white");
  spec.covariates[3] = fit_binary(black, "race_black");
  spec.covariates[4] = fit_binary(sealant, "sealant");
  spec.covariates[5] = fit_half_sd(fluorosis);
  spec.weight = fit_half_sd(weight);
  return spec;
}

double inclusion_probability(double weight) {
  if (!(weight > 0.0) || !std::isfinite(weight)) throw std::domain_error("sampling weight must be positive");
  return 1.0 / weight;
}

SplineBasis::SplineBasis(double lower, double upper, std::vector<double> interior)
    : lower_(lower), upper_(upper), interior_(std::move(interior)) {
  if (!(lower < upper)) throw std::invalid_argument("spline range must have lower < upper");
  if (!std::is_sorted(interior_.begin(), interior_.end())) throw std::invalid_argument("interior knots must be sorted");
  for (double k : interior_) {
    if (k < lower || k > upper) throw std::invalid_argument("interior knot outside spline range");
  }
  knots_.assign(kDegree + 1, lower_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), kDegree + 1, upper_);
}

void SplineBasis::eval(double p, std::span<double> out) const {
  const int q = count();
  if (static_cast<int>(out.size()) != q) throw std::invalid_argument("spline output size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const double u = std::clamp(p, lower_, upper_);
  const auto& t = knots_;

  // Span index i with t[i] <= u < t[i+1], restricted to non-empty spans.
  int i = static_cast<int>(std::upper_bound(t.begin(), t.end(), u) - t.begin()) - 1;
  i = std::clamp(i, kDegree, q - 1);
  while (i > kDegree && t[i] == t[i + 1]) --i;

  std::array<double, kDegree + 1> n{1.0, 0.0, 0.0};
  std::array<double, kDegree + 1> left{}, right{};
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = u - t[i + 1 - j];
    right[j] = t[i + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? n[r] / denom : 0.0;
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  for (int r = 0; r <= kDegree; ++r) out[i - kDegree + r] = n[r];
}

std::vector<double> SplineBasis::eval(double p) const {
  std::vector<double> out(count());
  eval(p, out);
  return out;
}

SplineBasis make_knots(std::span<const double> probabilities, int q) {
  if (q < SplineBasis::kDegree + 1) throw std::invalid_argument("spline basis count must be at least 3");
  std::vector<double> sorted(probabilities.begin(), probabilities.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::set<double>(sorted.begin(), sorted.end()).size();
  if (distinct < static_cast<std::size_t>(q)) {
    throw std::invalid_argument("need at least " + std::to_string(q) + " distinct inclusion probabilities, got " +
                                std::to_string(distinct));
  }
  const int n_interior = q - SplineBasis::kDegree - 1;
  std::vector<double> interior;
  for (int j = 1; j <= n_interior; ++j) {
    const double level = static_cast<double>(j) / (n_interior + 1);
    const double h = level * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    interior.push_back(sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]));
  }
  return SplineBasis(sorted.front(), sorted.back(), std::move(interior));
}

std::vector<double> eval_basis(const SplineBasis& basis, double p) { return basis.eval(p); }

}  // namespace dentmrf
