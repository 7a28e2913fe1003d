#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dentmrf {

struct SurveyDataset;

inline constexpr int kNumCovariates = 6;

// Individual-level covariates in model order.
enum class Covariate : int { Gender = 0, Poverty, RaceWhite, RaceBlack, Sealant, Fluorosis };

using CovariateVector = std::array<double, kNumCovariates>;

const std::array<std::string, kNumCovariates>& covariate_names();

// Unstandardized covariates. Poverty is absent for income nonresponders;
// sealant and fluorosis are absent when no dental exam was taken.
struct RawCovariates {
  int gender = 0;
  int race = 3;
  std::optional<int> poverty;
  std::optional<int> sealant;       // any sealant on a present tooth
  std::optional<double> fluorosis;  // mean over present teeth
};

// Spatial statistics entering the selection and imputation predictors:
// tooth agreement count followed by the five surface statistics.
inline constexpr int kNumSpatialStats = 6;
using SpatialStats = std::array<double, kNumSpatialStats>;

enum class ScaleKind { BinaryShift, HalfSd };

struct ColumnTransform {
  ScaleKind kind = ScaleKind::HalfSd;
  double center = 0.0;
  double scale = 1.0;

  double apply(double raw) const { return (raw - center) * scale; }
  double invert(double value) const { return value / scale + center; }
  bool operator==(const ColumnTransform&) const = default;
};

class DegenerateSpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary columns become {1-p, -p}; continuous ones mean 0 and (population)
// standard deviation 0.5. A constant continuous column is centered only.
ColumnTransform fit_binary(std::span<const double> values, const std::string& name);
ColumnTransform fit_half_sd(std::span<const double> values);

struct StandardizationSpec {
  std::array<ColumnTransform, kNumCovariates> covariates{};
  ColumnTransform weight{};
  std::array<ColumnTransform, kNumSpatialStats> spatial{};

  // Missing entries map to 0 (the column mean); callers impute before use.
  CovariateVector standardize(const RawCovariates& raw) const;
  SpatialStats standardize(const SpatialStats& raw) const;

  std::string to_json() const;
  static StandardizationSpec from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static StandardizationSpec load(const std::filesystem::path& path);

  bool operator==(const StandardizationSpec&) const = default;
};

// Identity transforms; used when covariates are switched off.
StandardizationSpec identity_standardization();

// Fitted on observed values only: demographics over everyone, dental
// aggregates and spatial statistics over exam takers. With `covariates`
// false only the spatial statistics are fitted.
StandardizationSpec fit_standardization(const SurveyDataset& dataset, bool covariates = true);

double inclusion_probability(double weight);

// Clamped quadratic B-spline basis over the inclusion-probability range.
class SplineBasis {
 public:
  static constexpr int kDegree = 2;

  // `interior` must be nondecreasing and lie inside [lower, upper].
  SplineBasis(double lower, double upper, std::vector<double> interior);

  int degree() const { return kDegree; }
  int count() const { return static_cast<int>(interior_.size()) + kDegree + 1; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  const std::vector<double>& interior() const { return interior_; }
  const std::vector<double>& knots() const { return knots_; }

  // Cox-de Boor evaluation. Points outside [lower, upper] are clamped.
  void eval(double p, std::span<double> out) const;
  std::vector<double> eval(double p) const;

 private:
  double lower_, upper_;
  std::vector<double> interior_;
  std::vector<double> knots_;
};

// Interior knots at equally spaced quantiles of `probabilities`.
SplineBasis make_knots(std::span<const double> probabilities, int q);
std::vector<double> eval_basis(const SplineBasis& basis, double p);

}  // namespace dentmrf
