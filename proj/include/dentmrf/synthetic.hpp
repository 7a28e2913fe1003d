#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dentmrf/dataset.hpp"

namespace dentmrf {

struct FamilyTruth {
  double mean = 0.0;
  double sd = 0.0;  // between-PSU spread
};

struct SyntheticSpec {
  std::vector<int> teeth;  // empty: all 28
  int n_psus = 87;
  // PSU sizes: uniform on [size_min, size_max] except n_small PSUs on
  // [small_min, small_max] and one PSU of size `largest`.
  int size_min = 30, size_max = 69;
  int n_small = 8, small_min = 20, small_max = 29;
  int largest = 84;
  std::optional<int> fixed_size;

  int spline_q = 5;
  bool use_covariates = true;
  int sweeps = 500;
  // PSU-level parameters are drawn as N(mean, sd^2) (zero-truncated for psi
  // families). Families not listed use the defaults of default_truth().
  std::map<std::string, FamilyTruth> truth;

  // Per-PSU nonresponse rates: uniform on [0, max] unless fixed.
  double norp_max = 0.31, nord_max = 0.24;
  std::optional<double> norp_rate, nord_rate;

  double p_female = 0.57;
  double p_white = 0.45, p_black = 0.25;
  double p_poverty = 0.75;
  double p_sealant = 0.30;
  std::vector<double> fluorosis_levels{0.55, 0.2, 0.12, 0.08, 0.05};  // P(level 0..4)
  double weight_min = 465.59, weight_max = 69220.78;

  void validate() const;
};

std::map<std::string, FamilyTruth> default_truth();

SyntheticSpec parse_synthetic_spec(const std::string& json_text);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

struct PsuTruth {
  std::int64_t id = 0;
  std::map<std::string, double> params;
  double norp_rate = 0.0;
  double nord_rate = 0.0;
};

struct SyntheticData {
  SurveyDataset dataset;
  std::vector<PsuTruth> psus;
  std::map<std::string, FamilyTruth> hyper;
  std::uint64_t seed = 0;

  std::string truth_json() const;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);
// Dataset files plus truth.json in `dir`.
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace dentmrf
