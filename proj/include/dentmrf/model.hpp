#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dentmrf/dataset.hpp"
#include "dentmrf/design_matrix.hpp"
#include "dentmrf/dentition.hpp"
#include "dentmrf/potts.hpp"

namespace dentmrf {

// Parameter blocks carried by every PSU. Each entry of a block is a pooled
// family with its own group mean and variance.
enum class Block : int {
  Tooth = 0,        // tooth-level Potts
  Surface,          // surface-level Potts
  Norp,             // selection model for income nonresponse
  Nord,             // selection model for dental-exam nonresponse
  PovertyModel,     // logistic imputation model for poverty
  SealantModel,     // logistic imputation model for sealant
  FluorosisModel,   // linear imputation model for fluorosis
};
inline constexpr int kNumBlocks = 7;

std::string block_name(Block block);

enum class Support { Real, NonNegative };

struct HyperConstants {
  double lambda = 0.0;
  double tau = 5.0;
  double a = 0.001;
  double b = 0.001;
};

struct HyperDefaults {
  double lambda_spatial = 0.5;
  double lambda_other = 0.0;
  double tau = 5.0;
  double a = 0.001;
  double b = 0.001;
  std::map<std::string, HyperConstants> overrides;  // by family name
};

struct ModelOptions {
  std::vector<int> teeth;  // empty: dentition of the dataset
  int spline_q = 5;        // 0 disables the inclusion-probability spline
  bool use_covariates = true;
  bool tooth_level = true;
  bool surface_level = true;
  enum class Missingness { Auto, On, Off } missingness = Missingness::Auto;
  bool pooling = true;  // false: each PSU parameter gets N(lambda, tau^2) directly
  // Families held at a value. A trailing '*' matches by prefix.
  std::map<std::string, double> fixed;
  std::map<std::string, double> initial;
  HyperDefaults hyper;
};

struct FamilyInfo {
  std::string name;
  Support support = Support::Real;
  HyperConstants constants;
  bool free = true;
  double initial = 0.0;
};

struct BlockLayout {
  bool active = false;
  std::vector<FamilyInfo> families;
  std::size_t size() const { return families.size(); }
  std::vector<std::size_t> free_indices() const;
};

// Predictor layout shared by the selection and imputation regressions:
// (1, covariates..., s(x), s1..s5).
struct PredictorLayout {
  std::vector<Covariate> covariates;
  std::size_t size() const { return 1 + covariates.size() + kNumSpatialStats; }
};

const PredictorLayout& predictor_layout(Block block);

// Names of the entries of `block` for a spline of `q` functions.
std::vector<std::string> block_family_names(Block block, int q);

struct PsuParams {
  std::array<std::vector<double>, kNumBlocks> blocks;
  double phi2 = 1.0;  // fluorosis residual variance

  std::vector<double>& operator[](Block b) { return blocks[static_cast<int>(b)]; }
  const std::vector<double>& operator[](Block b) const { return blocks[static_cast<int>(b)]; }
  ToothParams tooth() const { return ToothParams::unflatten((*this)[Block::Tooth]); }
  SurfaceParams surface() const { return SurfaceParams::unflatten((*this)[Block::Surface]); }
  bool operator==(const PsuParams&) const = default;
};

// Working copy of one individual during fitting: current (observed or
// augmented) outcomes and covariates plus cached derived quantities.
struct Subject {
  std::int64_t person_id = 0;
  int r1 = 1;
  int r2 = 1;
  int gender = 0;
  int race = 3;
  int poverty = 0;  // current value (imputed when r1 = 0)
  int sealant = 0;  // current value (imputed when r2 = 0)
  CovariateVector z{};
  std::vector<double> spline;
  MouthState mouth;
  ToothCounts tooth_counts;
  SurfaceCounts surface_counts;
  SpatialStats stats{};  // standardized

  bool operator==(const Subject&) const = default;
};

class ModelContext {
 public:
  ModelContext(const SurveyDataset& dataset, ModelOptions options);

  const DentitionGraph& graph() const { return graph_; }
  const ModelOptions& options() const { return options_; }
  const StandardizationSpec& standardization() const { return standardization_; }
  const std::optional<SplineBasis>& spline() const { return spline_; }
  int spline_q() const { return spline_ ? spline_->count() : 0; }
  const BlockLayout& layout(Block b) const { return layouts_[static_cast<int>(b)]; }
  bool active(Block b) const { return layout(b).active; }
  bool fluorosis_variance_active() const { return active(Block::FluorosisModel); }
  // Group means and variances are sampled only with two or more PSUs; a
  // single PSU gets the N(lambda, tau^2) hyperprior directly.
  bool pooled() const { return pooled_; }
  std::size_t num_psus() const { return num_psus_; }
  // True when some free or nonzero coefficient ties the selection or
  // imputation models to the spatial statistics.
  bool factors_use_stats(const PsuParams& params) const;

  PsuParams initial_params() const;
  Subject make_subject(const Person& person) const;
  // Refresh z, counts and standardized statistics after a change.
  void refresh(Subject& subject) const;
  void set_poverty(Subject& subject, int value) const;
  void set_sealant(Subject& subject, int value) const;
  void set_fluorosis(Subject& subject, double standardized) const;

 private:
  DentitionGraph graph_;
  ModelOptions options_;
  StandardizationSpec standardization_;
  std::optional<SplineBasis> spline_;
  std::array<BlockLayout, kNumBlocks> layouts_;
  std::size_t num_psus_ = 0;
  bool pooled_ = true;
};

bool family_matches(const std::string& pattern, const std::string& name);

}  // namespace dentmrf
