#include "dentmrf/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dentmrf {

namespace {

const std::array<std::string, kNumSpatialStats> kStatNames{"s_x", "s1", "s2", "s3", "s4", "s5"};

std::string prefix(Block block) {
  switch (block) {
    case Block::Norp: return "norp";
    case Block::Nord: return "nord";
    case Block::PovertyModel: return "gamma_pov";
    case Block::SealantModel: return "gamma_seal";
    case Block::FluorosisModel: return "gamma_fluor";
    default: return {};
  }
}

const std::string& cov_name(Covariate c) { return covariate_names()[static_cast<int>(c)]; }

}  // namespace

std::string block_name(Block block) {
  switch (block) {
    case Block::Tooth: return "tooth";
    case Block::Surface: return "surface";
    case Block::Norp: return "norp";
    case Block::Nord: return "nord";
    case Block::PovertyModel: return "poverty_model";
    case Block::SealantModel: return "sealant_model";
    case Block::FluorosisModel: return "fluorosis_model";
  }
  return "?";
}

std::vector<std::size_t> BlockLayout::free_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < families.size(); ++k) {
    if (families[k].free) out.push_back(k);
  }
  return out;
}

const PredictorLayout& predictor_layout(Block block) {
  using C = Covariate;
  static const PredictorLayout norp{{C::Gender, C::RaceWhite, C::RaceBlack, C::Sealant, C::Fluorosis}};
  static const PredictorLayout nord{{C::Gender, C::Poverty, C::RaceWhite, C::RaceBlack, C::Sealant, C::Fluorosis}};
  static const PredictorLayout seal{{C::Gender, C::Poverty, C::RaceWhite, C::RaceBlack, C::Fluorosis}};
  static const PredictorLayout fluor{{C::Gender, C::Poverty, C::RaceWhite, C::RaceBlack}};
  switch (block) {
    case Block::Norp:
    case Block::PovertyModel: return norp;
    case Block::Nord: return nord;
    case Block::SealantModel: return seal;
    case Block::FluorosisModel: return fluor;
    default: throw std::invalid_argument("block " + block_name(block) + " has no predictor layout");
  }
}

std::vector<std::string> block_family_names(Block block, int q) {
  std::vector<std::string> names;
  auto covs = [&](const std::string& p) {
    for (const auto& c : covariate_names()) names.push_back(p + "." + c);
  };
  auto spline = [&](const std::string& p) {
    for (int j = 1; j <= q; ++j) names.push_back(p + ".spline" + std::to_string(j));
  };
  if (block == Block::Tooth) {
    names = {"psi_t", "alpha_m", "alpha_mbar"};
    covs("beta_m");
    covs("beta_mbar");
    spline("beta_t");
    return names;
  }
  if (block == Block::Surface) {
    for (auto h : kAllInteractions) names.push_back("psi_p." + to_string(h));
    names.push_back("alpha_d");
    names.push_back("alpha_f");
    covs("beta_d");
    covs("beta_f");
    spline("beta_p");
    return names;
  }
  const auto p = prefix(block);
  names.push_back(p + ".intercept");
  for (auto c : predictor_layout(block).covariates) names.push_back(p + "." + cov_name(c));
  for (const auto& s : kStatNames) names.push_back(p + "." + s);
  if (block == Block::Norp) names.push_back(p + ".poverty");
  if (block == Block::Nord) names.push_back(p + ".r1");
  return names;
}

bool family_matches(const std::string& pattern, const std::string& name) {
  if (!pattern.empty() && pattern.back() == '*') {
    return name.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0;
  }
  return pattern == name;
}

ModelContext::ModelContext(const SurveyDataset& dataset, ModelOptions options)
    : graph_(options.teeth.empty() ? dataset.graph() : DentitionGraph::subgraph(options.teeth)),
      options_(std::move(options)) {
  if (!options_.teeth.empty() && options_.teeth != dataset.teeth) {
    throw std::invalid_argument("model dentition does not match the dataset dentition");
  }
  if (options_.spline_q < 0) throw std::invalid_argument("spline_q must be nonnegative");
  if (!options_.tooth_level && !options_.surface_level) throw std::invalid_argument("both Potts levels are disabled");

  num_psus_ = dataset.psus.size();
  pooled_ = options_.pooling && num_psus_ >= 2;
  bool missing_poverty = false, missing_exam = false;
  std::vector<double> probs;
  for (const auto& psu : dataset.psus) {
    for (const auto& person : psu.people) {
      missing_poverty |= person.r1 == 0;
      missing_exam |= person.r2 == 0;
      probs.push_back(inclusion_probability(person.weight));
    }
  }
  using M = ModelOptions::Missingness;
  if (options_.missingness == M::Off && (missing_poverty || missing_exam)) {
    throw std::invalid_argument("dataset has nonresponse; missingness models cannot be switched off");
  }
  const bool norp = options_.missingness == M::On || (options_.missingness == M::Auto && missing_poverty);
  const bool nord = options_.missingness == M::On || (options_.missingness == M::Auto && missing_exam);
  if (nord && !options_.tooth_level) {
    throw std::invalid_argument("augmenting missing exams needs the tooth level");
  }

  standardization_ = fit_standardization(dataset, options_.use_covariates);
  if (options_.spline_q > 0) spline_ = make_knots(probs, options_.spline_q);

  const int q = spline_q();
  const auto& h = options_.hyper;
  for (int bi = 0; bi < kNumBlocks; ++bi) {
    const auto block = static_cast<Block>(bi);
    auto& layout = layouts_[bi];
    switch (block) {
      case Block::Tooth: layout.active = options_.tooth_level; break;
      case Block::Surface: layout.active = options_.surface_level; break;
      case Block::Norp: layout.active = norp; break;
      case Block::Nord: layout.active = nord; break;
      case Block::PovertyModel: layout.active = norp && options_.use_covariates; break;
      case Block::SealantModel:
      case Block::FluorosisModel: layout.active = nord && options_.use_covariates; break;
    }
    for (const auto& name : block_family_names(block, q)) {
      FamilyInfo f;
      f.name = name;
      const bool spatial = name.rfind("psi_", 0) == 0;
      f.support = spatial ? Support::NonNegative : Support::Real;
      f.constants = HyperConstants{spatial ? h.lambda_spatial : h.lambda_other, h.tau, h.a, h.b};
      if (auto it = h.overrides.find(name); it != h.overrides.end()) f.constants = it->second;
      f.initial = spatial ? 0.1 : 0.0;
      f.free = layout.active;
      if (!options_.use_covariates) {
        const auto dot = name.find('.');
        const auto tail = dot == std::string::npos ? std::string() : name.substr(dot + 1);
        const bool is_cov = std::find(covariate_names().begin(), covariate_names().end(), tail) !=
                            covariate_names().end();
        if (is_cov && name.rfind("psi_p.", 0) != 0) f.free = false;
      }
      for (const auto& [pattern, value] : options_.fixed) {
        if (family_matches(pattern, name)) {
          f.free = false;
          f.initial = value;
        }
      }
      for (const auto& [pattern, value] : options_.initial) {
        if (family_matches(pattern, name)) f.initial = value;
      }
      if (f.support == Support::NonNegative && f.initial < 0.0) {
        throw std::invalid_argument("initial value of " + name + " must be nonnegative");
      }
      layout.families.push_back(std::move(f));
    }
  }
}

bool ModelContext::factors_use_stats(const PsuParams& params) const {
  for (auto block : {Block::Norp, Block::Nord, Block::PovertyModel, Block::SealantModel, Block::FluorosisModel}) {
    if (!active(block)) continue;
    const auto first = 1 + predictor_layout(block).covariates.size();
    const auto& fam = layout(block).families;
    const auto& v = params[block];
    for (std::size_t k = first; k < first + kNumSpatialStats; ++k) {
      if (fam[k].free || v[k] != 0.0) return true;
    }
  }
  return false;
}

PsuParams ModelContext::initial_params() const {
  PsuParams p;
  for (int b = 0; b < kNumBlocks; ++b) {
    for (const auto& f : layouts_[b].families) p.blocks[b].push_back(f.initial);
  }
  p.phi2 = 1.0;
  return p;
}

Subject ModelContext::make_subject(const Person& person) const {
  Subject s;
  s.person_id = person.person_id;
  s.r1 = person.r1;
  s.r2 = person.r2;
  s.gender = person.gender;
  s.race = person.race;
  auto raw = raw_covariates(person, graph_);
  const auto& cov = standardization_.covariates;
  if (!raw.poverty) raw.poverty = cov[1].center >= 0.5 ? 1 : 0;
  if (person.r2 == 1) {
    s.mouth = observed_mouth(person, graph_);
  } else {
    s.mouth = MouthState::all_present(graph_);
    raw.sealant = cov[4].center >= 0.5 ? 1 : 0;
    raw.fluorosis = cov[5].center;
  }
  s.poverty = *raw.poverty;
  s.sealant = raw.sealant.value_or(0);
  if (options_.use_covariates) s.z = standardization_.standardize(raw);
  if (spline_) s.spline = spline_->eval(inclusion_probability(person.weight));
  refresh(s);
  return s;
}

void ModelContext::refresh(Subject& s) const {
  s.tooth_counts = tooth_counts(s.mouth, graph_);
  s.surface_counts = surface_counts(s.mouth, graph_);
  s.stats = standardization_.standardize(spatial_stats(s.mouth, graph_));
}

void ModelContext::set_poverty(Subject& s, int value) const {
  s.poverty = value;
  if (options_.use_covariates) s.z[1] = standardization_.covariates[1].apply(value);
}

void ModelContext::set_sealant(Subject& s, int value) const {
  s.sealant = value;
  if (options_.use_covariates) s.z[4] = standardization_.covariates[4].apply(value);
}

void ModelContext::set_fluorosis(Subject& s, double standardized) const {
  if (options_.use_covariates) s.z[5] = standardized;
}

}  // namespace dentmrf
