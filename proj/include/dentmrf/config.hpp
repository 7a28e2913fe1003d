#pragma once

#include <filesystem>
#include <string>

#include "dentmrf/model.hpp"
#include "dentmrf/sampler.hpp"

namespace dentmrf {

struct FitConfig {
  ChainConfig chain;
  ModelOptions model;
};

// JSON with optional "chain", "model" and "hyper" objects; unknown keys are
// rejected. Throws std::invalid_argument with the offending key.
FitConfig parse_fit_config(const std::string& text);
FitConfig load_fit_config(const std::filesystem::path& path);
std::string fit_config_json(const FitConfig& config);

}  // namespace dentmrf
