#include "dentmrf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dentmrf {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw std::invalid_argument("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("bad value for '" + std::string(key) + "' in " + where);
  }
}

HyperConstants constants_from(const json& j, HyperConstants c, const std::string& where) {
  check_keys(j, where, {"lambda", "tau", "a", "b"});
  read(j, "lambda", c.lambda, where);
  read(j, "tau", c.tau, where);
  read(j, "a", c.a, where);
  read(j, "b", c.b, where);
  if (!(c.tau > 0.0) || !(c.a > 0.0) || !(c.b > 0.0)) throw std::invalid_argument(where + ": tau, a, b must be positive");
  return c;
}

}  // namespace

FitConfig parse_fit_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"chain", "model", "hyper"});
  FitConfig cfg;
  if (j.contains("chain")) {
    const auto& c = j["chain"];
    const std::string w = "chain";
    check_keys(c, w,
               {"n_iterations", "burn_in", "thinning", "n_aux", "aux_sweeps", "aux_mode", "aux_thin", "ratio",
                "tooth_scale", "surface_scale", "regression_scale", "fluorosis_step", "adapt", "seed", "threads",
                "init_sweeps", "checkpoint_every", "progress_every"});
    auto& ch = cfg.chain;
    read(c, "n_iterations", ch.n_iterations, w);
    read(c, "burn_in", ch.burn_in, w);
    read(c, "thinning", ch.thinning, w);
    read(c, "n_aux", ch.aux.n_aux, w);
    read(c, "aux_sweeps", ch.aux.sweeps, w);
    read(c, "aux_thin", ch.aux.thin, w);
    std::string mode = "independent", ratio = "noisy";
    read(c, "aux_mode", mode, w);
    read(c, "ratio", ratio, w);
    if (mode == "independent") {
      ch.aux.mode = AuxMode::Independent;
    } else if (mode == "thinned") {
      ch.aux.mode = AuxMode::Thinned;
    } else {
      throw std::invalid_argument("aux_mode must be 'independent' or 'thinned'");
    }
    if (ratio == "noisy") {
      ch.ratio = RatioMode::Noisy;
    } else if (ratio == "exact") {
      ch.ratio = RatioMode::Exact;
    } else {
      throw std::invalid_argument("ratio must be 'noisy' or 'exact'");
    }
    read(c, "tooth_scale", ch.tooth_scale, w);
    read(c, "surface_scale", ch.surface_scale, w);
    read(c, "regression_scale", ch.regression_scale, w);
    read(c, "fluorosis_step", ch.fluorosis_step, w);
    read(c, "adapt", ch.adapt, w);
    read(c, "seed", ch.seed, w);
    read(c, "threads", ch.threads, w);
    read(c, "init_sweeps", ch.init_sweeps, w);
    read(c, "checkpoint_every", ch.checkpoint_every, w);
    read(c, "progress_every", ch.progress_every, w);
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    const std::string w = "model";
    check_keys(m, w,
               {"teeth", "spline_q", "knots", "use_covariates", "tooth_level", "surface_level", "missingness",
                "pooling", "fixed", "initial"});
    auto& mo = cfg.model;
    read(m, "teeth", mo.teeth, w);
    read(m, "spline_q", mo.spline_q, w);
    std::string knots = "quantile";
    read(m, "knots", knots, w);
    if (knots != "quantile") throw std::invalid_argument("knots: only 'quantile' placement is supported");
    read(m, "use_covariates", mo.use_covariates, w);
    read(m, "tooth_level", mo.tooth_level, w);
    read(m, "surface_level", mo.surface_level, w);
    read(m, "pooling", mo.pooling, w);
    std::string miss = "auto";
    read(m, "missingness", miss, w);
    if (miss == "auto") {
      mo.missingness = ModelOptions::Missingness::Auto;
    } else if (miss == "on") {
      mo.missingness = ModelOptions::Missingness::On;
    } else if (miss == "off") {
      mo.missingness = ModelOptions::Missingness::Off;
    } else {
      throw std::invalid_argument("missingness must be 'auto', 'on' or 'off'");
    }
    read(m, "fixed", mo.fixed, w);
    read(m, "initial", mo.initial, w);
  }
  if (j.contains("hyper")) {
    const auto& h = j["hyper"];
    const std::string w = "hyper";
    check_keys(h, w, {"lambda_spatial", "lambda_other", "tau", "a", "b", "overrides"});
    auto& hd = cfg.model.hyper;
    read(h, "lambda_spatial", hd.lambda_spatial, w);
    read(h, "lambda_other", hd.lambda_other, w);
    read(h, "tau", hd.tau, w);
    read(h, "a", hd.a, w);
    read(h, "b", hd.b, w);
    if (!(hd.tau > 0.0) || !(hd.a > 0.0) || !(hd.b > 0.0)) throw std::invalid_argument("hyper: tau, a, b must be positive");
    if (h.contains("overrides")) {
      const auto& o = h["overrides"];
      if (!o.is_object()) throw std::invalid_argument("hyper.overrides must be an object");
      for (const auto& [name, value] : o.items()) {
        const bool spatial = name.rfind("psi_", 0) == 0;
        HyperConstants base{spatial ? hd.lambda_spatial : hd.lambda_other, hd.tau, hd.a, hd.b};
        hd.overrides[name] = constants_from(value, base, "hyper.overrides." + name);
      }
    }
  }
  cfg.chain.validate();
  return cfg;
}

FitConfig load_fit_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_fit_config(buf.str());
}

std::string fit_config_json(const FitConfig& cfg) {
  const auto& ch = cfg.chain;
  const auto& mo = cfg.model;
  json j;
  j["chain"] = {{"n_iterations", ch.n_iterations},
                {"burn_in", ch.burn_in},
                {"thinning", ch.thinning},
                {"n_aux", ch.aux.n_aux},
                {"aux_sweeps", ch.aux.sweeps},
                {"aux_mode", ch.aux.mode == AuxMode::Independent ? "independent" : "thinned"},
                {"aux_thin", ch.aux.thin},
                {"ratio", ch.ratio == RatioMode::Noisy ? "noisy" : "exact"},
                {"tooth_scale", ch.tooth_scale},
                {"surface_scale", ch.surface_scale},
                {"regression_scale", ch.regression_scale},
                {"fluorosis_step", ch.fluorosis_step},
                {"adapt", ch.adapt},
                {"seed", ch.seed},
                {"threads", ch.threads},
                {"init_sweeps", ch.init_sweeps},
                {"checkpoint_every", ch.checkpoint_every},
                {"progress_every", ch.progress_every}};
  const char* miss = mo.missingness == ModelOptions::Missingness::Auto ? "auto"
                     : mo.missingness == ModelOptions::Missingness::On ? "on"
                                                                       : "off";
  j["model"] = {{"teeth", mo.teeth},
                {"spline_q", mo.spline_q},
                {"knots", "quantile"},
                {"use_covariates", mo.use_covariates},
                {"tooth_level", mo.tooth_level},
                {"surface_level", mo.surface_level},
                {"missingness", miss},
                {"pooling", mo.pooling},
                {"fixed", mo.fixed},
                {"initial", mo.initial}};
  json overrides = json::object();
  for (const auto& [name, c] : mo.hyper.overrides) {
    overrides[name] = {{"lambda", c.lambda}, {"tau", c.tau}, {"a", c.a}, {"b", c.b}};
  }
  j["hyper"] = {{"lambda_spatial", mo.hyper.lambda_spatial},
                {"lambda_other", mo.hyper.lambda_other},
                {"tau", mo.hyper.tau},
                {"a", mo.hyper.a},
                {"b", mo.hyper.b},
                {"overrides", overrides}};
  return j.dump(2) + "\n";
}

}  // namespace dentmrf
