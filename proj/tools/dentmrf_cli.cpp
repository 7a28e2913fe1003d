// Command-line front end: validate, simulate, fit, summarize, version.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dentmrf/config.hpp"
#include "dentmrf/dataset.hpp"
#include "dentmrf/posterior.hpp"
#include "dentmrf/sampler.hpp"
#include "dentmrf/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dentmrf;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

int cmd_validate(const fs::path& data) {
  SurveyDataset ds;
  try {
    ds = parse_dataset(data);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  const auto issues = validate(ds);
  if (!issues.empty()) {
    for (const auto& i : issues) std::cerr << i.record << ": " << i.message << "\n";
    std::cerr << issues.size() << " invalid record(s)\n";
    return kRuntimeError;
  }
  std::cout << "ok: " << ds.num_people() << " individuals in " << ds.psus.size() << " PSUs, " << ds.teeth.size()
            << " teeth\n";
  return 0;
}

int cmd_simulate(const std::optional<fs::path>& spec_path, std::uint64_t seed, const fs::path& out) {
  const auto spec = spec_path ? load_synthetic_spec(*spec_path) : SyntheticSpec{};
  const auto data = generate_synthetic(spec, seed);
  write_synthetic(data, out);
  std::cout << "wrote " << data.dataset.num_people() << " individuals in " << data.dataset.psus.size() << " PSUs to "
            << out.string() << "\n";
  return 0;
}

int cmd_fit(const std::optional<fs::path>& config_path, const fs::path& data_dir, const fs::path& out,
            std::optional<std::uint64_t> seed, std::optional<int> threads, std::optional<fs::path> checkpoint,
            const std::optional<fs::path>& resume) {
  FitConfig cfg = config_path ? load_fit_config(*config_path) : FitConfig{};
  if (seed) cfg.chain.seed = *seed;
  if (threads) cfg.chain.threads = *threads;
  const auto dataset = load_dataset(data_dir);
  fs::create_directories(out);

  Sampler sampler(dataset, cfg.model, cfg.chain);
  std::optional<std::uint64_t> keep;
  if (resume) {
    sampler.load_checkpoint(*resume);
    keep = sampler.state().iteration;
    std::cerr << "resuming at iteration " << *keep << "\n";
  }
  if (!checkpoint && cfg.chain.checkpoint_every > 0) checkpoint = out / "checkpoint.json";

  sampler.model().standardization().save(out / "standardization.json");
  {
    std::ofstream c(out / "config.json", std::ios::binary);
    c << fit_config_json(cfg);
  }
  CsvSink sink(out / "samples.csv", keep);
  sampler.run(&sink, checkpoint);

  const auto acc = sampler.acceptance();
  std::ofstream a(out / "acceptance.csv", std::ios::binary);
  a << "block,rate\n";
  for (int b = 0; b < kNumBlocks; ++b) {
    if (acc.block[b] >= 0.0) a << block_name(static_cast<Block>(b)) << ',' << format_double(acc.block[b]) << '\n';
  }
  if (acc.fluorosis >= 0.0) a << "fluorosis_imputation," << format_double(acc.fluorosis) << '\n';
  std::cout << "wrote " << cfg.chain.retained() << " retained draws to " << (out / "samples.csv").string() << "\n";
  return 0;
}

int cmd_summarize(const fs::path& samples_arg, const std::optional<fs::path>& out_arg) {
  const fs::path samples_path = fs::is_directory(samples_arg) ? samples_arg / "samples.csv" : samples_arg;
  const auto samples = PosteriorSamples::read_csv(samples_path);
  const fs::path out = out_arg ? *out_arg : samples_path.parent_path();
  if (!out.empty()) fs::create_directories(out);
  {
    std::ofstream s(out / "summary.csv", std::ios::binary);
    write_summary(summarize(samples), s);
  }
  {
    std::ofstream p(out / "plot_data.csv", std::ios::binary);
    write_plot_data(samples, p);
  }
  std::cout << "summarized " << samples.num_params() << " parameters over " << samples.num_draws() << " draws\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatial models for dental survey data"};
  app.require_subcommand(1);

  std::string data, out, config, spec, samples, checkpoint, resume;
  std::uint64_t seed = 1;
  int threads = 0;

  auto* validate_cmd = app.add_subcommand("validate", "Check a dataset against the schema");
  validate_cmd->add_option("--data", data, "Dataset directory")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Write a synthetic dataset and its ground truth");
  simulate_cmd->add_option("--spec", spec, "Synthetic spec (JSON)");
  simulate_cmd->add_option("--seed", seed, "Random seed");
  simulate_cmd->add_option("--out", out, "Output directory")->required();

  auto* fit_cmd = app.add_subcommand("fit", "Run the MCMC sampler");
  fit_cmd->add_option("--config", config, "Fit configuration (JSON)");
  fit_cmd->add_option("--data", data, "Dataset directory")->required();
  fit_cmd->add_option("--out", out, "Output directory")->required();
  auto* seed_opt = fit_cmd->add_option("--seed", seed, "Override the configured seed");
  auto* threads_opt = fit_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file");
  fit_cmd->add_option("--resume", resume, "Resume from a checkpoint file");

  auto* summarize_cmd = app.add_subcommand("summarize", "Summarize retained draws");
  summarize_cmd->add_option("--samples", samples, "samples.csv or the fit output directory")->required();
  summarize_cmd->add_option("--out", out, "Output directory (default: beside the samples)");

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*validate_cmd) return cmd_validate(data);
    if (*simulate_cmd) {
      return cmd_simulate(spec.empty() ? std::nullopt : std::optional<fs::path>(spec), seed, out);
    }
    if (*fit_cmd) {
      return cmd_fit(config.empty() ? std::nullopt : std::optional<fs::path>(config), data, out,
                     seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
                     threads_opt->count() ? std::optional<int>(threads) : std::nullopt,
                     checkpoint.empty() ? std::nullopt : std::optional<fs::path>(checkpoint),
                     resume.empty() ? std::nullopt : std::optional<fs::path>(resume));
    }
    if (*summarize_cmd) {
      return cmd_summarize(samples, out.empty() ? std::nullopt : std::optional<fs::path>(out));
    }
    std::cout << "dentmrf " << DENTMRF_VERSION << "\n";
    return 0;
  } catch (const ValidationError& e) {
    for (const auto& i : e.issues()) std::cerr << i.record << ": " << i.message << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}
