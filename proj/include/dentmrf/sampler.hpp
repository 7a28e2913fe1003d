#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dentmrf/dataset.hpp"
#include "dentmrf/hierarchy.hpp"
#include "dentmrf/missingness.hpp"
#include "dentmrf/model.hpp"
#include "dentmrf/posterior.hpp"
#include "dentmrf/ratio.hpp"
#include "dentmrf/rng.hpp"

namespace dentmrf {

enum class RatioMode { Noisy, Exact };

struct ChainConfig {
  std::uint64_t n_iterations = 30000;
  std::uint64_t burn_in = 5000;
  std::uint64_t thinning = 5;
  AuxSettings aux;  // 20 hot-started chains of 50 sweeps
  RatioMode ratio = RatioMode::Noisy;
  double tooth_scale = 0.05;
  double surface_scale = 0.02;
  double regression_scale = 0.05;
  double fluorosis_step = 0.5;
  bool adapt = true;
  std::uint64_t seed = 1;
  int threads = 1;
  int init_sweeps = 20;  // Gibbs sweeps that initialize augmented mouths
  std::uint64_t checkpoint_every = 0;
  std::uint64_t progress_every = 100;  // 0 silences the progress log

  // Throws std::invalid_argument on an inconsistent schedule.
  void validate() const;
  std::uint64_t retained() const;
  // Iterations are numbered from 1.
  bool retains(std::uint64_t iteration) const;
};

// Random-walk proposal widths and acceptance bookkeeping for one block.
struct BlockAdapter {
  double log_scale = 0.0;
  std::vector<double> widths;
  std::vector<double> mean, m2;  // running moments inside the current window
  std::uint64_t window_n = 0;
  std::uint64_t window = 100;
  std::uint64_t since_reset = 0;
  std::uint64_t proposed = 0, accepted = 0;            // all iterations
  std::uint64_t proposed_after = 0, accepted_after = 0;  // after burn-in

  double rate_after_burn_in() const {
    return proposed_after ? static_cast<double>(accepted_after) / static_cast<double>(proposed_after) : 0.0;
  }
  bool operator==(const BlockAdapter&) const = default;
};

struct PsuState {
  std::int64_t id = 0;
  PsuParams params;
  std::vector<Subject> subjects;
  std::array<BlockAdapter, kNumBlocks> adapters;
  FluorosisTuner fluorosis;
  Rng rng;
  bool operator==(const PsuState&) const = default;
};

struct ChainState {
  std::uint64_t iteration = 0;
  std::vector<PsuState> psus;
  HyperState hyper;
  Rng hyper_rng;
  bool operator==(const ChainState&) const = default;
};

struct ExchangeOutcome {
  std::vector<double> theta;
  bool accepted = false;
  double log_alpha = 0.0;
};

// One noisy exchange step for a Potts block. Entries with a zero proposal
// width are held fixed; `log_prior` returning -inf rejects outright.
ExchangeOutcome exchange_update(Level level, std::span<const double> current, std::span<const double> proposal_sd,
                                std::span<const Subject> subjects, const DentitionGraph& graph,
                                const std::function<double(std::span<const double>)>& log_prior,
                                PartitionRatio& ratio, Rng& rng);

struct AcceptanceReport {
  std::array<double, kNumBlocks> block{};  // mean post-burn-in rate over PSUs, -1 for inactive blocks
  double fluorosis = -1.0;
};

class Sampler {
 public:
  // Throws ValidationError when the dataset breaks its invariants.
  Sampler(const SurveyDataset& dataset, ModelOptions options, ChainConfig config);

  const ModelContext& model() const { return model_; }
  const ChainConfig& config() const { return config_; }
  const ChainState& state() const { return state_; }
  ChainState& mutable_state() { return state_; }

  // One full iteration.
  void step();
  // Iterates up to config().n_iterations, recording retained draws.
  // Checkpoints go to `checkpoint` every config().checkpoint_every iterations.
  void run(SampleSink* sink, const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

  std::vector<SampleLabel> labels() const;
  void values(std::vector<double>& out) const;
  AcceptanceReport acceptance() const;

  void save_checkpoint(const std::filesystem::path& path) const;
  void load_checkpoint(const std::filesystem::path& path);
  std::string checkpoint_json() const;
  void restore_json(const std::string& text);

 private:
  void psu_phase(PsuState& psu, std::uint64_t it);
  void hyper_phase();
  std::unique_ptr<PartitionRatio> make_ratio() const;
  double log_prior(Block block, std::span<const double> theta) const;
  void update_potts_block(PsuState& psu, Block block, PartitionRatio& ratio, std::uint64_t it);
  void update_regression_block(PsuState& psu, Block block, std::uint64_t it);
  void update_phi2(PsuState& psu);
  void adapt(BlockAdapter& a, Block block, std::span<const double> theta, bool accepted, std::uint64_t it) const;

  ModelContext model_;
  ChainConfig config_;
  ChainState state_;
  std::uint64_t data_hash_ = 0;
};

PosteriorSamples run_chain(const SurveyDataset& dataset, const ModelOptions& options, const ChainConfig& config);

}  // namespace dentmrf
