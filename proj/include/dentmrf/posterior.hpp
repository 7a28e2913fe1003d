#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dentmrf {

// A retained quantity: a PSU-level parameter ("psu"), a group mean
// ("pooled") or a group variance ("variance").
struct SampleLabel {
  std::string family;
  std::string level = "psu";
  std::optional<std::int64_t> psu;

  // family@level or family@level:psu
  std::string key() const;
  static SampleLabel parse(const std::string& key);
  bool operator==(const SampleLabel&) const = default;
};

class PosteriorSamples {
 public:
  PosteriorSamples() = default;
  explicit PosteriorSamples(std::vector<SampleLabel> labels);

  void append(std::uint64_t iteration, std::span<const double> values);

  const std::vector<SampleLabel>& labels() const { return labels_; }
  const std::vector<std::uint64_t>& iterations() const { return iterations_; }
  std::size_t num_params() const { return labels_.size(); }
  std::size_t num_draws() const { return iterations_.size(); }
  std::span<const double> series(std::size_t index) const { return columns_.at(index); }
  // Throws std::out_of_range for an unknown key.
  std::span<const double> series(const std::string& key) const;
  std::optional<std::size_t> find(const std::string& key) const;

  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
  static PosteriorSamples read_csv(std::istream& in);
  static PosteriorSamples read_csv(const std::filesystem::path& path);

  bool operator==(const PosteriorSamples& o) const {
    return labels_ == o.labels_ && iterations_ == o.iterations_ && columns_ == o.columns_;
  }

 private:
  std::vector<SampleLabel> labels_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::uint64_t> iterations_;
  std::vector<std::vector<double>> columns_;
};

class SampleSink {
 public:
  virtual ~SampleSink() = default;
  virtual void begin(const std::vector<SampleLabel>& labels) = 0;
  virtual void record(std::uint64_t iteration, std::span<const double> values) = 0;
  virtual void finish() {}
};

class MemorySink final : public SampleSink {
 public:
  void begin(const std::vector<SampleLabel>& labels) override;
  void record(std::uint64_t iteration, std::span<const double> values) override;
  PosteriorSamples& samples() { return samples_; }

 private:
  PosteriorSamples samples_;
  bool started_ = false;
};

// Streams retained draws to CSV. With `keep_through`, an existing file is
// cut back to rows at or before that iteration and appended to (resume).
class CsvSink final : public SampleSink {
 public:
  explicit CsvSink(std::filesystem::path path, std::optional<std::uint64_t> keep_through = std::nullopt);
  void begin(const std::vector<SampleLabel>& labels) override;
  void record(std::uint64_t iteration, std::span<const double> values) override;
  void finish() override;

 private:
  std::filesystem::path path_;
  std::optional<std::uint64_t> keep_through_;
  std::ofstream out_;
};

struct HpdInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Shortest window of ceil(mass * n) sorted draws; the lowest start wins ties.
HpdInterval hpd_interval(std::span<const double> draws, double mass = 0.95);

// Initial monotone sequence estimator.
double effective_sample_size(std::span<const double> draws);

// Two-sample Kolmogorov-Smirnov distance.
double ks_statistic(std::span<const double> a, std::span<const double> b);

struct SummaryRow {
  SampleLabel label;
  double mean = 0.0;
  HpdInterval hpd;
  double ess = 0.0;
};

std::vector<SummaryRow> summarize(const PosteriorSamples& samples, double mass = 0.95);
// Header: family,level,psu_id,mean,hpd_lo,hpd_hi,ess
void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out);

struct PsuSummary {
  std::string family;
  std::vector<std::int64_t> psu_ids;
  std::vector<double> means;
  std::optional<double> pooled_mean;
};

// Throws std::invalid_argument if `family` has no PSU-level series.
PsuSummary psu_summary(const PosteriorSamples& samples, const std::string& family);
std::vector<std::string> psu_families(const PosteriorSamples& samples);
// Header: family,psu_id,posterior_mean; pooled means use psu_id "pooled".
void write_plot_data(const PosteriorSamples& samples, std::ostream& out);

}  // namespace dentmrf
