#include "dentmrf/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dentmrf/dataset.hpp"

namespace dentmrf {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string header_line(const std::vector<SampleLabel>& labels) {
  std::string h = "iteration";
  for (const auto& l : labels) h += "," + l.key();
  return h;
}

void write_row(std::ostream& out, std::uint64_t iteration, std::span<const double> values) {
  out << iteration;
  for (double v : values) out << ',' << format_double(v);
  out << '\n';
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string SampleLabel::key() const {
  std::string k = family + "@" + level;
  if (psu) k += ":" + std::to_string(*psu);
  return k;
}

SampleLabel SampleLabel::parse(const std::string& key) {
  const auto at = key.find('@');
  if (at == std::string::npos || at == 0) throw std::invalid_argument("malformed sample label '" + key + "'");
  SampleLabel l;
  l.family = key.substr(0, at);
  const auto rest = key.substr(at + 1);
  const auto colon = rest.find(':');
  l.level = rest.substr(0, colon);
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      l.psu = std::stoll(rest.substr(colon + 1), &used);
      if (used != rest.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed PSU id in sample label '" + key + "'");
    }
  }
  if (l.level != "psu" && l.level != "pooled" && l.level != "variance") {
    throw std::invalid_argument("unknown level in sample label '" + key + "'");
  }
  return l;
}

PosteriorSamples::PosteriorSamples(std::vector<SampleLabel> labels) : labels_(std::move(labels)) {
  columns_.resize(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i].key(), i).second) {
      throw std::invalid_argument("duplicate sample label " + labels_[i].key());
    }
  }
}

void PosteriorSamples::append(std::uint64_t iteration, std::span<const double> values) {
  if (values.size() != labels_.size()) throw std::invalid_argument("sample row has wrong length");
  iterations_.push_back(iteration);
  for (std::size_t i = 0; i < values.size(); ++i) columns_[i].push_back(values[i]);
}

std::optional<std::size_t> PosteriorSamples::find(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> PosteriorSamples::series(const std::string& key) const {
  auto i = find(key);
  if (!i) throw std::out_of_range("no samples for " + key);
  return columns_[*i];
}

void PosteriorSamples::write_csv(std::ostream& out) const {
  out << header_line(labels_) << '\n';
  std::vector<double> row(labels_.size());
  for (std::size_t d = 0; d < iterations_.size(); ++d) {
    for (std::size_t i = 0; i < labels_.size(); ++i) row[i] = columns_[i][d];
    write_row(out, iterations_[d], row);
  }
}

void PosteriorSamples::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out);
}

PosteriorSamples PosteriorSamples::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("samples file is empty");
  const auto head = split(line, ',');
  if (head.empty() || head[0] != "iteration") throw std::runtime_error("samples file lacks an iteration column");
  std::vector<SampleLabel> labels;
  for (std::size_t i = 1; i < head.size(); ++i) labels.push_back(SampleLabel::parse(head[i]));
  PosteriorSamples s(std::move(labels));
  std::vector<double> row(s.num_params());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line, ',');
    if (f.size() != head.size()) {
      throw std::runtime_error("samples line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                               " fields, expected " + std::to_string(head.size()));
    }
    try {
      const auto it = std::stoull(f[0]);
      for (std::size_t i = 1; i < f.size(); ++i) row[i - 1] = std::stod(f[i]);
      s.append(it, row);
    } catch (const std::logic_error&) {
      throw std::runtime_error("samples line " + std::to_string(lineno) + " has a malformed number");
    }
  }
  return s;
}

PosteriorSamples PosteriorSamples::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_csv(in);
}

void MemorySink::begin(const std::vector<SampleLabel>& labels) {
  if (started_) {
    if (labels != samples_.labels()) throw std::logic_error("sample labels changed between runs");
    return;
  }
  samples_ = PosteriorSamples(labels);
  started_ = true;
}

void MemorySink::record(std::uint64_t iteration, std::span<const double> values) { samples_.append(iteration, values); }

CsvSink::CsvSink(std::filesystem::path path, std::optional<std::uint64_t> keep_through)
    : path_(std::move(path)), keep_through_(keep_through) {}

void CsvSink::begin(const std::vector<SampleLabel>& labels) {
  if (out_.is_open()) return;
  const auto header = header_line(labels);
  if (keep_through_ && std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::string line;
    std::vector<std::string> kept;
    if (!std::getline(in, line) || line != header) {
      throw std::runtime_error(path_.string() + " does not match the sampled parameters; cannot resume");
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (std::stoull(line.substr(0, comma)) <= *keep_through_) kept.push_back(line);
    }
    in.close();
    out_.open(path_, std::ios::binary | std::ios::trunc);
    out_ << header << '\n';
    for (const auto& k : kept) out_ << k << '\n';
  } else {
    out_.open(path_, std::ios::binary | std::ios::trunc);
    out_ << header << '\n';
  }
  if (!out_) throw std::runtime_error("cannot write " + path_.string());
}

void CsvSink::record(std::uint64_t iteration, std::span<const double> values) { write_row(out_, iteration, values); }

void CsvSink::finish() { out_.flush(); }

HpdInterval hpd_interval(std::span<const double> draws, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) throw std::invalid_argument("HPD mass must lie in (0, 1)");
  if (draws.size() < 20) throw std::invalid_argument("HPD needs at least 20 draws");
  std::vector<double> s(draws.begin(), draws.end());
  std::sort(s.begin(), s.end());
  const auto n = s.size();
  const auto k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  const double tol = 1e-12 * (s.back() - s.front());
  double best = s[k - 1] - s[0];
  for (std::size_t i = 1; i + k <= n; ++i) best = std::min(best, s[i + k - 1] - s[i]);
  for (std::size_t i = 0; i + k <= n; ++i) {
    if (s[i + k - 1] - s[i] <= best + tol) return {s[i], s[i + k - 1]};
  }
  return {s[0], s[k - 1]};
}

double effective_sample_size(std::span<const double> draws) {
  const auto n = draws.size();
  if (n < 2) return static_cast<double>(n);
  const double m = mean_of(draws);
  std::vector<double> c(draws.size());
  for (std::size_t i = 0; i < n; ++i) c[i] = draws[i] - m;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return static_cast<double>(n);
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    double pair = (autocov(lag) + autocov(lag + 1)) / g0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    tau += 2.0 * pair;
  }
  return static_cast<double>(n) / tau;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS distance needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

std::vector<SummaryRow> summarize(const PosteriorSamples& samples, double mass) {
  if (samples.num_draws() == 0) throw std::invalid_argument("no retained draws to summarize");
  std::vector<SummaryRow> rows;
  for (std::size_t i = 0; i < samples.num_params(); ++i) {
    const auto s = samples.series(i);
    SummaryRow r;
    r.label = samples.labels()[i];
    r.mean = mean_of(s);
    if (s.size() >= 20) {
      r.hpd = hpd_interval(s, mass);
    } else {
      const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
      r.hpd = {*lo, *hi};
    }
    r.ess = effective_sample_size(s);
    rows.push_back(r);
  }
  return rows;
}

void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "family,level,psu_id,mean,hpd_lo,hpd_hi,ess\n";
  for (const auto& r : rows) {
    out << r.label.family << ',' << r.label.level << ',' << (r.label.psu ? std::to_string(*r.label.psu) : "")
        << ',' << format_double(r.mean) << ',' << format_double(r.hpd.lo) << ',' << format_double(r.hpd.hi) << ','
        << format_double(r.ess) << '\n';
  }
}

PsuSummary psu_summary(const PosteriorSamples& samples, const std::string& family) {
  PsuSummary out;
  out.family = family;
  for (std::size_t i = 0; i < samples.num_params(); ++i) {
    const auto& l = samples.labels()[i];
    if (l.family != family || l.level != "psu" || !l.psu) continue;
    out.psu_ids.push_back(*l.psu);
    out.means.push_back(mean_of(samples.series(i)));
  }
  if (out.psu_ids.empty()) throw std::invalid_argument("no PSU-level samples for family '" + family + "'");
  if (auto p = samples.find(family + "@pooled")) out.pooled_mean = mean_of(samples.series(*p));
  return out;
}

std::vector<std::string> psu_families(const PosteriorSamples& samples) {
  std::vector<std::string> out;
  for (const auto& l : samples.labels()) {
    if (l.level == "psu" && std::find(out.begin(), out.end(), l.family) == out.end()) out.push_back(l.family);
  }
  return out;
}

void write_plot_data(const PosteriorSamples& samples, std::ostream& out) {
  out << "family,psu_id,posterior_mean\n";
  for (const auto& family : psu_families(samples)) {
    const auto s = psu_summary(samples, family);
    for (std::size_t i = 0; i < s.psu_ids.size(); ++i) {
      out << family << ',' << s.psu_ids[i] << ',' << format_double(s.means[i]) << '\n';
    }
    if (s.pooled_mean) out << family << ",pooled," << format_double(*s.pooled_mean) << '\n';
  }
}

}  // namespace dentmrf
