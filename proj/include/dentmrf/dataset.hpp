#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dentmrf/dentition.hpp"
#include "dentmrf/design_matrix.hpp"
#include "dentmrf/potts.hpp"

namespace dentmrf {

struct ToothRecord {
  std::optional<int> status;     // 1 present, 2 absent (disease), 3 absent (other)
  std::optional<int> sealant;    // 0/1, present teeth only
  std::optional<int> fluorosis;  // 0..4, present teeth only
  bool operator==(const ToothRecord&) const = default;
};

struct Person {
  std::int64_t person_id = 0;
  double weight = 1.0;
  int gender = 0;  // 0 male, 1 female
  int race = 3;    // 1 non-Hispanic white, 2 non-Hispanic black, 3 other
  std::optional<int> poverty;
  int r1 = 1;  // poverty reported
  int r2 = 1;  // dental exam taken
  std::vector<ToothRecord> teeth;             // per dentition tooth slot
  std::vector<std::optional<int>> surfaces;   // per dentition surface slot
  bool operator==(const Person&) const = default;
};

struct Psu {
  std::int64_t id = 0;
  std::vector<Person> people;
  bool operator==(const Psu&) const = default;
};

struct SurveyDataset {
  std::vector<int> teeth;  // dentition tooth ids, ascending
  std::vector<Psu> psus;

  DentitionGraph graph() const { return DentitionGraph::subgraph(teeth); }
  std::size_t num_people() const;
  bool operator==(const SurveyDataset&) const = default;
};

// Person with all dental fields null, sized for `graph`.
Person make_person(const DentitionGraph& graph);

RawCovariates raw_covariates(const Person& person, const DentitionGraph& graph);
// Observed tooth and surface codes; only meaningful when r2 = 1.
MouthState observed_mouth(const Person& person, const DentitionGraph& graph);
// Writes a mouth state into the person's dental fields (status and surfaces).
void set_mouth(Person& person, const MouthState& state);

struct ValidationIssue {
  std::string record;  // "psu=<id> person=<id>"
  std::string message;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& message);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Every invariant violation, in record order.
std::vector<ValidationIssue> validate(const SurveyDataset& dataset);

// A dataset is a directory holding individuals.csv, teeth.csv and
// surfaces.csv. Null fields are empty.
SurveyDataset load_dataset(const std::filesystem::path& dir);
// Parses without running validate().
SurveyDataset parse_dataset(const std::filesystem::path& dir);
void save_dataset(const SurveyDataset& dataset, const std::filesystem::path& dir);

// FNV-1a over every observed field; used to check that fitting never
// touches observed data.
std::uint64_t observed_hash(const SurveyDataset& dataset);

// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace dentmrf
