#include "dentmrf/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dentmrf {

namespace {

const char* kIndividualsHeader = "psu_id,person_id,weight,gender,race,poverty,r1,r2";
const char* kTeethHeader = "psu_id,person_id,tooth,status,sealant,fluorosis";
const char* kSurfacesHeader = "psu_id,person_id,tooth,surface,status";

std::string record_id(std::int64_t psu, std::int64_t person) {
  return "psu=" + std::to_string(psu) + " person=" + std::to_string(person);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

struct CsvFile {
  std::string name;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, fields)
};

CsvFile read_csv(const std::filesystem::path& path, const std::string& header, bool required) {
  CsvFile file{path.filename().string(), {}};
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (required) throw ParseError(file.name, 0, "cannot open " + path.string());
    return file;
  }
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  const auto n_fields = split(header).size();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != header) throw ParseError(file.name, lineno, "expected header '" + header + "'");
      saw_header = true;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != n_fields) {
      throw ParseError(file.name, lineno,
                       "expected " + std::to_string(n_fields) + " fields, got " + std::to_string(fields.size()));
    }
    file.rows.emplace_back(lineno, std::move(fields));
  }
  return file;
}

template <typename T>
T parse_number(const std::string& field, const CsvFile& file, std::size_t line, const char* what) {
  T value{};
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError(file.name, line, std::string("invalid ") + what + " '" + field + "'");
  }
  return value;
}

std::optional<int> parse_nullable(const std::string& field, const CsvFile& file, std::size_t line, const char* what) {
  if (field.empty()) return std::nullopt;
  return parse_number<int>(field, file, line, what);
}

std::string opt(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

struct CsvText {
  std::string individuals, teeth, surfaces;
};

CsvText to_csv(const SurveyDataset& dataset) {
  const auto graph = dataset.graph();
  std::ostringstream ind, teeth, surf;
  ind << kIndividualsHeader << '\n';
  teeth << kTeethHeader << '\n';
  surf << kSurfacesHeader << '\n';
  for (const auto& psu : dataset.psus) {
    for (const auto& p : psu.people) {
      ind << psu.id << ',' << p.person_id << ',' << format_double(p.weight) << ',' << p.gender << ',' << p.race << ','
          << opt(p.poverty) << ',' << p.r1 << ',' << p.r2 << '\n';
      for (std::size_t t = 0; t < p.teeth.size(); ++t) {
        const auto& rec = p.teeth[t];
        if (!rec.status && !rec.sealant && !rec.fluorosis) continue;
        teeth << psu.id << ',' << p.person_id << ',' << graph.teeth()[t].value() << ',' << opt(rec.status) << ','
              << opt(rec.sealant) << ',' << opt(rec.fluorosis) << '\n';
      }
      for (std::size_t s = 0; s < p.surfaces.size(); ++s) {
        if (!p.surfaces[s]) continue;
        const auto& id = graph.surfaces()[s];
        surf << psu.id << ',' << p.person_id << ',' << id.tooth.value() << ',' << static_cast<int>(id.surface) << ','
             << *p.surfaces[s] << '\n';
      }
    }
  }
  return {ind.str(), teeth.str(), surf.str()};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : std::runtime_error([&] {
        std::string msg = std::to_string(issues.size()) + " invalid record(s)";
        for (const auto& i : issues) msg += "\n  " + i.record + ": " + i.message;
        return msg;
      }()),
      issues_(std::move(issues)) {}

ParseError::ParseError(std::string file, std::size_t line, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message), file_(std::move(file)), line_(line) {}

std::size_t SurveyDataset::num_people() const {
  std::size_t n = 0;
  for (const auto& psu : psus) n += psu.people.size();
  return n;
}

Person make_person(const DentitionGraph& graph) {
  Person p;
  p.teeth.assign(graph.num_teeth(), ToothRecord{});
  p.surfaces.assign(graph.num_surfaces(), std::nullopt);
  return p;
}

RawCovariates raw_covariates(const Person& person, const DentitionGraph& graph) {
  RawCovariates raw;
  raw.gender = person.gender;
  raw.race = person.race;
  if (person.r1 == 1) raw.poverty = person.poverty;
  if (person.r2 == 1) {
    int any_sealant = 0;
    double fluor_sum = 0.0;
    int fluor_n = 0;
    for (std::size_t t = 0; t < graph.num_teeth() && t < person.teeth.size(); ++t) {
      const auto& rec = person.teeth[t];
      if (rec.status != kToothPresent) continue;
      if (rec.sealant.value_or(0) == 1) any_sealant = 1;
      if (rec.fluorosis) {
        fluor_sum += *rec.fluorosis;
        ++fluor_n;
      }
    }
    raw.sealant = any_sealant;
    raw.fluorosis = fluor_n > 0 ? fluor_sum / fluor_n : 0.0;
  }
  return raw;
}

MouthState observed_mouth(const Person& person, const DentitionGraph& graph) {
  MouthState state{std::vector<std::uint8_t>(graph.num_teeth(), kToothPresent),
                   std::vector<std::uint8_t>(graph.num_surfaces(), kNoSurface)};
  for (std::size_t t = 0; t < graph.num_teeth(); ++t) {
    if (!person.teeth[t].status) throw std::invalid_argument("observed mouth requested for a person without exam data");
    state.x[t] = static_cast<std::uint8_t>(*person.teeth[t].status);
  }
  for (std::size_t s = 0; s < graph.num_surfaces(); ++s) {
    if (person.surfaces[s]) state.y[s] = static_cast<std::uint8_t>(*person.surfaces[s]);
  }
  return state;
}

void set_mouth(Person& person, const MouthState& state) {
  for (std::size_t t = 0; t < state.x.size(); ++t) person.teeth[t].status = state.x[t];
  for (std::size_t s = 0; s < state.y.size(); ++s) {
    person.surfaces[s] = state.y[s] == kNoSurface ? std::nullopt : std::optional<int>(state.y[s]);
  }
}

std::vector<ValidationIssue> validate(const SurveyDataset& dataset) {
  std::vector<ValidationIssue> issues;
  if (dataset.num_people() == 0) {
    issues.push_back({"dataset", "no records"});
    return issues;
  }
  const auto graph = dataset.graph();
  std::set<std::int64_t> psu_ids;
  for (const auto& psu : dataset.psus) {
    if (!psu_ids.insert(psu.id).second) issues.push_back({"psu=" + std::to_string(psu.id), "duplicate PSU id"});
    std::set<std::int64_t> person_ids;
    for (const auto& p : psu.people) {
      const auto rec = record_id(psu.id, p.person_id);
      auto add = [&](const std::string& msg) { issues.push_back({rec, msg}); };
      if (!person_ids.insert(p.person_id).second) add("duplicate person id");
      if (!(p.weight > 0.0) || !std::isfinite(p.weight)) add("weight must be positive");
      if (p.gender != 0 && p.gender != 1) add("gender must be 0 or 1");
      if (p.race < 1 || p.race > 3) add("race must be 1, 2 or 3");
      if (p.r1 != 0 && p.r1 != 1) add("r1 must be 0 or 1");
      if (p.r2 != 0 && p.r2 != 1) add("r2 must be 0 or 1");
      if (p.r1 == 0 && p.poverty) add("r1=0 but poverty is reported");
      if (p.r1 == 1 && !p.poverty) add("r1=1 but poverty is null");
      if (p.poverty && *p.poverty != 0 && *p.poverty != 1) add("poverty must be 0 or 1");
      if (p.teeth.size() != graph.num_teeth() || p.surfaces.size() != graph.num_surfaces()) {
        add("dental record size does not match the dentition");
        continue;
      }
      if (p.r2 == 0) {
        bool any = false;
        for (const auto& t : p.teeth) any = any || t.status || t.sealant || t.fluorosis;
        for (const auto& s : p.surfaces) any = any || s.has_value();
        if (any) add("r2=0 but dental fields are not null");
        continue;
      }
      for (std::size_t t = 0; t < graph.num_teeth(); ++t) {
        const auto& tr = p.teeth[t];
        const auto tooth = std::to_string(graph.teeth()[t].value());
        if (!tr.status) {
          add("r2=1 but tooth " + tooth + " status is null");
          continue;
        }
        if (*tr.status < 1 || *tr.status > 3) add("tooth " + tooth + " status must be 1, 2 or 3");
        const bool present = *tr.status == kToothPresent;
        if (!present && (tr.sealant || tr.fluorosis)) add("tooth " + tooth + " is absent but has sealant/fluorosis");
        if (tr.sealant && *tr.sealant != 0 && *tr.sealant != 1) add("tooth " + tooth + " sealant must be 0 or 1");
        if (tr.fluorosis && (*tr.fluorosis < 0 || *tr.fluorosis > 4)) add("tooth " + tooth + " fluorosis must be 0..4");
        auto [first, last] = graph.tooth_surfaces(static_cast<int>(t));
        for (int s = first; s < last; ++s) {
          const auto& sv = p.surfaces[s];
          const auto label = "tooth " + tooth + " surface " + std::to_string(static_cast<int>(graph.surfaces()[s].surface));
          if (present && !sv) add(label + " is null on a present tooth");
          if (!present && sv) add(label + " is recorded on an absent tooth");
          if (sv && (*sv < 1 || *sv > 3)) add(label + " status must be 1, 2 or 3");
        }
      }
    }
  }
  return issues;
}

SurveyDataset parse_dataset(const std::filesystem::path& dir) {
  const auto ind = read_csv(dir / "individuals.csv", kIndividualsHeader, true);
  if (ind.rows.empty()) throw ParseError(ind.name, 0, "no records");
  const auto teeth = read_csv(dir / "teeth.csv", kTeethHeader, false);
  const auto surf = read_csv(dir / "surfaces.csv", kSurfacesHeader, false);

  SurveyDataset ds;
  std::set<int> tooth_set;
  for (const auto& [line, f] : teeth.rows) {
    const int k = parse_number<int>(f[2], teeth, line, "tooth");
    if (k < 1 || k > kNumTeeth) throw ParseError(teeth.name, line, "tooth " + f[2] + " outside 1..28");
    tooth_set.insert(k);
  }
  if (tooth_set.empty()) {
    for (int k = 1; k <= kNumTeeth; ++k) tooth_set.insert(k);
  }
  ds.teeth.assign(tooth_set.begin(), tooth_set.end());
  const auto graph = ds.graph();

  std::map<std::int64_t, std::size_t> psu_index;
  std::map<std::pair<std::int64_t, std::int64_t>, std::pair<std::size_t, std::size_t>> where;
  for (const auto& [line, f] : ind.rows) {
    const auto psu_id = parse_number<std::int64_t>(f[0], ind, line, "psu_id");
    Person p = make_person(graph);
    p.person_id = parse_number<std::int64_t>(f[1], ind, line, "person_id");
    p.weight = parse_number<double>(f[2], ind, line, "weight");
    p.gender = parse_number<int>(f[3], ind, line, "gender");
    p.race = parse_number<int>(f[4], ind, line, "race");
    p.poverty = parse_nullable(f[5], ind, line, "poverty");
    p.r1 = parse_number<int>(f[6], ind, line, "r1");
    p.r2 = parse_number<int>(f[7], ind, line, "r2");
    auto [it, inserted] = psu_index.try_emplace(psu_id, ds.psus.size());
    if (inserted) ds.psus.push_back(Psu{psu_id, {}});
    auto& psu = ds.psus[it->second];
    if (!where.try_emplace({psu_id, p.person_id}, it->second, psu.people.size()).second) {
      throw ParseError(ind.name, line, "duplicate individual " + record_id(psu_id, p.person_id));
    }
    psu.people.push_back(std::move(p));
  }

  auto find_person = [&](const CsvFile& file, std::size_t line, const std::vector<std::string>& f) -> Person& {
    const auto psu_id = parse_number<std::int64_t>(f[0], file, line, "psu_id");
    const auto person_id = parse_number<std::int64_t>(f[1], file, line, "person_id");
    auto it = where.find({psu_id, person_id});
    if (it == where.end()) throw ParseError(file.name, line, "unknown individual " + record_id(psu_id, person_id));
    return ds.psus[it->second.first].people[it->second.second];
  };

  std::set<std::tuple<std::int64_t, std::int64_t, int>> seen_teeth;
  for (const auto& [line, f] : teeth.rows) {
    auto& p = find_person(teeth, line, f);
    const int k = parse_number<int>(f[2], teeth, line, "tooth");
    const int slot = graph.tooth_slot(ToothId(k));
    if (!seen_teeth.insert({std::stoll(f[0]), p.person_id, k}).second) {
      throw ParseError(teeth.name, line, "duplicate tooth row");
    }
    p.teeth[slot] = ToothRecord{parse_nullable(f[3], teeth, line, "status"), parse_nullable(f[4], teeth, line, "sealant"),
                                parse_nullable(f[5], teeth, line, "fluorosis")};
  }
  std::set<std::tuple<std::int64_t, std::int64_t, int, int>> seen_surfaces;
  for (const auto& [line, f] : surf.rows) {
    auto& p = find_person(surf, line, f);
    const int k = parse_number<int>(f[2], surf, line, "tooth");
    const int code = parse_number<int>(f[3], surf, line, "surface");
    if (k < 1 || k > kNumTeeth || code < 1 || code > kNumSurfaceCodes) {
      throw ParseError(surf.name, line, "invalid tooth/surface " + f[2] + "/" + f[3]);
    }
    const int slot = graph.surface_slot(SurfaceId{ToothId(k), static_cast<Surface>(code)});
    if (slot < 0) throw ParseError(surf.name, line, "surface " + f[3] + " does not exist on tooth " + f[2] + " in this dentition");
    if (!seen_surfaces.insert({std::stoll(f[0]), p.person_id, k, code}).second) {
      throw ParseError(surf.name, line, "duplicate surface row");
    }
    p.surfaces[slot] = parse_nullable(f[4], surf, line, "status");
  }
  return ds;
}

SurveyDataset load_dataset(const std::filesystem::path& dir) {
  auto ds = parse_dataset(dir);
  auto issues = validate(ds);
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return ds;
}

void save_dataset(const SurveyDataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto text = to_csv(dataset);
  write_file(dir / "individuals.csv", text.individuals);
  write_file(dir / "teeth.csv", text.teeth);
  write_file(dir / "surfaces.csv", text.surfaces);
}

std::uint64_t observed_hash(const SurveyDataset& dataset) {
  const auto text = to_csv(dataset);
  std::uint64_t h = 1469598103934665603ull;
  for (const auto* part : {&text.individuals, &text.teeth, &text.surfaces}) {
    for (unsigned char c : *part) {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace dentmrf
