#include "pangram/dataset.hpp"

#include "pangram/errors.hpp"
#include "pangram/io.hpp"
#include "pangram/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace pangram {

std::string_view to_string(Cohort c) {
  switch (c) {
    case Cohort::HomeRecorded: return "home";
    case Cohort::ClinicalSetup: return "clinic";
    case Cohort::PDCareFacility: return "care";
  }
  return "?";
}

std::string_view to_string(Label l) { return l == Label::PD ? "pd" : "control"; }

std::string_view to_string(Sex s) {
  switch (s) {
    case Sex::Male: return "male";
    case Sex::Female: return "female";
    case Sex::Nonbinary: return "nonbinary";
    case Sex::Unknown: return "unknown";
  }
  return "?";
}

std::string_view to_string(Ethnicity e) {
  switch (e) {
    case Ethnicity::White: return "white";
    case Ethnicity::Black: return "black";
    case Ethnicity::AmericanIndian: return "american_indian";
    case Ethnicity::Asian: return "asian";
    case Ethnicity::Other: return "other";
    case Ethnicity::Unknown: return "unknown";
  }
  return "?";
}

Cohort parse_cohort(std::string_view s) {
  const std::string v = io::to_lower(io::trim(s));
  if (v == "home") return Cohort::HomeRecorded;
  if (v == "clinic") return Cohort::ClinicalSetup;
  if (v == "care") return Cohort::PDCareFacility;
  throw DataError("unknown cohort '" + v + "'");
}

Label parse_label(std::string_view s) {
  const std::string v = io::to_lower(io::trim(s));
  if (v == "pd") return Label::PD;
  if (v == "control") return Label::Control;
  throw DataError("unknown label '" + v + "'");
}

Sex parse_sex(std::string_view s) {
  const std::string v = io::to_lower(io::trim(s));
  if (v == "male") return Sex::Male;
  if (v == "female") return Sex::Female;
  if (v == "nonbinary") return Sex::Nonbinary;
  if (v == "unknown") return Sex::Unknown;
  throw DataError("unknown sex '" + v + "'");
}

Ethnicity parse_ethnicity(std::string_view s) {
  const std::string v = io::to_lower(io::trim(s));
  if (v == "white") return Ethnicity::White;
  if (v == "black") return Ethnicity::Black;
  if (v == "american_indian") return Ethnicity::AmericanIndian;
  if (v == "asian") return Ethnicity::Asian;
  if (v == "other") return Ethnicity::Other;
  if (v == "unknown") return Ethnicity::Unknown;
  throw DataError("unknown ethnicity '" + v + "'");
}

std::string format_date(std::chrono::year_month_day d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::chrono::year_month_day parse_date(std::string_view s) {
  const std::string t = io::trim(s);
  if (t.size() != 10 || t[4] != '-' || t[7] != '-') throw DataError("bad date '" + t + "'");
  const auto y = static_cast<int>(io::parse_int(t.substr(0, 4)));
  const auto m = static_cast<unsigned>(io::parse_int(t.substr(5, 2)));
  const auto d = static_cast<unsigned>(io::parse_int(t.substr(8, 2)));
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw DataError("bad date '" + t + "'");
  return ymd;
}

namespace {

constexpr size_t kManifestColumns = 10;

template <class T, class F>
std::optional<T> optional_cell(const std::string& cell, F parse) {
  if (io::trim(cell).empty()) return std::nullopt;
  return parse(cell);
}

}  // namespace

std::vector<SampleRecord> parse_manifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("manifest is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != kManifestHeader) throw DataError("manifest header mismatch: '" + line + "'");

  std::vector<SampleRecord> out;
  std::unordered_set<std::string> seen;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    ++row;
    try {
      const auto cells = io::split_csv_line(line);
      if (cells.size() != kManifestColumns) {
        throw DataError("expected " + std::to_string(kManifestColumns) + " columns, got " +
                        std::to_string(cells.size()));
      }
      SampleRecord r;
      r.sample_id = io::trim(cells[0]);
      r.participant_id = io::trim(cells[1]);
      if (r.sample_id.empty() || r.participant_id.empty()) throw DataError("empty id");
      r.recording_date = parse_date(cells[2]);
      r.cohort = parse_cohort(cells[3]);
      r.label = parse_label(cells[4]);
      r.age = optional_cell<double>(cells[5], io::parse_double);
      r.sex = optional_cell<Sex>(cells[6], parse_sex);
      r.ethnicity = optional_cell<Ethnicity>(cells[7], parse_ethnicity);
      r.disease_duration = optional_cell<double>(cells[8], io::parse_double);
      r.audio_path = cells[9];
      if (r.age && !(*r.age >= 0.0 && *r.age <= 130.0)) throw DataError("age out of [0, 130]");
      if (r.disease_duration && r.label != Label::PD) {
        throw DataError("disease_duration given for a control sample");
      }
      if (!seen.insert(r.sample_id).second) throw DataError("duplicate sample_id '" + r.sample_id + "'");
      out.push_back(std::move(r));
    } catch (const DataError& e) {
      throw DataError("manifest row " + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SampleRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  return parse_manifest(in);
}

std::string manifest_to_csv(const std::vector<SampleRecord>& records) {
  std::string out(kManifestHeader);
  out.push_back('\n');
  for (const auto& r : records) {
    out += io::csv_field(r.sample_id) + ',' + io::csv_field(r.participant_id) + ',' +
           format_date(r.recording_date) + ',' + std::string(to_string(r.cohort)) + ',' +
           std::string(to_string(r.label)) + ',';
    if (r.age) out += io::format_double(*r.age);
    out += ',';
    if (r.sex) out += to_string(*r.sex);
    out += ',';
    if (r.ethnicity) out += to_string(*r.ethnicity);
    out += ',';
    if (r.disease_duration) out += io::format_double(*r.disease_duration);
    out += ',' + io::csv_field(r.audio_path) + '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  io::write_file_atomic(path, manifest_to_csv(records));
}

std::vector<SampleRecord> deduplicate(const std::vector<SampleRecord>& records) {
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<SampleRecord> out;
  for (const auto& r : records) {
    if (seen.emplace(r.participant_id, format_date(r.recording_date)).second) out.push_back(r);
  }
  return out;
}

std::string_view to_string(FeatureSet s) {
  switch (s) {
    case FeatureSet::acoustic: return "acoustic";
    case FeatureSet::w2v2: return "w2v2";
    case FeatureSet::wavlm: return "wavlm";
    case FeatureSet::imagebind: return "imagebind";
  }
  return "?";
}

std::optional<FeatureSet> parse_feature_set(std::string_view s) {
  for (auto fs : {FeatureSet::acoustic, FeatureSet::w2v2, FeatureSet::wavlm, FeatureSet::imagebind}) {
    if (s == to_string(fs)) return fs;
  }
  return std::nullopt;
}

size_t canonical_dim(FeatureSet s) {
  switch (s) {
    case FeatureSet::acoustic: return 38;
    case FeatureSet::w2v2: return 768;
    case FeatureSet::wavlm: return 1024;
    case FeatureSet::imagebind: return 1024;
  }
  return 0;
}

std::optional<size_t> FeatureMatrix::find(const std::string& sample_id) const {
  const auto it = std::find(sample_ids.begin(), sample_ids.end(), sample_id);
  if (it == sample_ids.end()) return std::nullopt;
  return static_cast<size_t>(it - sample_ids.begin());
}

FeatureMatrix FeatureMatrix::select(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, size_t> index;
  index.reserve(sample_ids.size());
  for (size_t i = 0; i < sample_ids.size(); ++i) index.emplace(sample_ids[i], i);

  FeatureMatrix out;
  out.set_name = set_name;
  out.column_names = column_names;
  out.sample_ids = ids;
  out.values.resize(static_cast<Eigen::Index>(ids.size()), values.cols());
  for (size_t r = 0; r < ids.size(); ++r) {
    const auto it = index.find(ids[r]);
    if (it == index.end()) throw DataError("feature set '" + set_name + "' has no row for sample '" + ids[r] + "'");
    out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(it->second));
  }
  return out;
}

void FeatureMatrix::validate() const {
  if (column_names.empty()) throw DataError("feature set '" + set_name + "' has no columns");
  if (static_cast<size_t>(values.cols()) != dim() || static_cast<size_t>(values.rows()) != rows()) {
    throw DataError("feature set '" + set_name + "' shape mismatch");
  }
  if (!values.allFinite()) throw DataError("feature set '" + set_name + "' contains non-finite values");
}

FeatureMatrix parse_feature_csv(std::istream& in, std::string set_name) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature file for '" + set_name + "' is empty");
  auto header = io::split_csv_line(line);
  if (header.size() < 2 || io::trim(header[0]) != "sample_id") {
    throw DataError("feature header must start with sample_id");
  }
  FeatureMatrix m;
  m.set_name = std::move(set_name);
  m.column_names.assign(header.begin() + 1, header.end());
  const size_t dim = m.column_names.size();

  std::vector<double> flat;
  std::unordered_set<std::string> seen;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    ++row;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != dim + 1) {
      throw DataError("feature row " + std::to_string(row) + ": expected " + std::to_string(dim + 1) +
                      " columns, got " + std::to_string(cells.size()));
    }
    std::string id = io::trim(cells[0]);
    if (!seen.insert(id).second) throw DataError("feature row " + std::to_string(row) + ": duplicate sample_id");
    m.sample_ids.push_back(std::move(id));
    for (size_t j = 1; j <= dim; ++j) {
      try {
        flat.push_back(io::parse_double(cells[j]));
      } catch (const DataError& e) {
        throw DataError("feature row " + std::to_string(row) + ": " + e.what());
      }
    }
  }
  m.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), static_cast<Eigen::Index>(m.sample_ids.size()), static_cast<Eigen::Index>(dim));
  m.validate();
  return m;
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path, std::string set_name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file " + path.string());
  return parse_feature_csv(in, std::move(set_name));
}

std::string feature_csv(const FeatureMatrix& m) {
  std::string out = "sample_id";
  for (const auto& c : m.column_names) out += ',' + io::csv_field(c);
  out.push_back('\n');
  for (size_t r = 0; r < m.rows(); ++r) {
    out += io::csv_field(m.sample_ids[r]);
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      out.push_back(',');
      out += io::format_double(m.values(static_cast<Eigen::Index>(r), j));
    }
    out.push_back('\n');
  }
  return out;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
  io::write_file_atomic(path, feature_csv(m));
}

std::vector<std::pair<std::string, bool>> participant_labels(const std::vector<SampleRecord>& records) {
  std::map<std::string, bool> pd;
  for (const auto& r : records) pd[r.participant_id] = pd[r.participant_id] || r.is_pd();
  return {pd.begin(), pd.end()};
}

namespace {

// Largest-remainder apportionment of `total` items over `weights`
// (integers), ties toward the lower index.
std::vector<size_t> apportion(size_t total, const std::vector<size_t>& weights) {
  size_t weight_sum = 0;
  for (size_t w : weights) weight_sum += w;
  std::vector<size_t> out(weights.size(), 0);
  if (weight_sum == 0) return out;
  std::vector<std::pair<size_t, size_t>> remainders;  // (remainder numerator, index)
  size_t assigned = 0;
  for (size_t j = 0; j < weights.size(); ++j) {
    const size_t num = total * weights[j];
    out[j] = num / weight_sum;
    assigned += out[j];
    remainders.emplace_back(num % weight_sum, j);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t i = 0; assigned < total; ++i, ++assigned) ++out[remainders[i].second];
  return out;
}

struct Strata {
  std::vector<std::string> pd;
  std::vector<std::string> control;
};

Strata shuffled_strata(const std::vector<SampleRecord>& records, uint64_t seed) {
  Strata s;
  for (const auto& [id, is_pd] : participant_labels(records)) (is_pd ? s.pd : s.control).push_back(id);
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(s.pd));
  rng.shuffle(std::span<std::string>(s.control));
  return s;
}

}  // namespace

Split split_participants(const std::vector<SampleRecord>& records, SplitRatios ratios, uint64_t seed) {
  if (!(ratios.train > 0 && ratios.validation > 0 && ratios.test > 0)) {
    throw std::invalid_argument("split ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  const Strata strata = shuffled_strata(records, seed);
  const size_t n = strata.pd.size() + strata.control.size();
  if (n < 3) throw DataError("need at least 3 participants to split, got " + std::to_string(n));

  const auto n_val = static_cast<size_t>(std::floor(static_cast<double>(n) * ratios.validation + 1e-9));
  const auto n_test = static_cast<size_t>(std::floor(static_cast<double>(n) * ratios.test + 1e-9));
  const std::vector<size_t> sizes{n - n_val - n_test, n_val, n_test};

  // PD counts per split are the proportional targets |split| * n_pd / n
  // rounded by largest remainder; control fills the rest of each split.
  const std::vector<size_t> pd_counts = apportion(strata.pd.size(), sizes);

  Split out;
  out.seed = seed;
  std::set<std::string>* targets[3] = {&out.train, &out.validation, &out.test};
  size_t pd_pos = 0, ctl_pos = 0;
  for (size_t j = 0; j < 3; ++j) {
    for (size_t i = 0; i < pd_counts[j]; ++i) targets[j]->insert(strata.pd[pd_pos++]);
    for (size_t i = 0; i < sizes[j] - pd_counts[j]; ++i) targets[j]->insert(strata.control[ctl_pos++]);
  }
  return out;
}

std::vector<Split> kfold_participants(const std::vector<SampleRecord>& records, int k, uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be at least 2");
  const Strata strata = shuffled_strata(records, seed);
  const size_t n = strata.pd.size() + strata.control.size();
  if (static_cast<size_t>(k) > n) {
    throw DataError("k = " + std::to_string(k) + " exceeds participant count " + std::to_string(n));
  }
  std::vector<std::set<std::string>> folds(static_cast<size_t>(k));
  size_t pos = 0;
  for (const auto* stratum : {&strata.pd, &strata.control}) {
    for (const auto& id : *stratum) folds[pos++ % folds.size()].insert(id);
  }
  std::vector<Split> out;
  for (size_t i = 0; i < folds.size(); ++i) {
    Split s;
    s.seed = seed;
    s.test = folds[i];
    for (size_t j = 0; j < folds.size(); ++j) {
      if (j != i) s.train.insert(folds[j].begin(), folds[j].end());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SampleRecord> records_in(const std::vector<SampleRecord>& records,
                                     const std::set<std::string>& participants) {
  std::vector<SampleRecord> out;
  for (const auto& r : records) {
    if (participants.count(r.participant_id)) out.push_back(r);
  }
  return out;
}

std::string split_to_json(const Split& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["train"] = s.train;
  j["validation"] = s.validation;
  j["test"] = s.test;
  return j.dump(1) + "\n";
}

Split split_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Split s;
    s.seed = j.at("seed").get<uint64_t>();
    s.train = j.at("train").get<std::set<std::string>>();
    s.validation = j.at("validation").get<std::set<std::string>>();
    s.test = j.at("test").get<std::set<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad split JSON: ") + e.what());
  }
}

}  // namespace pangram
