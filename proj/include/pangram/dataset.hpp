#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pangram {

enum class Cohort { HomeRecorded, ClinicalSetup, PDCareFacility };
enum class Label { PD, Control };
enum class Sex { Male, Female, Nonbinary, Unknown };
enum class Ethnicity { White, Black, AmericanIndian, Asian, Other, Unknown };

// Manifest cell spellings: home/clinic/care, pd/control, male/female/...
std::string_view to_string(Cohort c);
std::string_view to_string(Label l);
std::string_view to_string(Sex s);
std::string_view to_string(Ethnicity e);
Cohort parse_cohort(std::string_view s);
Label parse_label(std::string_view s);
Sex parse_sex(std::string_view s);
Ethnicity parse_ethnicity(std::string_view s);

struct SampleRecord {
  std::string sample_id;
  std::string participant_id;
  std::chrono::year_month_day recording_date{};
  Cohort cohort = Cohort::HomeRecorded;
  Label label = Label::Control;
  std::optional<double> age;
  std::optional<Sex> sex;
  std::optional<Ethnicity> ethnicity;
  std::optional<double> disease_duration;  // PD only
  std::string audio_path;

  bool is_pd() const { return label == Label::PD; }
};

std::string format_date(std::chrono::year_month_day d);
std::chrono::year_month_day parse_date(std::string_view s);

inline constexpr std::string_view kManifestHeader =
    "sample_id,participant_id,recording_date,cohort,label,age,sex,ethnicity,disease_duration,audio_path";

// Throws DataError naming the 1-based data row on malformed input or
// duplicate sample ids.
std::vector<SampleRecord> parse_manifest(std::istream& in);
std::vector<SampleRecord> load_manifest(const std::filesystem::path& path);
std::string manifest_to_csv(const std::vector<SampleRecord>& records);
void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records);

// Keep the first record for each (participant, recording date).
std::vector<SampleRecord> deduplicate(const std::vector<SampleRecord>& records);

enum class FeatureSet { acoustic, w2v2, wavlm, imagebind };
std::string_view to_string(FeatureSet s);
std::optional<FeatureSet> parse_feature_set(std::string_view s);
// Expected embedding width for each named set. Acoustic vectors carry 38
// named columns.
size_t canonical_dim(FeatureSet s);

// Feature rows aligned to sample ids; values is (samples x dim).
struct FeatureMatrix {
  std::string set_name;
  std::vector<std::string> column_names;
  std::vector<std::string> sample_ids;
  Eigen::MatrixXd values;

  size_t dim() const { return column_names.size(); }
  size_t rows() const { return sample_ids.size(); }
  // Row index for a sample id, or nullopt.
  std::optional<size_t> find(const std::string& sample_id) const;
  // New matrix holding the given samples in the given order. Throws
  // DataError if any id is missing.
  FeatureMatrix select(const std::vector<std::string>& ids) const;
  // Every row length equals dim and all values are finite.
  void validate() const;
};

FeatureMatrix parse_feature_csv(std::istream& in, std::string set_name);
FeatureMatrix read_feature_csv(const std::filesystem::path& path, std::string set_name);
std::string feature_csv(const FeatureMatrix& m);
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m);

// Participant-level partition.
struct Split {
  std::set<std::string> train;
  std::set<std::string> validation;
  std::set<std::string> test;
  uint64_t seed = 0;

  bool operator==(const Split&) const = default;
};

struct SplitRatios {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
};

// Participant label is PD if any of their samples is PD.
std::vector<std::pair<std::string, bool>> participant_labels(const std::vector<SampleRecord>& records);

// Stratified participant split. Validation and test receive floor(N * ratio)
// participants, train takes the rest; within each split the PD/control
// counts are the proportional targets rounded by largest remainder.
Split split_participants(const std::vector<SampleRecord>& records, SplitRatios ratios, uint64_t seed);

// k stratified participant folds; fold i is the test set of Split i and the
// remaining participants are its training set. Validation sets are empty.
std::vector<Split> kfold_participants(const std::vector<SampleRecord>& records, int k, uint64_t seed);

// Records whose participant belongs to the given set, in input order.
std::vector<SampleRecord> records_in(const std::vector<SampleRecord>& records,
                                     const std::set<std::string>& participants);

std::string split_to_json(const Split& s);
Split split_from_json(std::string_view json);

}  // namespace pangram
