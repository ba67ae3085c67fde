#pragma once

// Published subgroup results rebuilt as counts, shared by the unit tests and
// the acceptance binary.

#include <array>
#include <string>
#include <vector>

#include "pangram/dataset.hpp"
#include "pangram/error_analysis.hpp"
#include "pangram/random.hpp"
#include "pangram/stats.hpp"

namespace fixture {

struct SubgroupRow {
  const char* name;
  pangram::stats::Table2x2 table;  // rows: groups, columns: correct / wrong
  double published_p;
  bool published_significant;
};

// Correct counts are round(n * accuracy) from the published group sizes.
inline const std::array<SubgroupRow, 6>& subgroup_rows() {
  static const std::array<SubgroupRow, 6> rows = {{
      {"sex: male vs female", {97, 18, 106, 16}, 0.5847, false},
      {"ethnicity: white vs non-white", {151, 32, 18, 0}, 0.0834, false},
      {"age: <50 vs >=50", {19, 0, 171, 28}, 0.1423, false},
      {"home vs clinic", {121, 12, 52, 20}, 0.0010, true},
      {"home vs care", {121, 12, 30, 2}, 0.9211, false},
      {"clinic vs care", {52, 20, 30, 2}, 0.0176, false},
  }};
  return rows;
}

// 237 test samples whose per-attribute correctness reproduces every row
// above. Attributes are assigned independently inside the correct and the
// wrong group, so the margins of each comparison are exact.
struct SubgroupCohort {
  std::vector<pangram::SampleRecord> records;
  std::vector<bool> correct;
};

inline SubgroupCohort subgroup_cohort() {
  using namespace pangram;
  SubgroupCohort out;
  struct Counts {
    size_t male, female;
    size_t white, nonwhite, eth_missing;
    size_t young, old, age_missing;
    size_t home, clinic, care;
  };
  const Counts right{97, 106, 151, 18, 34, 19, 171, 13, 121, 52, 30};
  const Counts wrong{18, 16, 32, 0, 2, 0, 28, 6, 12, 20, 2};
  size_t id = 0;
  for (const auto& [c, ok] : {std::pair{right, true}, std::pair{wrong, false}}) {
    const size_t n = c.male + c.female;
    for (size_t i = 0; i < n; ++i) {
      SampleRecord r;
      r.sample_id = "s" + std::to_string(id);
      r.participant_id = "p" + std::to_string(id);
      ++id;
      r.recording_date = std::chrono::year{2021} / 1 / 1;
      r.label = i % 2 ? Label::PD : Label::Control;
      r.sex = i < c.male ? Sex::Male : Sex::Female;
      if (i < c.white) r.ethnicity = Ethnicity::White;
      else if (i < c.white + c.nonwhite) r.ethnicity = Ethnicity::Asian;
      if (i < c.young) r.age = 40.0;
      else if (i < c.young + c.old) r.age = 65.0;
      r.cohort = i < c.home ? Cohort::HomeRecorded : i < c.home + c.clinic ? Cohort::ClinicalSetup : Cohort::PDCareFacility;
      out.records.push_back(r);
      out.correct.push_back(ok);
    }
  }
  return out;
}

// Integer ages 40..95 with random demographics. Samples above 68.5 are
// wrong with probability high_rate, the rest with probability low_rate.
inline std::vector<pangram::ErrorSample> planted_age_errors(uint64_t seed, size_t n = 600, double low_rate = 0.0,
                                                            double high_rate = 1.0) {
  using namespace pangram;
  Rng rng(seed);
  std::vector<ErrorSample> out;
  for (size_t i = 0; i < n; ++i) {
    ErrorSample s;
    s.age = static_cast<double>(rng.integer(40, 95));
    s.sex = rng.index(2) ? Sex::Male : Sex::Female;
    s.ethnicity = static_cast<Ethnicity>(rng.index(6));
    s.cohort = static_cast<Cohort>(rng.index(3));
    s.label = static_cast<int>(rng.index(2));
    s.error = rng.uniform() < (*s.age > 68.5 ? high_rate : low_rate);
    out.push_back(s);
  }
  return out;
}

}  // namespace fixture
