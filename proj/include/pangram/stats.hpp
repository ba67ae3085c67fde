#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pangram {
struct SampleRecord;
}

namespace pangram::stats {

// Rows are groups, columns are (correct, incorrect).
struct Table2x2 {
  uint64_t a = 0, b = 0;
  uint64_t c = 0, d = 0;

  uint64_t total() const { return a + b + c + d; }
};

// Two-sided Fisher exact test. Sums the hypergeometric probabilities of
// every table with the observed margins whose probability does not exceed
// the observed one (relative slack 1e-7).
double fisher_exact_two_sided(const Table2x2& t);

inline constexpr double kFisherRelativeSlack = 1e-7;

double bonferroni(double alpha, int m);

// Mid-ranks (1-based) with ties averaged.
std::vector<double> average_ranks(std::span<const double> x);

enum class SpearmanMethod { t_approximation, exact_permutation };

struct Spearman {
  double rho = 0.0;
  double p = 1.0;
};

// Exact permutation is available for n <= 10.
Spearman spearman(std::span<const double> x, std::span<const double> y,
                  SpearmanMethod method = SpearmanMethod::t_approximation);

struct MannWhitney {
  double u = 0.0;  // U of the first group
  double p = 1.0;  // two-sided
  bool exact = false;
};

// Exact enumeration when n1 + n2 <= 20, otherwise the tie-corrected normal
// approximation with continuity correction.
MannWhitney mann_whitney(std::span<const double> first, std::span<const double> second);

struct BiasRow {
  std::string property;
  std::string group_a, group_b;
  uint64_t n_a = 0, n_b = 0;
  double accuracy_a = 0.0, accuracy_b = 0.0;
  std::optional<double> p;  // empty when a group is empty
  bool significant = false;
};

struct BiasReport {
  std::vector<BiasRow> rows;
  double alpha = 0.05;
  double corrected_alpha = 0.0;
  // Spearman of per-sample correctness against disease duration (PD with
  // known duration); empty when fewer than 4 such samples or constant input.
  std::optional<Spearman> duration;
  uint64_t duration_n = 0;
};

// The six subgroup comparisons: sex, ethnicity (White vs Non-White), age
// (<50 vs >=50), and the three recording-environment pairs. Records with a
// missing attribute are left out of that comparison only.
BiasReport subgroup_bias_report(const std::vector<SampleRecord>& records, const std::vector<bool>& correct,
                                double alpha = 0.05);

std::string bias_report_csv(const BiasReport& report);

}  // namespace pangram::stats
