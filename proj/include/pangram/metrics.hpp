#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pangram::metrics {

// Rank-based AUROC: P(score+ > score-) + 0.5 P(tie). Labels are 0/1 and
// both classes must be present.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  uint64_t fp = 0;  // counts behind the rates
  uint64_t tp = 0;
};

// One point per distinct score threshold, from (0,0) to (1,1).
std::vector<RocPoint> roc_export(std::span<const double> scores, std::span<const int> labels);

// Trapezoid area computed from the integer counts, so it equals auroc()
// exactly for the same inputs.
double roc_area(const std::vector<RocPoint>& points);

struct EvalReport {
  uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double threshold = 0.5;
  double accuracy = 0.0;
  std::optional<double> sensitivity, specificity, ppv, npv;
  std::optional<double> auroc;  // empty when only one class is present
  std::vector<RocPoint> roc_points;

  uint64_t total() const { return tp + fp + tn + fn; }
};

// Rates from raw counts; ratio metrics are empty when their denominator is 0.
EvalReport rates_from_counts(uint64_t tp, uint64_t fp, uint64_t tn, uint64_t fn);

// Positive iff score >= threshold.
EvalReport confusion_and_rates(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

std::string report_to_json(const EvalReport& r);
std::string roc_csv(const std::vector<RocPoint>& points);
std::string confusion_csv(const EvalReport& r);

struct ParticipantScores {
  std::vector<std::string> participant_ids;
  std::vector<double> scores;  // mean sample score
  std::vector<int> labels;     // 1 if any sample is positive
};

// Collapse per-sample scores to one row per participant (sorted by id).
ParticipantScores aggregate_by_participant(std::span<const std::string> participant_ids,
                                           std::span<const double> scores, std::span<const int> labels);

}  // namespace pangram::metrics
