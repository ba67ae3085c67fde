#include "pangram/metrics.hpp"

#include "pangram/io.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace pangram::metrics {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  if (scores.empty()) throw std::invalid_argument("empty score vector");
}

struct ClassCounts {
  uint64_t pos = 0, neg = 0;
};

ClassCounts count_classes(std::span<const int> labels) {
  ClassCounts c;
  for (int l : labels) (l ? c.pos : c.neg) += 1;
  return c;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto cc = count_classes(labels);
  if (cc.pos == 0 || cc.neg == 0) throw std::invalid_argument("AUROC needs both classes");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) { return scores[i] < scores[j]; });
  // Twice the positive rank sum, kept integral so ties stay exact.
  uint64_t twice_rank_sum = 0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    uint64_t pos_in_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in_group += labels[order[j]] ? 1 : 0;
      ++j;
    }
    twice_rank_sum += pos_in_group * (i + 1 + j);  // mid-rank = (i + 1 + j) / 2
    i = j;
  }
  const uint64_t twice_u = twice_rank_sum - cc.pos * (cc.pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(cc.pos) * static_cast<double>(cc.neg));
}

std::vector<RocPoint> roc_export(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto cc = count_classes(labels);
  if (cc.pos == 0 || cc.neg == 0) throw std::invalid_argument("ROC needs both classes");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) { return scores[i] > scores[j]; });
  std::vector<RocPoint> pts{{0.0, 0.0, 0, 0}};
  uint64_t tp = 0, fp = 0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp) += 1;
      ++j;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(cc.neg),
                   static_cast<double>(tp) / static_cast<double>(cc.pos), fp, tp});
    i = j;
  }
  return pts;
}

double roc_area(const std::vector<RocPoint>& points) {
  if (points.size() < 2) return 0.0;
  uint64_t twice_area = 0;
  for (size_t i = 1; i < points.size(); ++i) {
    twice_area += (points[i].fp - points[i - 1].fp) * (points[i].tp + points[i - 1].tp);
  }
  const auto& last = points.back();
  return static_cast<double>(twice_area) / (2.0 * static_cast<double>(last.fp) * static_cast<double>(last.tp));
}

EvalReport rates_from_counts(uint64_t tp, uint64_t fp, uint64_t tn, uint64_t fn) {
  EvalReport r;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  auto ratio = [](uint64_t num, uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(tp + tn, tp + fp + tn + fn).value_or(0.0);
  r.sensitivity = ratio(tp, tp + fn);
  r.specificity = ratio(tn, tn + fp);
  r.ppv = ratio(tp, tp + fp);
  r.npv = ratio(tn, tn + fn);
  return r;
}

EvalReport confusion_and_rates(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) (predicted ? tp : fn) += 1;
    else (predicted ? fp : tn) += 1;
  }
  EvalReport r = rates_from_counts(tp, fp, tn, fn);
  r.threshold = threshold;
  if (tp + fn > 0 && tn + fp > 0) {
    r.auroc = auroc(scores, labels);
    r.roc_points = roc_export(scores, labels);
  }
  return r;
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["counts"] = {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}};
  j["n"] = r.total();
  j["threshold"] = r.threshold;
  j["accuracy"] = r.accuracy;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  j["sensitivity"] = opt(r.sensitivity);
  j["specificity"] = opt(r.specificity);
  j["ppv"] = opt(r.ppv);
  j["npv"] = opt(r.npv);
  j["auroc"] = opt(r.auroc);
  return j.dump(2) + "\n";
}

std::string roc_csv(const std::vector<RocPoint>& points) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : points) out += io::format_double(p.fpr) + ',' + io::format_double(p.tpr) + '\n';
  return out;
}

std::string confusion_csv(const EvalReport& r) {
  return "actual,predicted_pd,predicted_control\npd," + std::to_string(r.tp) + ',' + std::to_string(r.fn) +
         "\ncontrol," + std::to_string(r.fp) + ',' + std::to_string(r.tn) + '\n';
}

ParticipantScores aggregate_by_participant(std::span<const std::string> participant_ids,
                                           std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  if (participant_ids.size() != scores.size()) throw std::invalid_argument("participant ids differ in length");
  struct Acc {
    double sum = 0.0;
    size_t n = 0;
    int label = 0;
  };
  std::map<std::string, Acc> acc;
  for (size_t i = 0; i < scores.size(); ++i) {
    auto& a = acc[participant_ids[i]];
    a.sum += scores[i];
    ++a.n;
    a.label = a.label || labels[i];
  }
  ParticipantScores out;
  for (const auto& [id, a] : acc) {
    out.participant_ids.push_back(id);
    out.scores.push_back(a.sum / static_cast<double>(a.n));
    out.labels.push_back(a.label);
  }
  return out;
}

}  // namespace pangram::metrics
