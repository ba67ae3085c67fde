#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pangram/metrics.hpp"
#include "pangram/random.hpp"

using namespace pangram;
using namespace pangram::metrics;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Scores drawn from a small grid so ties are common.
Instance random_instance(uint64_t seed) {
  Rng rng(seed);
  Instance in;
  const auto n = static_cast<size_t>(rng.integer(2, 500));
  const auto levels = rng.integer(2, 40);
  for (size_t i = 0; i < n; ++i) {
    in.labels.push_back(static_cast<int>(rng.index(2)));
    in.scores.push_back(static_cast<double>(rng.integer(0, levels)) / static_cast<double>(levels));
  }
  in.labels[0] = 0;
  in.labels[1] = 1;
  return in;
}

}  // namespace

TEST_CASE("auroc examples") {
  const std::vector<double> s = {0.9, 0.8, 0.4, 0.2};
  CHECK(auroc(s, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(auroc(s, std::vector<int>{1, 0, 1, 0}) == 0.75);
  CHECK(auroc(std::vector<double>(4, 0.3), std::vector<int>{1, 0, 1, 0}) == 0.5);
  CHECK_THROWS_AS(auroc(s, std::vector<int>{1, 1, 1, 1}), std::invalid_argument);
}

TEST_CASE("rank auroc equals pair counting exactly") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const auto in = random_instance(seed);
    const double want = oracle::to_double(oracle::pair_auroc(in.scores, in.labels));
    CHECK(auroc(in.scores, in.labels) == want);
    CHECK(roc_area(roc_export(in.scores, in.labels)) == want);
  }
}

TEST_CASE("auroc invariances") {
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> s, neg, warped;
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
      s.push_back(rng.normal());
      y.push_back(static_cast<int>(rng.index(2)));
    }
    y[0] = 0;
    y[1] = 1;
    for (double v : s) {
      neg.push_back(-v);
      warped.push_back(std::exp(3.0 * v) + 7.0);
    }
    CHECK(auroc(s, y) + auroc(neg, y) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(auroc(warped, y) == auroc(s, y));
    CHECK(roc_area(roc_export(neg, y)) == doctest::Approx(1.0 - auroc(s, y)).epsilon(1e-15));
  }
}

TEST_CASE("roc points run from the origin to (1, 1)") {
  const std::vector<double> s = {0.9, 0.8, 0.4, 0.2};
  const std::vector<int> y = {1, 1, 0, 0};
  const auto pts = roc_export(s, y);
  CHECK(pts.front().fpr == 0.0);
  CHECK(pts.front().tpr == 0.0);
  CHECK(pts.back().fpr == 1.0);
  CHECK(pts.back().tpr == 1.0);
  bool corner = false;
  for (const auto& p : pts) corner = corner || (p.fpr == 0.0 && p.tpr == 1.0);
  CHECK(corner);
  CHECK(roc_csv(pts).rfind("fpr,tpr", 0) == 0);
}

TEST_CASE("rates reproduce the best fusion row") {
  const auto r = rates_from_counts(60, 14, 143, 20);
  CHECK(std::round(*r.sensitivity * 10000.0) / 100.0 == 75.00);
  CHECK(std::round(*r.specificity * 10000.0) / 100.0 == 91.08);
  CHECK(std::round(*r.ppv * 10000.0) / 100.0 == 81.08);
  CHECK(std::round(*r.npv * 10000.0) / 100.0 == 87.73);
}

TEST_CASE("confusion at a threshold") {
  const std::vector<double> s = {0.9, 0.5, 0.49, 0.1};
  const auto all_right = confusion_and_rates(s, std::vector<int>{1, 1, 0, 0});
  CHECK(all_right.accuracy == 1.0);
  CHECK(*all_right.sensitivity == 1.0);
  CHECK(*all_right.specificity == 1.0);
  CHECK(*all_right.ppv == 1.0);
  CHECK(*all_right.npv == 1.0);
  CHECK(*all_right.auroc == 1.0);

  const auto none_positive = confusion_and_rates(s, std::vector<int>{1, 1, 0, 0}, 0.95);
  CHECK(none_positive.tp + none_positive.fp == 0);
  CHECK_FALSE(none_positive.ppv.has_value());
  CHECK(report_to_json(none_positive).find("\"ppv\": null") != std::string::npos);

  const auto one_class = confusion_and_rates(s, std::vector<int>{0, 0, 0, 0});
  CHECK_FALSE(one_class.auroc.has_value());
  CHECK_FALSE(one_class.sensitivity.has_value());
  CHECK_THROWS(confusion_and_rates(std::vector<double>{}, std::vector<int>{}));
}

TEST_CASE("participant aggregation") {
  const std::vector<std::string> ids = {"b", "a", "b", "a"};
  const std::vector<double> s = {0.2, 0.6, 0.4, 1.0};
  const std::vector<int> y = {0, 1, 1, 1};
  const auto agg = aggregate_by_participant(ids, s, y);
  CHECK(agg.participant_ids == std::vector<std::string>{"a", "b"});
  CHECK(agg.scores[0] == doctest::Approx(0.8));
  CHECK(agg.scores[1] == doctest::Approx(0.3));
  CHECK(agg.labels == std::vector<int>{1, 1});
}
