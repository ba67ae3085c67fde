#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pangram/errors.hpp"
#include "pangram/preprocess.hpp"
#include "pangram/random.hpp"

using namespace pangram;
using namespace pangram::preprocess;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Distance from p to the segment [a, b].
double segment_distance(const VectorXd& p, const VectorXd& a, const VectorXd& b) {
  const VectorXd d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * d)).norm();
}

}  // namespace

TEST_CASE("pruning drops exact linear copies and constants") {
  MatrixXd x = gaussian(30, 4, 1);
  x.col(1) = 2.0 * x.col(0).array() + 3.0;
  x.col(2).setConstant(7.0);
  CHECK(prune_correlated(x, 0.85) == std::vector<size_t>{0, 3});
  CHECK_THROWS_AS(prune_correlated(x.topRows(1), 0.85), DataError);
}

TEST_CASE("independent noise columns all survive") {
  const MatrixXd x = gaussian(500, 12, 2);
  CHECK(prune_correlated(x, 0.85).size() == 12);
  CHECK(prune_correlated(x, 0.85) == prune_correlated(x, 0.85));
}

TEST_CASE("pruning keeps the earlier of a correlated pair") {
  MatrixXd x = gaussian(200, 3, 3);
  x.col(2) = x.col(1) + 0.05 * gaussian(200, 1, 4);
  CHECK(prune_correlated(x, 0.85) == std::vector<size_t>{0, 1});
  CHECK(prune_correlated(x, 1.0).size() == 3);
}

TEST_CASE("scalers") {
  MatrixXd train(3, 2);
  train << 0, 2, 5, 4, 10, 6;
  const auto mm = fit_scaler(train, ScalerKind::minmax);
  const MatrixXd y = apply_scaler(mm, train);
  CHECK(y(1, 0) == 0.5);
  CHECK(y(2, 0) == 1.0);
  MatrixXd test(1, 2);
  test << 20, 4;
  CHECK(apply_scaler(mm, test)(0, 0) == 2.0);

  const auto z = fit_scaler(train, ScalerKind::zscore);
  const MatrixXd zy = apply_scaler(z, train);
  CHECK(zy.col(1).mean() == doctest::Approx(0.0));
  CHECK(std::sqrt(zy.col(1).array().square().mean()) == doctest::Approx(1.0));

  MatrixXd flat(3, 1);
  flat << 4, 4, 4;
  for (auto kind : {ScalerKind::minmax, ScalerKind::zscore}) {
    const auto s = fit_scaler(flat, kind);
    CHECK(s.constant[0]);
    CHECK(apply_scaler(s, flat).isZero());
  }
  CHECK(apply_scaler(fit_scaler(train, ScalerKind::none), train) == train);
}

TEST_CASE("scaling preserves the order within each column") {
  const MatrixXd x = gaussian(50, 3, 5);
  for (auto kind : {ScalerKind::minmax, ScalerKind::zscore}) {
    const MatrixXd y = apply_scaler(fit_scaler(x, kind), x);
    for (Eigen::Index c = 0; c < 3; ++c) {
      for (Eigen::Index i = 0; i < 50; ++i) {
        for (Eigen::Index j = 0; j < 50; ++j) {
          if (x(i, c) < x(j, c)) CHECK(y(i, c) < y(j, c));
        }
      }
    }
  }
}

TEST_CASE("plans are fitted on train and idempotent on re-application") {
  MatrixXd train = gaussian(40, 5, 6);
  train.col(3) = -train.col(0);
  PlanOptions o;
  o.scaler = ScalerKind::zscore;
  const auto plan = fit_plan(train, o);
  CHECK(plan.kept_columns == std::vector<size_t>{0, 1, 2, 4});
  const MatrixXd once = plan.transform(train);
  CHECK(once.cols() == 4);
  CHECK(plan.transform(train) == once);
  CHECK_THROWS_AS(plan.transform(gaussian(3, 4, 1)), DataError);

  const auto back = plan_from_json(plan_to_json(plan));
  CHECK(back.kept_columns == plan.kept_columns);
  CHECK(back.transform(train) == once);

  MatrixXd flat = MatrixXd::Ones(5, 3);
  CHECK_THROWS_AS(fit_plan(flat, o), DataError);
}

TEST_CASE("interpolation between minority points") {
  VectorXd a(2), b(2);
  a << 0, 0;
  b << 1, 1;
  const VectorXd mid = interpolate(a, b, 0.5);
  CHECK(mid(0) == 0.5);
  CHECK(mid(1) == 0.5);
}

TEST_CASE("resampling balances the classes") {
  const MatrixXd x = gaussian(14, 3, 7);
  std::vector<int> y(14, 0);
  for (int i = 0; i < 4; ++i) y[static_cast<size_t>(i) * 3] = 1;
  auto count = [](const std::vector<int>& l, int v) { return std::count(l.begin(), l.end(), v); };

  const auto under = resample(x, y, {ResampleKind::random_under, 5}, 1);
  CHECK(count(under.labels, 0) == 4);
  CHECK(count(under.labels, 1) == 4);

  const auto over = resample(x, y, {ResampleKind::random_over, 5}, 1);
  CHECK(count(over.labels, 1) == 10);
  CHECK(over.x.topRows(14) == x);

  const auto none = resample(x, y, {ResampleKind::none, 5}, 1);
  CHECK(none.x == x);

  const auto sm = resample(x, y, {ResampleKind::smote, 5}, 1);
  CHECK(count(sm.labels, 1) == 10);
  CHECK(sm.x.topRows(14) == x);
  CHECK(resample(x, y, {ResampleKind::smote, 5}, 1).x == sm.x);

  std::vector<int> lonely(14, 0);
  lonely[2] = 1;
  CHECK_THROWS_AS(resample(x, lonely, {ResampleKind::smote, 5}, 1), DataError);
}

TEST_CASE("every SMOTE point lies on a segment between two minority points") {
  for (uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(rng.integer(8, 40));
    const MatrixXd x = gaussian(n, static_cast<Eigen::Index>(rng.integer(1, 6)), seed + 100);
    std::vector<int> y(static_cast<size_t>(n), 0);
    const auto minority = rng.integer(2, n / 3);
    for (int64_t i = 0; i < minority; ++i) y[static_cast<size_t>(i)] = 1;
    const int k = static_cast<int>(rng.integer(1, 7));
    const auto r = resample(x, y, {ResampleKind::smote, k}, seed);
    for (Eigen::Index s = n; s < r.x.rows(); ++s) {
      CHECK(r.labels[static_cast<size_t>(s)] == 1);
      double best = INFINITY;
      for (int64_t i = 0; i < minority; ++i) {
        for (int64_t j = i + 1; j < minority; ++j) {
          best = std::min(best, segment_distance(r.x.row(s).transpose(), x.row(i).transpose(), x.row(j).transpose()));
        }
      }
      CHECK(best < 1e-9);
    }
  }
}

TEST_CASE("enum names round-trip") {
  CHECK(parse_scaler("StandardScaler") == ScalerKind::zscore);
  CHECK(parse_scaler("MinMaxScaler") == ScalerKind::minmax);
  for (auto k : {ResampleKind::none, ResampleKind::smote, ResampleKind::random_over, ResampleKind::random_under}) {
    CHECK(parse_resample(to_string(k)) == k);
  }
  CHECK_THROWS(parse_scaler("robust"));
}
