#include <doctest.h>

#include <cmath>
#include <limits>

#include "pangram/config.hpp"
#include "pangram/errors.hpp"
#include "pangram/random.hpp"
#include "pangram/trainer.hpp"

using namespace pangram;

namespace {

// Two Gaussian blobs in d dimensions, as a single classifier input.
LabeledBatch blobs(size_t n, Eigen::Index d, double shift, uint64_t seed) {
  Rng rng(seed);
  LabeledBatch b;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), d);
  for (size_t i = 0; i < n; ++i) {
    const int y = i % 3 == 0 ? 1 : 0;
    b.y.push_back(y);
    for (Eigen::Index j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), j) = rng.normal() + (y && j == 0 ? shift : 0.0);
  }
  b.x.push_back(x);
  return b;
}

ModelSpec classifier(Eigen::Index d, HeadKind head) {
  ModelSpec s;
  s.kind = ModelKind::classifier;
  s.head = head;
  s.input_dims = {static_cast<size_t>(d)};
  s.hidden = 8;
  return s;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.batch_size = 32;
  c.learning_rate = 0.05;
  c.momentum = 0.9;
  c.num_epochs = 30;
  c.patience = 3;
  c.seed = 5;
  c.random_state = 9;
  return c;
}

double quadratic(double theta) { return (theta - 3.0) * (theta - 3.0); }

}  // namespace

TEST_CASE("sgd converges on a one-parameter quadratic") {
  std::vector<Param> p = {{"theta", Eigen::MatrixXd::Constant(1, 1, -4.0)}};
  Optimizer opt(OptimizerKind::sgd, 0.0, 0.9, 0.999);
  int steps = 0;
  while (steps < 200 && std::abs(p[0].value(0, 0) - 3.0) > 1e-6) {
    opt.step(p, {Eigen::MatrixXd::Constant(1, 1, 2.0 * (p[0].value(0, 0) - 3.0))}, 0.1);
    ++steps;
  }
  CHECK(std::abs(p[0].value(0, 0) - 3.0) <= 1e-6);
  CHECK(steps <= 200);
}

TEST_CASE("both optimizers decrease a convex quadratic monotonically at lr 1e-2") {
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adamw}) {
    std::vector<Param> p = {{"theta", Eigen::MatrixXd::Constant(1, 1, 8.0)}};
    Optimizer opt(kind, 0.5, 0.9, 0.999);
    double prev = quadratic(8.0);
    for (int i = 0; i < 100; ++i) {
      opt.step(p, {Eigen::MatrixXd::Constant(1, 1, 2.0 * (p[0].value(0, 0) - 3.0))}, 1e-2);
      const double now = quadratic(p[0].value(0, 0));
      CHECK(now < prev);
      prev = now;
    }
  }
}

TEST_CASE("sgd momentum accumulates velocity") {
  std::vector<Param> p = {{"w", Eigen::MatrixXd::Zero(1, 1)}};
  Optimizer opt(OptimizerKind::sgd, 0.5, 0.9, 0.999);
  const std::vector<Eigen::MatrixXd> g = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  opt.step(p, g, 0.1);
  CHECK(p[0].value(0, 0) == doctest::Approx(-0.1));
  opt.step(p, g, 0.1);
  CHECK(p[0].value(0, 0) == doctest::Approx(-0.1 - 0.15));
}

TEST_CASE("adamw first step moves each weight by lr plus decay") {
  std::vector<Param> p = {{"w", Eigen::MatrixXd::Constant(1, 2, 2.0)}};
  Optimizer opt(OptimizerKind::adamw, 0.0, 0.9, 0.999);
  Eigen::MatrixXd g(1, 2);
  g << 0.5, -3.0;
  opt.step(p, {g}, 0.01);
  const double decayed = 2.0 * (1.0 - 0.01 * kAdamWeightDecay);
  CHECK(p[0].value(0, 0) == doctest::Approx(decayed - 0.01).epsilon(1e-6));
  CHECK(p[0].value(0, 1) == doctest::Approx(decayed + 0.01).epsilon(1e-6));
}

TEST_CASE("step schedule follows lr0 * gamma^floor(e / step)") {
  const double lr0 = 0.3674643450313223, gamma = 0.6033860204614545;
  LrSchedule s(SchedulerKind::step, lr0, gamma, 17, 5);
  for (int e = 0; e < 86; ++e) {
    s.end_epoch(e, false);
    CHECK(s.lr() == lr0 * std::pow(gamma, (e + 1) / 17));
    if (e + 1 == 17) CHECK(s.lr() == doctest::Approx(0.3675 * 0.6034).epsilon(1e-3));
  }
}

TEST_CASE("reduce schedule never increases and stops at the floor") {
  LrSchedule s(SchedulerKind::reduce, 0.1, 0.5, 1, 2);
  double prev = s.lr();
  for (int e = 0; e < 200; ++e) {
    s.end_epoch(e, e % 7 == 0);
    CHECK(s.lr() <= prev);
    CHECK(s.lr() >= kMinLearningRate);
    prev = s.lr();
  }
  CHECK(s.lr() == kMinLearningRate);
  LrSchedule flat(SchedulerKind::none, 0.2, 0.5, 1, 1);
  flat.end_epoch(0, false);
  CHECK(flat.lr() == 0.2);
}

TEST_CASE("training is deterministic and keeps monotone bookkeeping") {
  const auto train = blobs(200, 4, 2.5, 1);
  const auto val = blobs(90, 4, 2.5, 2);
  for (auto head : {HeadKind::shallow, HeadKind::ann}) {
    const auto a = train_model(classifier(4, head), train, val, quick_config());
    const auto b = train_model(classifier(4, head), train, val, quick_config());
    CHECK(history_csv(a.history) == history_csv(b.history));
    REQUIRE(a.best.params.size() == b.best.params.size());
    for (size_t k = 0; k < a.best.params.size(); ++k) CHECK(a.best.params[k].value == b.best.params[k].value);

    double best = -1.0, running = -1.0;
    for (const auto& e : a.history.epochs) {
      CHECK(e.best_val_auroc >= running);
      running = e.best_val_auroc;
      best = std::max(best, e.val_auroc);
      CHECK(e.best_val_auroc == best);
    }
    CHECK(a.history.best_val_auroc == best);
    CHECK(a.history.best_val_auroc > 0.85);
    CHECK_FALSE(a.history.selected_on_train);
  }
}

TEST_CASE("early stopping after twice the patience without improvement") {
  auto config = quick_config();
  config.num_epochs = 300;
  config.patience = 1;
  const auto r = train_model(classifier(4, HeadKind::shallow), blobs(120, 4, 3.0, 3), blobs(60, 4, 3.0, 4), config);
  CHECK(r.history.stopped_early);
  CHECK(static_cast<int>(r.history.epochs.size()) == r.history.best_epoch + 2);
}

TEST_CASE("selection falls back to training AUROC without usable validation") {
  auto val = blobs(30, 4, 2.0, 6);
  std::fill(val.y.begin(), val.y.end(), 0);
  const auto r = train_model(classifier(4, HeadKind::shallow), blobs(90, 4, 2.0, 5), val, quick_config());
  CHECK(r.history.selected_on_train);
  const auto empty = train_model(classifier(4, HeadKind::shallow), blobs(90, 4, 2.0, 5), {}, quick_config());
  CHECK(empty.history.selected_on_train);
}

TEST_CASE("non-finite loss names the epoch and batch") {
  // The first step saturates the head; momentum keeps pushing the weights
  // until they overflow a few batches later.
  auto train = blobs(64, 3, 1.0, 7);
  auto config = quick_config();
  config.batch_size = 8;
  config.learning_rate = 1e308;
  config.momentum = 0.99;
  CHECK_THROWS_WITH_AS(train_model(classifier(3, HeadKind::shallow), train, {}, config),
                       doctest::Contains("at epoch 1, batch"), NumericalError);
  train.x[0](5, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train_model(classifier(3, HeadKind::ann), train, {}, quick_config()), DataError);
}

TEST_CASE("gather picks rows of every input") {
  LabeledBatch b;
  b.x = {Eigen::MatrixXd::Identity(3, 3), 2.0 * Eigen::MatrixXd::Identity(3, 2)};
  b.y = {0, 1, 0};
  const auto g = gather(b, {2, 1});
  CHECK(g.y == std::vector<int>{0, 1});
  CHECK(g.x[0](0, 2) == 1.0);
  CHECK(g.x[1](1, 1) == 2.0);
}

TEST_CASE("reference configuration") {
  const auto c = reference_best_config();
  CHECK(c.loss_weights.cos == 68);
  CHECK(c.loss_weights.pred == 87);
  CHECK(c.loss_weights.rec == 48);
  CHECK(c.batch_size == 128);
  CHECK(c.optimizer == OptimizerKind::sgd);
  CHECK(c.learning_rate == 0.3674643450313223);
  CHECK(c.momentum == 0.8075456327084843);
  CHECK(c.num_epochs == 86);
  CHECK(c.seed == 191);
  CHECK(c.random_state == 621);
  CHECK(c.effective_scheduler() == SchedulerKind::none);
  CHECK(search_space_violations(c).empty());
  CHECK(config_from_json(config_to_json(c)) == c);
}

TEST_CASE("config json errors") {
  CHECK_THROWS_AS(config_from_json("{\"bogus\": 1}"), DataError);
  CHECK_THROWS_AS(config_from_json("not json"), DataError);
  CHECK_THROWS_AS(config_from_json("{\"drop_correlated\": \"maybe\"}"), DataError);
  const auto c = config_from_json("{\"optimizer\": \"AdamW\", \"batch_size\": 256}", reference_best_config());
  CHECK(c.optimizer == OptimizerKind::adamw);
  CHECK(c.batch_size == 256);
  CHECK(c.seed == 191);
  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(check_config(bad), DataError);
  bad = {};
  bad.loss_weights.cos = -1;
  CHECK_THROWS_AS(check_config(bad), DataError);
}
