#include "pangram/trainer.hpp"

#include "pangram/errors.hpp"
#include "pangram/io.hpp"
#include "pangram/metrics.hpp"
#include "pangram/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pangram {

Optimizer::Optimizer(OptimizerKind kind, double momentum, double beta1, double beta2)
    : kind_(kind), momentum_(momentum), beta1_(beta1), beta2_(beta2) {}

void Optimizer::step(std::vector<Param>& params, const std::vector<Eigen::MatrixXd>& grads, double lr) {
  if (grads.size() != params.size()) throw std::invalid_argument("gradient count does not match parameters");
  if (first_.empty()) {
    for (const auto& p : params) {
      first_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
      if (kind_ == OptimizerKind::adamw) second_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    }
  }
  ++t_;
  if (kind_ == OptimizerKind::sgd) {
    for (size_t i = 0; i < params.size(); ++i) {
      first_[i] = momentum_ * first_[i] + grads[i];
      params[i].value -= lr * first_[i];
    }
    return;
  }
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& theta = params[i].value;
    theta *= 1.0 - lr * kAdamWeightDecay;
    first_[i] = beta1_ * first_[i] + (1.0 - beta1_) * grads[i];
    second_[i] = beta2_ * second_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
    theta.array() -= lr * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + kAdamEpsilon);
  }
}

LrSchedule::LrSchedule(SchedulerKind kind, double lr0, double gamma, int step_size, int patience)
    : kind_(kind), lr0_(lr0), lr_(lr0), gamma_(gamma), step_size_(step_size), patience_(patience) {}

void LrSchedule::end_epoch(int epoch, bool improved) {
  switch (kind_) {
    case SchedulerKind::none:
      break;
    case SchedulerKind::step:
      lr_ = lr0_ * std::pow(gamma_, static_cast<double>((epoch + 1) / step_size_));
      break;
    case SchedulerKind::reduce:
      bad_epochs_ = improved ? 0 : bad_epochs_ + 1;
      if (bad_epochs_ >= patience_) {
        lr_ = std::max(kMinLearningRate, lr_ * gamma_);
        bad_epochs_ = 0;
      }
      break;
  }
}

std::string history_csv(const TrainHistory& h) {
  std::string out = "epoch,loss,bce,cos,rec,val_auroc,best_val_auroc,lr\n";
  for (const auto& e : h.epochs) {
    out += std::to_string(e.epoch);
    for (double v : {e.loss, e.bce, e.cos, e.rec, e.val_auroc, e.best_val_auroc, e.lr}) {
      out += ',' + io::format_double(v);
    }
    out += '\n';
  }
  return out;
}

LabeledBatch gather(const LabeledBatch& data, const std::vector<size_t>& rows) {
  LabeledBatch out;
  for (const auto& m : data.x) {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
    out.x.push_back(std::move(sub));
  }
  out.y.reserve(rows.size());
  for (size_t r : rows) out.y.push_back(data.y[r]);
  return out;
}

namespace {

bool both_classes(const std::vector<int>& y) {
  const bool pos = std::find(y.begin(), y.end(), 1) != y.end();
  const bool neg = std::find(y.begin(), y.end(), 0) != y.end();
  return pos && neg;
}

double selection_auroc(const Model& m, const LabeledBatch& data) {
  const Eigen::VectorXd p = predict(m, data.x);
  return metrics::auroc(std::span<const double>(p.data(), static_cast<size_t>(p.size())), data.y);
}

}  // namespace

TrainResult train_model(const ModelSpec& spec, const LabeledBatch& train, const LabeledBatch& validation,
                        const TrainConfig& config) {
  check_config(config);
  if (train.size() == 0) throw DataError("training set is empty");
  if (!both_classes(train.y)) throw DataError("training set must contain both classes");

  TrainResult result{init_model(spec, config.seed), {}};
  Model model = result.best;
  TrainHistory& h = result.history;
  h.selected_on_train = validation.size() == 0 || !both_classes(validation.y);
  const LabeledBatch& select_on = h.selected_on_train ? train : validation;

  Optimizer opt(config.optimizer, config.momentum, config.beta1, config.beta2);
  LrSchedule schedule(config.effective_scheduler(), config.learning_rate, config.gamma, config.step_size,
                      config.patience);
  Rng rng(config.random_state);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t batch = static_cast<size_t>(config.batch_size);
  h.best_val_auroc = -1.0;
  int since_best = 0;
  std::vector<Eigen::MatrixXd> grads;

  for (int epoch = 0; epoch < config.num_epochs; ++epoch) {
    rng.shuffle(std::span<size_t>(order));
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = schedule.lr();
    for (size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::vector<size_t> rows(order.begin() + static_cast<long>(start),
                                     order.begin() + static_cast<long>(std::min(order.size(), start + batch)));
      const LabeledBatch mb = gather(train, rows);
      const LossParts parts = loss_and_gradient(model, mb.x, mb.y, &grads);
      const bool finite = std::isfinite(parts.total) &&
                          std::all_of(grads.begin(), grads.end(), [](const Eigen::MatrixXd& g) { return g.allFinite(); });
      if (!finite) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                             std::to_string(b + 1));
      }
      const double w = static_cast<double>(rows.size());
      rec.loss += w * parts.total;
      rec.bce += w * parts.bce;
      rec.cos += w * parts.cos;
      rec.rec += w * parts.rec;
      opt.step(model.params, grads, schedule.lr());
      for (const auto& p : model.params) {
        if (!p.value.allFinite()) {
          throw NumericalError("non-finite parameters at epoch " + std::to_string(epoch + 1) + ", batch " +
                               std::to_string(b + 1));
        }
      }
    }
    const double n = static_cast<double>(order.size());
    rec.loss /= n;
    rec.bce /= n;
    rec.cos /= n;
    rec.rec /= n;

    rec.val_auroc = selection_auroc(model, select_on);
    const bool improved = rec.val_auroc > h.best_val_auroc;
    if (improved) {
      h.best_val_auroc = rec.val_auroc;
      h.best_epoch = epoch + 1;
      result.best = model;
      since_best = 0;
    } else {
      ++since_best;
    }
    rec.best_val_auroc = h.best_val_auroc;
    h.epochs.push_back(rec);
    schedule.end_epoch(epoch, improved);
    if (since_best >= 2 * config.patience) {
      h.stopped_early = epoch + 1 < config.num_epochs;
      break;
    }
  }
  return result;
}

}  // namespace pangram
