#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pangram/config.hpp"
#include "pangram/fusion_model.hpp"

namespace pangram {

// Parameter update rules. State is created lazily on the first step.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double momentum, double beta1, double beta2);

  void step(std::vector<Param>& params, const std::vector<Eigen::MatrixXd>& grads, double lr);

 private:
  OptimizerKind kind_;
  double momentum_, beta1_, beta2_;
  long long t_ = 0;
  std::vector<Eigen::MatrixXd> first_;   // SGD velocity or Adam first moment
  std::vector<Eigen::MatrixXd> second_;  // Adam second moment
};

// Learning-rate schedule driven once per finished epoch.
class LrSchedule {
 public:
  LrSchedule(SchedulerKind kind, double lr0, double gamma, int step_size, int patience);

  double lr() const { return lr_; }
  // epoch is 0-based and has just finished; improved tells whether the
  // selection metric set a new best.
  void end_epoch(int epoch, bool improved);

 private:
  SchedulerKind kind_;
  double lr0_, lr_, gamma_;
  int step_size_, patience_;
  int bad_epochs_ = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double loss = 0.0, bce = 0.0, cos = 0.0, rec = 0.0;  // sample-weighted means over batches
  double val_auroc = 0.0;
  double best_val_auroc = 0.0;
  double lr = 0.0;  // rate used during this epoch
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_auroc = 0.0;
  bool stopped_early = false;
  // Selection fell back to training AUROC because the validation rows were
  // missing or single-class.
  bool selected_on_train = false;
};

std::string history_csv(const TrainHistory& h);

struct LabeledBatch {
  Batch x;
  std::vector<int> y;

  size_t size() const { return y.size(); }
};

struct TrainResult {
  Model best;
  TrainHistory history;
};

// Mini-batch training with seeded shuffling, AUROC-based model selection and
// early stopping after 2 * patience epochs without improvement. Throws
// NumericalError on a non-finite loss.
TrainResult train_model(const ModelSpec& spec, const LabeledBatch& train, const LabeledBatch& validation,
                        const TrainConfig& config);

// The given rows of every input, in order.
LabeledBatch gather(const LabeledBatch& data, const std::vector<size_t>& rows);

}  // namespace pangram
