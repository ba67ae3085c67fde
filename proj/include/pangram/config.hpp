#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pangram/fusion_model.hpp"
#include "pangram/preprocess.hpp"

namespace pangram {

enum class OptimizerKind { sgd, adamw };
enum class SchedulerKind { none, step, reduce };

std::string to_string(OptimizerKind k);
std::string to_string(SchedulerKind k);
OptimizerKind parse_optimizer(const std::string& s);
SchedulerKind parse_scheduler(const std::string& s);

// Training and preprocessing knobs. Field names follow the tuning table;
// the last group selects the architecture.
struct TrainConfig {
  int batch_size = 128;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  SchedulerKind scheduler = SchedulerKind::step;
  bool use_scheduler = false;
  double gamma = 0.5;
  int step_size = 10;
  int patience = 5;
  int num_epochs = 50;
  uint64_t seed = 0;          // parameter initialisation
  uint64_t random_state = 0;  // batch shuffling and resampling
  bool use_feature_scaling = true;
  preprocess::ScalerKind scaling_method = preprocess::ScalerKind::minmax;
  double corr_thr = 0.85;
  bool drop_correlated = true;
  preprocess::ResampleKind minority_oversample = preprocess::ResampleKind::none;
  HeadKind model = HeadKind::ann;
  LossWeights loss_weights{1.0, 1.0, 1.0};

  ModelKind architecture = ModelKind::projection_fusion;
  RecMetric rec_metric = RecMetric::mse;
  bool renormalize = false;
  size_t hidden_units = 64;
  size_t shared_dim = 512;
  // Divide the three loss weights by their sum before training. Off by
  // default, so the weights multiply the loss terms as given.
  bool normalize_loss_weights = false;

  // Scheduler actually applied: none unless use_scheduler is set.
  SchedulerKind effective_scheduler() const { return use_scheduler ? scheduler : SchedulerKind::none; }
  preprocess::ScalerKind effective_scaler() const {
    return use_feature_scaling ? scaling_method : preprocess::ScalerKind::none;
  }

  bool operator==(const TrainConfig&) const = default;
};

inline constexpr double kAdamWeightDecay = 0.01;
inline constexpr double kAdamEpsilon = 1e-8;
inline constexpr double kMinLearningRate = 1e-6;

// The best configuration reported for WavLM projected into ImageBind space.
TrainConfig reference_best_config();

// Hard errors (throws DataError): non-positive batch size, epochs, step
// size or learning rate, negative loss weights, betas outside [0, 1).
void check_config(const TrainConfig& c);

// Violations of the published search space, one message each; empty when
// the config lies inside it.
std::vector<std::string> search_space_violations(const TrainConfig& c);

// JSON with the tuning-table field names; yes/no strings for flags. Missing
// keys keep their defaults; unknown keys are an error.
std::string config_to_json(const TrainConfig& c);
TrainConfig config_from_json(const std::string& text, TrainConfig base = {});

}  // namespace pangram
