#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pangram/config.hpp"
#include "pangram/dataset.hpp"
#include "pangram/fusion_model.hpp"
#include "pangram/preprocess.hpp"

namespace pangram {

inline constexpr int kCheckpointVersion = 1;

// Everything needed to score new samples the way the model was trained.
struct Checkpoint {
  Model model;
  // Feature set names in model-input order. A classifier over several sets
  // sees their concatenation as its single input.
  std::vector<std::string> feature_sets;
  std::vector<preprocess::PreprocessPlan> plans;  // one per model input
  TrainConfig config;
  Split split;
  int best_epoch = 0;
  double best_val_auroc = 0.0;
  bool selected_on_train = false;
};

// Versioned JSON; arrays are row-major decimal lists with their shapes.
std::string checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const std::string& text);
Checkpoint load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);

}  // namespace pangram
