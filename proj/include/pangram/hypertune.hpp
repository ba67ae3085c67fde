#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pangram/checkpoint.hpp"
#include "pangram/config.hpp"
#include "pangram/dataset.hpp"
#include "pangram/random.hpp"

namespace pangram {

// Draw every tuned field independently from the published search space.
// Fields outside the space (architecture, reconstruction metric, widths)
// are copied from base.
TrainConfig sample_config(Rng& rng, const TrainConfig& base);

// Replaceable sampler; a surrogate-model proposer would plug in here.
using ConfigSampler = std::function<TrainConfig(uint64_t trial_seed, const TrainConfig& base)>;
TrainConfig random_sampler(uint64_t trial_seed, const TrainConfig& base);

struct TrialRecord {
  size_t index = 0;
  uint64_t trial_seed = 0;
  TrainConfig config;
  bool failed = false;
  std::string error;
  double best_val_auroc = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
};

// Higher validation AUROC first, then fewer epochs to the best, then the
// lower trial index. Failed trials go last.
bool ranks_before(const TrialRecord& a, const TrialRecord& b);

struct SearchOptions {
  size_t n_trials = 20;
  uint64_t seed = 0;
  size_t max_threads = 1;  // further capped by PANGRAM_FUSION_THREADS
  std::optional<std::filesystem::path> log_path;  // JSON lines, appended
  bool resume = false;  // skip trial indices already in the log
  ConfigSampler sampler = random_sampler;
};

struct SearchResult {
  std::vector<TrialRecord> ranked;
  std::optional<Checkpoint> best;  // empty when every trial failed
};

SearchResult run_search(const std::vector<SampleRecord>& records, const std::vector<FeatureMatrix>& sets,
                        const Split& split, const TrainConfig& base, const SearchOptions& options);

// Worker count after applying PANGRAM_FUSION_THREADS (at least 1).
size_t thread_limit(size_t requested);

std::string trial_to_json_line(const TrialRecord& t);
TrialRecord trial_from_json_line(const std::string& line);
std::string ranking_csv(const std::vector<TrialRecord>& ranked);

}  // namespace pangram
