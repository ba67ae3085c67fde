#pragma once

#include <string>
#include <vector>

#include "pangram/checkpoint.hpp"
#include "pangram/config.hpp"
#include "pangram/dataset.hpp"
#include "pangram/metrics.hpp"
#include "pangram/trainer.hpp"

namespace pangram {

// Model inputs for the given records, before preprocessing. A classifier
// concatenates every set; the fusion models take one input per set.
Batch raw_inputs(ModelKind kind, const std::vector<FeatureMatrix>& sets, const std::vector<SampleRecord>& records);

std::vector<int> labels_of(const std::vector<SampleRecord>& records);

// Model spec implied by a config and the preprocessed input widths.
ModelSpec spec_for(const TrainConfig& config, const std::vector<size_t>& input_dims);

struct FitResult {
  Checkpoint checkpoint;
  TrainHistory history;
};

// Fit preprocessing on the training participants, resample the training
// rows, train, and package the best model. Feature sets are matched to
// records by sample id; a missing row is a DataError.
FitResult fit_pipeline(const std::vector<SampleRecord>& records, const std::vector<FeatureMatrix>& sets,
                       const Split& split, const TrainConfig& config);

struct Scored {
  std::vector<SampleRecord> records;
  std::vector<double> scores;
  std::vector<int> labels;
};

// Apply the checkpoint's plans and model. Sets are looked up by name.
Scored score_records(const Checkpoint& checkpoint, const std::vector<SampleRecord>& records,
                     const std::vector<FeatureMatrix>& sets);

metrics::EvalReport evaluate_scores(const Scored& s, double threshold);

}  // namespace pangram
