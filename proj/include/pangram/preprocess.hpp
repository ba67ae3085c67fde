#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pangram::preprocess {

enum class ScalerKind { none, zscore, minmax };
enum class ResampleKind { none, smote, random_over, random_under };

std::string to_string(ScalerKind k);
std::string to_string(ResampleKind k);
ScalerKind parse_scaler(const std::string& s);
ResampleKind parse_resample(const std::string& s);

struct ResampleMethod {
  ResampleKind kind = ResampleKind::none;
  int k = 5;  // SMOTE neighbours
};

// Column indices kept after scanning left to right: a column is dropped if
// it is constant or its |Pearson r| with an already-kept column exceeds thr.
// Rows are samples.
std::vector<size_t> prune_correlated(const Eigen::MatrixXd& train, double thr);

struct Scaler {
  ScalerKind kind = ScalerKind::none;
  // zscore: (x - offset) / scale with offset = mean, scale = population std.
  // minmax: offset = min, scale = max - min. Constant columns get scale 1
  // and are flagged, so they map to 0.
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;
  std::vector<bool> constant;
};

Scaler fit_scaler(const Eigen::MatrixXd& train, ScalerKind kind);
Eigen::MatrixXd apply_scaler(const Scaler& s, const Eigen::MatrixXd& x);

// Fitted on training rows only and applied unchanged to every split.
struct PreprocessPlan {
  size_t input_dim = 0;
  std::vector<size_t> kept_columns;
  Scaler scaler;
  ResampleMethod resample;
  bool drop_correlated = true;
  double corr_threshold = 0.85;
  uint64_t seed = 0;

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
};

struct PlanOptions {
  bool drop_correlated = true;
  double corr_threshold = 0.85;
  ScalerKind scaler = ScalerKind::minmax;
  ResampleMethod resample;
  uint64_t seed = 0;
};

PreprocessPlan fit_plan(const Eigen::MatrixXd& train, const PlanOptions& options);

std::string plan_to_json(const PreprocessPlan& plan);
PreprocessPlan plan_from_json(const std::string& text);

struct Resampled {
  Eigen::MatrixXd x;       // rows are samples
  std::vector<int> labels;
};

// Balance classes on training rows. Synthetic SMOTE rows follow the
// originals; oversampled duplicates are appended; undersampling keeps rows
// in their original order.
Resampled resample(const Eigen::MatrixXd& x, const std::vector<int>& labels, ResampleMethod method, uint64_t seed);

// x + lambda * (neighbour - x)
Eigen::VectorXd interpolate(const Eigen::VectorXd& x, const Eigen::VectorXd& neighbour, double lambda);

}  // namespace pangram::preprocess
