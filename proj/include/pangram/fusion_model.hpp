#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pangram/dataset.hpp"

namespace pangram {

enum class ModelKind { classifier, projection_fusion, shared_space };
enum class HeadKind { shallow, ann };
enum class RecMetric { mse, l1, kl };

std::string to_string(ModelKind k);
std::string to_string(HeadKind k);
std::string to_string(RecMetric m);
ModelKind parse_model_kind(const std::string& s);
HeadKind parse_head_kind(const std::string& s);
RecMetric parse_rec_metric(const std::string& s);

struct LossWeights {
  double pred = 1.0;
  double cos = 1.0;
  double rec = 1.0;

  bool operator==(const LossWeights&) const = default;
};

struct ModelSpec {
  ModelKind kind = ModelKind::classifier;
  HeadKind head = HeadKind::ann;
  // classifier: one input. projection_fusion: {source, target}.
  // shared_space: one entry per modality.
  std::vector<size_t> input_dims;
  size_t hidden = 64;
  size_t shared_dim = 512;
  bool renormalize = false;
  RecMetric rec_metric = RecMetric::mse;
  LossWeights weights;  // unused by the plain classifier, which trains on BCE

  // Width of the vector the decision head sees.
  size_t head_dim() const;
};

// Named parameter arrays. Vectors are stored as (n x 1) matrices except the
// output rows of the head, which are (1 x n).
struct Param {
  std::string name;
  Eigen::MatrixXd value;
};

struct Model {
  ModelSpec spec;
  std::vector<Param> params;

  size_t index_of(const std::string& name) const;
  const Eigen::MatrixXd& at(const std::string& name) const { return params[index_of(name)].value; }
  Eigen::MatrixXd& at(const std::string& name) { return params[index_of(name)].value; }
  size_t parameter_count() const;
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero. Throws
// std::invalid_argument on an inconsistent spec.
Model init_model(const ModelSpec& spec, uint64_t seed);

// Inputs are (batch x dim) matrices, one per model input.
using Batch = std::vector<Eigen::MatrixXd>;

inline constexpr double kProbClamp = 1e-7;

struct LossParts {
  double total = 0.0;
  double bce = 0.0;
  double cos = 0.0;
  double rec = 0.0;
  // Samples whose cosine term hit a zero-norm operand and was set to 1.
  size_t degenerate_cos = 0;
};

// Sigmoid outputs, one per row.
Eigen::VectorXd predict(const Model& model, const Batch& inputs);

// Mean loss over the batch. When grads is non-null it receives one array per
// parameter, same order and shapes as model.params.
LossParts loss_and_gradient(const Model& model, const Batch& inputs, std::span<const int> labels,
                            std::vector<Eigen::MatrixXd>* grads);

// The fused vector fed to the decision head (rows are samples). For the plain
// classifier this is the input itself.
Eigen::MatrixXd fused_representation(const Model& model, const Batch& inputs);

// Column-wise concatenation in set order, rows in sample_order. Column names
// are prefixed "<set>:". Throws DataError if a sample is missing from a set.
FeatureMatrix concat_features(const std::vector<FeatureMatrix>& sets, const std::vector<std::string>& sample_order);

}  // namespace pangram
