#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pangram/dataset.hpp"

namespace pangram {

struct ErrorSample {
  std::optional<double> age;
  std::optional<Sex> sex;
  std::optional<Ethnicity> ethnicity;
  Cohort cohort = Cohort::HomeRecorded;
  int label = 0;  // 1 = PD
  bool error = false;
};

// One row per record; correct[i] says whether record i was classified right.
std::vector<ErrorSample> error_samples(const std::vector<SampleRecord>& records, const std::vector<bool>& correct);

enum class Attribute { age, sex, ethnicity, label, cohort };
std::string to_string(Attribute a);
// Throws DataError on an unknown name.
Attribute parse_attribute(const std::string& s);

struct NodeSplit {
  Attribute feature = Attribute::age;
  std::optional<double> threshold;       // numeric: left is value <= threshold
  std::vector<std::string> left_levels;  // categorical: left holds these levels
  std::vector<std::string> right_levels;
  size_t missing = 0;        // samples without the attribute
  bool missing_left = true;  // they follow the larger child
};

struct ErrorTreeNode {
  std::optional<NodeSplit> split;
  size_t n = 0;
  size_t errors = 0;
  double error_rate = 0.0;
  double error_coverage = 0.0;  // errors / errors in the whole set
  std::vector<ErrorTreeNode> children;  // empty or {left, right}
};

struct TreeOptions {
  int max_depth = 4;
  size_t min_leaf = 10;
};

// Greedy binary splits on age, sex, ethnicity and true label minimising the
// weighted Gini impurity of the error indicator. Ties go to the earlier
// feature, then the lower threshold or first subset.
ErrorTreeNode build_error_tree(const std::vector<ErrorSample>& samples, TreeOptions options = {});

std::string tree_to_json(const ErrorTreeNode& root);
std::string tree_to_text(const ErrorTreeNode& root);

struct HeatmapCell {
  std::string a, b;  // level labels
  size_t n = 0;
  size_t errors = 0;
  std::optional<double> error_rate;  // empty for an empty cell
  double error_coverage = 0.0;
};

// Cross product of the observed levels of two attributes, row-major in
// (a, b). Age is cut into equal-width bins over its observed range;
// samples lacking an attribute form a "missing" level.
std::vector<HeatmapCell> heatmap_matrix(const std::vector<ErrorSample>& samples, Attribute a, Attribute b,
                                        size_t bins = 8);

std::string heatmap_csv(const std::vector<HeatmapCell>& cells, Attribute a, Attribute b);

}  // namespace pangram
