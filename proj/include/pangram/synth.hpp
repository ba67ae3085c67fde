#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pangram/dataset.hpp"

namespace pangram {

struct SynthModality {
  std::string name;
  size_t dim = 0;
};

struct SynthSpec {
  size_t n_participants = 2000;
  double pd_fraction = 0.3;
  int min_samples = 1;  // per participant, inclusive range
  int max_samples = 1;
  std::vector<SynthModality> modalities = {{"acoustic", 38}, {"w2v2", 768}, {"wavlm", 1024}, {"imagebind", 1024}};
  double delta = 3.0;          // PD mean shift along u, in within-class std units
  double latent_weight = 0.5;  // shared per-sample latent, along v orthogonal to u
  double age_mean = 62.0, age_std = 13.0, age_min = 16.0, age_max = 93.0;
  double age_missing = 0.19;
  double duration_missing = 0.635;
  // Category weights in enum order.
  std::vector<double> sex_weights = {608, 695, 1, 2};               // male, female, nonbinary, unknown
  std::vector<double> ethnicity_weights = {861, 48, 5, 59, 7, 326};  // white .. unknown
  std::vector<double> cohort_weights = {652, 352, 270};             // home, clinic, care
  uint64_t seed = 0;
};

struct SynthData {
  std::vector<SampleRecord> records;
  std::vector<FeatureMatrix> features;  // one per modality, rows in record order
  std::vector<Eigen::VectorXd> class_direction;   // u per modality
  std::vector<Eigen::VectorXd> latent_direction;  // v per modality
};

// Throws std::invalid_argument on an invalid spec.
void check_synth_spec(const SynthSpec& spec);

// Deterministic per seed. PD participants number round(n * pd_fraction).
SynthData generate(const SynthSpec& spec);

// manifest.csv plus <modality>.csv under dir.
void write_synth(const std::filesystem::path& dir, const SynthData& data);

}  // namespace pangram
