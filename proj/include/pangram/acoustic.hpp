#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pangram/dataset.hpp"
#include "pangram/stats.hpp"
#include "pangram/wav.hpp"

namespace pangram::acoustic {

// Analysis constants (samples at 16 kHz).
inline constexpr size_t kPitchFrame = 640;  // 40 ms
inline constexpr size_t kHop = 160;         // 10 ms
inline constexpr double kMinF0 = 60.0;
inline constexpr double kMaxF0 = 400.0;
inline constexpr double kVoicingThreshold = 0.45;
inline constexpr size_t kMfccWindow = 400;  // 25 ms
inline constexpr size_t kMfccFft = 512;
inline constexpr size_t kMelFilters = 26;
inline constexpr size_t kCepstra = 13;
inline constexpr double kLogFloor = 1e-10;
inline constexpr size_t kWelchSegment = 1024;
inline constexpr size_t kPpeBins = 30;
inline constexpr double kPpeRange = 1.5;  // semitones

struct PitchFrame {
  double time = 0.0;          // frame centre, seconds
  std::optional<double> f0;   // Hz; empty when unvoiced
  double correlation = 0.0;   // peak normalised autocorrelation
};

// Normalised-autocorrelation pitch track over 40 ms frames with a 10 ms hop.
std::vector<PitchFrame> pitch_track(const AudioClip& clip);

struct JitterShimmer {
  double f0m = 0.0;   // mean voiced F0, Hz
  double f0j = 0.0;   // mean |T[i+1] - T[i]|, seconds
  double f0jr = 0.0;  // f0j / mean period
  double ash = 0.0;   // mean |A[i+1] - A[i]|
  double ashr = 0.0;  // ash / mean amplitude
};

// Cycle-level perturbation measures. Glottal cycles are located by peak
// picking inside voiced runs, one peak per local pitch period.
JitterShimmer jitter_shimmer(const AudioClip& clip, const std::vector<PitchFrame>& pitch);

// Sample positions of the detected cycle peaks, one vector per voiced run.
std::vector<std::vector<size_t>> glottal_peaks(const AudioClip& clip, const std::vector<PitchFrame>& pitch);

// Semitone contour relative to the median, whitened by an order-2 linear
// predictor fitted by the autocorrelation method.
std::vector<double> whitened_semitones(std::span<const double> f0);

// Shannon entropy (nats) of a histogram over [lo, hi]; out-of-range values
// land in the edge bins.
double binned_entropy(std::span<const double> values, size_t bins, double lo, double hi);

// Pitch period entropy of the voiced frames; needs at least 10 of them.
double ppe(const std::vector<PitchFrame>& pitch);

struct MfccStats {
  std::array<double, kCepstra> mean{};   // cepm
  std::array<double, kCepstra> delta{};  // cepj: mean |c(t+1) - c(t)|
};

// Per-frame MFCC matrix (frames x 13).
std::vector<std::array<double, kCepstra>> mfcc_frames(const AudioClip& clip);
MfccStats mfcc_stats(const AudioClip& clip);

struct BandPowers {
  std::array<double, 4> relative{};  // 0-500, 500-1000, 1000-2000, 2000-8000 Hz
  double alpha = 0.0;                // dB, 1-5 kHz over 50-1000 Hz
};

// Welch periodogram band summary. Throws on zero total power.
BandPowers band_powers(const AudioClip& clip);

// Comb-filter harmonicity at the mean voiced F0, in dB.
double harmonic_ratio(const AudioClip& clip, const std::vector<PitchFrame>& pitch);

struct SpectralShape {
  std::array<double, 4> relbandpower{};
  double alpha = 0.0;
  double hnorm = 0.0;
};

SpectralShape band_powers_alpha_hnorm(const AudioClip& clip, const std::vector<PitchFrame>& pitch);

inline constexpr size_t kAcousticDim = 38;

const std::array<std::string, kAcousticDim>& acoustic_column_names();

struct AcousticVector {
  std::array<double, kAcousticDim> values{};

  double operator[](std::string_view name) const;
};

AcousticVector assemble_acoustic_vector(const AudioClip& clip);

// Per-column Mann-Whitney U of PD (label 1) against control (label 0).
std::vector<stats::MannWhitney> mannwhitney_relevance(const FeatureMatrix& features,
                                                      const std::vector<int>& labels);

}  // namespace pangram::acoustic
