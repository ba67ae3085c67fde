#include "pangram/acoustic.hpp"

#include "pangram/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <unsupported/Eigen/FFT>

namespace pangram::acoustic {

namespace {

void require_rate(const AudioClip& clip) {
  if (clip.sample_rate != kSampleRate) {
    throw DataError("clip sample rate must be 16000 Hz, got " + std::to_string(clip.sample_rate));
  }
}

std::vector<double> hann(size_t n) {
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return w;
}

// One-sided power spectrum |X[k]|^2, k = 0..n/2, of a windowed segment.
std::vector<double> power_spectrum(Eigen::FFT<double>& fft, const std::vector<double>& segment) {
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, segment);
  std::vector<double> p(segment.size() / 2 + 1);
  for (size_t k = 0; k < p.size(); ++k) p[k] = std::norm(spec[k]);
  return p;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters (kMelFilters x bins) over 0..Nyquist.
std::vector<std::vector<double>> mel_filterbank() {
  const size_t bins = kMfccFft / 2 + 1;
  const double nyquist = kSampleRate / 2.0;
  std::vector<double> edges(kMelFilters + 2);
  const double mel_hi = hz_to_mel(nyquist);
  for (size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(kMelFilters + 1));
  }
  std::vector<std::vector<double>> fb(kMelFilters, std::vector<double>(bins, 0.0));
  for (size_t m = 0; m < kMelFilters; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    for (size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / kMfccFft;
      const double rise = (f - lo) / (centre - lo);
      const double fall = (hi - f) / (hi - centre);
      fb[m][k] = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

// Orthonormal DCT-II, first kCepstra coefficients.
std::array<double, kCepstra> dct2(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  std::array<double, kCepstra> c{};
  for (size_t k = 0; k < kCepstra; ++k) {
    double s = 0.0;
    for (size_t m = 0; m < x.size(); ++m) {
      s += x[m] * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(m) + 0.5) / n);
    }
    c[k] = s * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
  }
  return c;
}

// Normalised autocorrelation at one lag, both halves energy-normalised.
double normalized_acf(const double* x, size_t len, size_t lag) {
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (size_t n = 0; n + lag < len; ++n) {
    xy += x[n] * x[n + lag];
    xx += x[n] * x[n];
    yy += x[n + lag] * x[n + lag];
  }
  const double denom = std::sqrt(xx * yy);
  return denom > 0.0 ? xy / denom : 0.0;
}

// Inclusive sample ranges [first, last) covered by runs of voiced frames.
struct VoicedRun {
  size_t first_frame = 0;
  size_t last_frame = 0;  // inclusive
  size_t begin = 0;
  size_t end = 0;
};

std::vector<VoicedRun> voiced_runs(const std::vector<PitchFrame>& pitch, size_t n_samples) {
  std::vector<VoicedRun> runs;
  for (size_t i = 0; i < pitch.size();) {
    if (!pitch[i].f0) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < pitch.size() && pitch[j + 1].f0) ++j;
    VoicedRun r;
    r.first_frame = i;
    r.last_frame = j;
    r.begin = i * kHop;
    r.end = std::min(n_samples, j * kHop + kPitchFrame);
    runs.push_back(r);
    i = j + 1;
  }
  return runs;
}

double local_period(const std::vector<PitchFrame>& pitch, const VoicedRun& run, size_t sample) {
  const size_t centre_offset = kPitchFrame / 2;
  size_t frame = sample > centre_offset ? (sample - centre_offset + kHop / 2) / kHop : 0;
  frame = std::clamp(frame, run.first_frame, run.last_frame);
  return kSampleRate / *pitch[frame].f0;
}

std::vector<double> voiced_f0(const std::vector<PitchFrame>& pitch) {
  std::vector<double> f0;
  for (const auto& p : pitch) {
    if (p.f0) f0.push_back(*p.f0);
  }
  return f0;
}

}  // namespace

std::vector<PitchFrame> pitch_track(const AudioClip& clip) {
  require_rate(clip);
  const auto& x = clip.samples;
  if (x.size() < kPitchFrame) throw DataError("clip shorter than one 40 ms pitch frame");

  const auto min_lag = static_cast<size_t>(std::ceil(kSampleRate / kMaxF0));
  const auto max_lag = static_cast<size_t>(std::floor(kSampleRate / kMinF0));
  const size_t n_frames = 1 + (x.size() - kPitchFrame) / kHop;

  std::vector<PitchFrame> out(n_frames);
  std::vector<double> frame(kPitchFrame);
  std::vector<double> r(max_lag + 2, 0.0);
  for (size_t f = 0; f < n_frames; ++f) {
    const size_t start = f * kHop;
    out[f].time = static_cast<double>(start + kPitchFrame / 2) / kSampleRate;
    const double mean =
        std::accumulate(x.begin() + static_cast<long>(start), x.begin() + static_cast<long>(start + kPitchFrame), 0.0) /
        kPitchFrame;
    double energy = 0.0;
    for (size_t n = 0; n < kPitchFrame; ++n) {
      frame[n] = x[start + n] - mean;
      energy += frame[n] * frame[n];
    }
    if (energy <= 0.0) continue;

    for (size_t lag = min_lag - 1; lag <= max_lag + 1; ++lag) r[lag] = normalized_acf(frame.data(), kPitchFrame, lag);
    size_t best = min_lag;
    for (size_t lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] > r[best]) best = lag;
    }
    out[f].correlation = r[best];
    if (r[best] < kVoicingThreshold) continue;

    // Prefer the shortest-lag local maximum that is nearly as strong as the
    // global one; longer lags at integer multiples are sub-harmonics.
    size_t chosen = best;
    for (size_t lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] >= 0.9 * r[best]) {
        chosen = lag;
        break;
      }
    }
    const double a = r[chosen - 1], b = r[chosen], c = r[chosen + 1];
    const double curvature = a - 2.0 * b + c;
    double offset = curvature < 0.0 ? 0.5 * (a - c) / curvature : 0.0;
    offset = std::clamp(offset, -0.5, 0.5);
    out[f].f0 = kSampleRate / (static_cast<double>(chosen) + offset);
  }
  return out;
}

std::vector<std::vector<size_t>> glottal_peaks(const AudioClip& clip, const std::vector<PitchFrame>& pitch) {
  const auto& x = clip.samples;
  std::vector<std::vector<size_t>> out;
  for (const auto& run : voiced_runs(pitch, x.size())) {
    std::vector<size_t> peaks;
    const double t0 = local_period(pitch, run, run.begin);
    const size_t first_end = std::min(run.end, run.begin + static_cast<size_t>(std::ceil(1.5 * t0)));
    if (first_end <= run.begin) continue;
    size_t p = static_cast<size_t>(std::max_element(x.begin() + static_cast<long>(run.begin),
                                                    x.begin() + static_cast<long>(first_end)) -
                                   x.begin());
    peaks.push_back(p);
    while (true) {
      const double period = local_period(pitch, run, p);
      const auto lo = p + static_cast<size_t>(std::ceil(0.7 * period));
      const auto hi = p + static_cast<size_t>(std::floor(1.3 * period)) + 1;
      if (hi > run.end) break;
      p = static_cast<size_t>(std::max_element(x.begin() + static_cast<long>(lo), x.begin() + static_cast<long>(hi)) -
                              x.begin());
      peaks.push_back(p);
    }
    out.push_back(std::move(peaks));
  }
  return out;
}

JitterShimmer jitter_shimmer(const AudioClip& clip, const std::vector<PitchFrame>& pitch) {
  require_rate(clip);
  const auto f0 = voiced_f0(pitch);
  if (f0.empty()) throw DataError("no voiced segment");

  double period_sum = 0.0, amp_sum = 0.0, dperiod_sum = 0.0, damp_sum = 0.0;
  size_t n_periods = 0, n_amps = 0, n_dperiods = 0, n_damps = 0;
  for (const auto& peaks : glottal_peaks(clip, pitch)) {
    for (size_t i = 0; i < peaks.size(); ++i) {
      const double amp = clip.samples[peaks[i]];
      amp_sum += amp;
      ++n_amps;
      if (i > 0) {
        damp_sum += std::abs(amp - clip.samples[peaks[i - 1]]);
        ++n_damps;
        const double period = static_cast<double>(peaks[i] - peaks[i - 1]) / kSampleRate;
        period_sum += period;
        ++n_periods;
        if (i > 1) {
          const double prev = static_cast<double>(peaks[i - 1] - peaks[i - 2]) / kSampleRate;
          dperiod_sum += std::abs(period - prev);
          ++n_dperiods;
        }
      }
    }
  }
  if (n_dperiods == 0) throw DataError("fewer than two consecutive glottal cycles detected");

  JitterShimmer js;
  js.f0m = std::accumulate(f0.begin(), f0.end(), 0.0) / static_cast<double>(f0.size());
  js.f0j = dperiod_sum / static_cast<double>(n_dperiods);
  js.f0jr = js.f0j / (period_sum / static_cast<double>(n_periods));
  js.ash = damp_sum / static_cast<double>(n_damps);
  const double mean_amp = amp_sum / static_cast<double>(n_amps);
  js.ashr = mean_amp > 0.0 ? js.ash / mean_amp : 0.0;
  return js;
}

std::vector<double> whitened_semitones(std::span<const double> f0) {
  std::vector<double> sorted(f0.begin(), f0.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  std::vector<double> s(n);
  for (size_t i = 0; i < n; ++i) s[i] = 12.0 * std::log2(f0[i] / median);

  double r0 = 0.0, r1 = 0.0, r2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    r0 += s[i] * s[i];
    if (i >= 1) r1 += s[i] * s[i - 1];
    if (i >= 2) r2 += s[i] * s[i - 2];
  }
  double a1 = 0.0, a2 = 0.0;
  const double det = r0 * r0 - r1 * r1;
  if (r0 > 0.0 && std::abs(det) > 1e-12 * r0 * r0) {
    a1 = (r1 * r0 - r1 * r2) / det;
    a2 = (r0 * r2 - r1 * r1) / det;
  }
  std::vector<double> residual;
  for (size_t i = 2; i < n; ++i) residual.push_back(s[i] - a1 * s[i - 1] - a2 * s[i - 2]);
  return residual;
}

double binned_entropy(std::span<const double> values, size_t bins, double lo, double hi) {
  if (values.empty()) return 0.0;
  std::vector<size_t> counts(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    const double pos = std::floor((v - lo) / width);
    const auto b = static_cast<size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++counts[b];
  }
  double h = 0.0;
  for (size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(values.size());
    h -= p * std::log(p);
  }
  return h;
}

double ppe(const std::vector<PitchFrame>& pitch) {
  const auto f0 = voiced_f0(pitch);
  if (f0.size() < 10) throw DataError("PPE needs at least 10 voiced frames, got " + std::to_string(f0.size()));
  const auto residual = whitened_semitones(f0);
  return binned_entropy(residual, kPpeBins, -kPpeRange, kPpeRange);
}

std::vector<std::array<double, kCepstra>> mfcc_frames(const AudioClip& clip) {
  require_rate(clip);
  const auto& x = clip.samples;
  if (x.size() < kMfccWindow) throw DataError("clip shorter than one 25 ms MFCC window");
  static const auto filterbank = mel_filterbank();
  const auto window = hann(kMfccWindow);
  Eigen::FFT<double> fft;

  const size_t n_frames = 1 + (x.size() - kMfccWindow) / kHop;
  std::vector<std::array<double, kCepstra>> out(n_frames);
  std::vector<double> segment(kMfccFft);
  std::vector<double> log_mel(kMelFilters);
  for (size_t f = 0; f < n_frames; ++f) {
    std::fill(segment.begin(), segment.end(), 0.0);
    for (size_t n = 0; n < kMfccWindow; ++n) segment[n] = x[f * kHop + n] * window[n];
    const auto power = power_spectrum(fft, segment);
    for (size_t m = 0; m < kMelFilters; ++m) {
      double e = 0.0;
      for (size_t k = 0; k < power.size(); ++k) e += filterbank[m][k] * power[k];
      log_mel[m] = std::log(std::max(e, kLogFloor));
    }
    out[f] = dct2(log_mel);
  }
  return out;
}

MfccStats mfcc_stats(const AudioClip& clip) {
  const auto frames = mfcc_frames(clip);
  MfccStats st;
  for (size_t k = 0; k < kCepstra; ++k) {
    double sum = 0.0, dsum = 0.0;
    for (size_t t = 0; t < frames.size(); ++t) {
      sum += frames[t][k];
      if (t > 0) dsum += std::abs(frames[t][k] - frames[t - 1][k]);
    }
    st.mean[k] = sum / static_cast<double>(frames.size());
    st.delta[k] = frames.size() > 1 ? dsum / static_cast<double>(frames.size() - 1) : 0.0;
  }
  return st;
}

BandPowers band_powers(const AudioClip& clip) {
  require_rate(clip);
  const auto& x = clip.samples;
  if (x.size() < kWelchSegment) throw DataError("clip shorter than one 1024-sample Welch segment");
  const auto window = hann(kWelchSegment);
  Eigen::FFT<double> fft;
  const size_t step = kWelchSegment / 2;
  const size_t n_segments = 1 + (x.size() - kWelchSegment) / step;

  std::vector<double> psd(kWelchSegment / 2 + 1, 0.0);
  std::vector<double> segment(kWelchSegment);
  for (size_t s = 0; s < n_segments; ++s) {
    for (size_t n = 0; n < kWelchSegment; ++n) segment[n] = x[s * step + n] * window[n];
    const auto p = power_spectrum(fft, segment);
    for (size_t k = 0; k < psd.size(); ++k) psd[k] += p[k];
  }

  const double bin_hz = static_cast<double>(kSampleRate) / kWelchSegment;
  auto band = [&](double lo, double hi, bool include_hi) {
    double sum = 0.0;
    for (size_t k = 0; k < psd.size(); ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      if (f >= lo && (f < hi || (include_hi && f <= hi))) sum += psd[k];
    }
    return sum;
  };
  const double total = std::accumulate(psd.begin(), psd.end(), 0.0);
  if (!(total > 0.0)) throw DataError("zero total spectral power");

  BandPowers bp;
  const double edges[5] = {0.0, 500.0, 1000.0, 2000.0, 8000.0};
  for (size_t b = 0; b < 4; ++b) bp.relative[b] = band(edges[b], edges[b + 1], b == 3) / total;
  const double floor = 1e-12 * total;
  const double high = std::max(band(1000.0, 5000.0, false), floor);
  const double low = std::max(band(50.0, 1000.0, false), floor);
  bp.alpha = 10.0 * std::log10(high / low);
  return bp;
}

double harmonic_ratio(const AudioClip& clip, const std::vector<PitchFrame>& pitch) {
  const auto f0 = voiced_f0(pitch);
  if (f0.empty()) throw DataError("no voiced segment");
  const double f0m = std::accumulate(f0.begin(), f0.end(), 0.0) / static_cast<double>(f0.size());
  const auto period = static_cast<size_t>(std::lround(kSampleRate / f0m));
  const auto& x = clip.samples;

  double periodic = 0.0, aperiodic = 0.0;
  for (const auto& run : voiced_runs(pitch, x.size())) {
    for (size_t n = run.begin; n + period < run.end; ++n) {
      const double sum = 0.5 * (x[n] + x[n + period]);
      const double diff = 0.5 * (x[n] - x[n + period]);
      periodic += sum * sum;
      aperiodic += diff * diff;
    }
  }
  const double floor = 1e-12 * (periodic + aperiodic);
  if (!(periodic + aperiodic > 0.0)) throw DataError("zero power in voiced segments");
  return 10.0 * std::log10(std::max(periodic, floor) / std::max(aperiodic, floor));
}

SpectralShape band_powers_alpha_hnorm(const AudioClip& clip, const std::vector<PitchFrame>& pitch) {
  const auto bp = band_powers(clip);
  SpectralShape s;
  s.relbandpower = bp.relative;
  s.alpha = bp.alpha;
  s.hnorm = harmonic_ratio(clip, pitch);
  return s;
}

const std::array<std::string, kAcousticDim>& acoustic_column_names() {
  static const std::array<std::string, kAcousticDim> names = [] {
    std::array<std::string, kAcousticDim> n;
    size_t i = 0;
    for (size_t k = 0; k < kCepstra; ++k) n[i++] = "cepm" + std::to_string(k);
    for (size_t k = 0; k < kCepstra; ++k) n[i++] = "cepj" + std::to_string(k);
    for (const char* s : {"f0m", "f0j", "f0jr", "ash", "ashr", "ppe", "alpha", "Hnorm"}) n[i++] = s;
    for (size_t k = 0; k < 4; ++k) n[i++] = "relbandpower" + std::to_string(k);
    return n;
  }();
  return names;
}

double AcousticVector::operator[](std::string_view name) const {
  const auto& names = acoustic_column_names();
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw std::out_of_range("no acoustic feature named " + std::string(name));
}

AcousticVector assemble_acoustic_vector(const AudioClip& clip) {
  require_rate(clip);
  if (clip.duration() < 0.5) throw DataError("clip shorter than 0.5 s");
  const auto pitch = pitch_track(clip);
  const auto js = jitter_shimmer(clip, pitch);
  const double entropy = ppe(pitch);
  const auto mfcc = mfcc_stats(clip);
  const auto shape = band_powers_alpha_hnorm(clip, pitch);

  AcousticVector v;
  size_t i = 0;
  for (double c : mfcc.mean) v.values[i++] = c;
  for (double c : mfcc.delta) v.values[i++] = c;
  for (double c : {js.f0m, js.f0j, js.f0jr, js.ash, js.ashr, entropy, shape.alpha, shape.hnorm}) v.values[i++] = c;
  for (double c : shape.relbandpower) v.values[i++] = c;
  for (double c : v.values) {
    if (!std::isfinite(c)) throw NumericalError("non-finite acoustic feature");
  }
  return v;
}

std::vector<stats::MannWhitney> mannwhitney_relevance(const FeatureMatrix& features, const std::vector<int>& labels) {
  if (labels.size() != features.rows()) throw DataError("label count does not match feature rows");
  std::vector<stats::MannWhitney> out;
  for (Eigen::Index j = 0; j < features.values.cols(); ++j) {
    std::vector<double> pd, control;
    for (size_t i = 0; i < labels.size(); ++i) {
      (labels[i] ? pd : control).push_back(features.values(static_cast<Eigen::Index>(i), j));
    }
    out.push_back(stats::mann_whitney(pd, control));
  }
  return out;
}

}  // namespace pangram::acoustic
