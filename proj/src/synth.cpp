#include "pangram/synth.hpp"

#include "pangram/acoustic.hpp"
#include "pangram/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace pangram {

namespace {

size_t categorical(Rng& rng, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

Eigen::VectorXd random_unit(Rng& rng, size_t d) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  } while (v.norm() == 0.0);
  return v.normalized();
}

void check_weights(const std::vector<double>& w, size_t n, const char* what) {
  if (w.size() != n) throw std::invalid_argument(std::string(what) + " weights need " + std::to_string(n) + " entries");
  if (std::any_of(w.begin(), w.end(), [](double x) { return !(x >= 0.0) || !std::isfinite(x); }) ||
      std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) {
    throw std::invalid_argument(std::string(what) + " weights must be non-negative with a positive sum");
  }
}

std::string padded(const char* prefix, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

}  // namespace

void check_synth_spec(const SynthSpec& s) {
  if (s.n_participants < 3) throw std::invalid_argument("synth needs at least 3 participants");
  if (!(s.pd_fraction > 0.0 && s.pd_fraction < 1.0)) throw std::invalid_argument("pd_fraction must lie in (0, 1)");
  if (s.min_samples < 1 || s.max_samples < s.min_samples) throw std::invalid_argument("bad samples-per-participant range");
  if (!(s.delta >= 0.0) || !std::isfinite(s.delta)) throw std::invalid_argument("delta must be >= 0");
  if (!(s.latent_weight >= 0.0) || !std::isfinite(s.latent_weight)) throw std::invalid_argument("latent weight must be >= 0");
  if (s.modalities.empty()) throw std::invalid_argument("synth needs at least one modality");
  for (const auto& m : s.modalities) {
    if (m.dim < 2) throw std::invalid_argument("modality '" + m.name + "' needs dim >= 2");
    if (m.name.empty()) throw std::invalid_argument("modality name is empty");
  }
  if (!(s.age_std > 0.0) || !(s.age_min < s.age_max)) throw std::invalid_argument("bad age distribution");
  if (!(s.age_missing >= 0.0 && s.age_missing <= 1.0) || !(s.duration_missing >= 0.0 && s.duration_missing <= 1.0)) {
    throw std::invalid_argument("missing fractions must lie in [0, 1]");
  }
  check_weights(s.sex_weights, 4, "sex");
  check_weights(s.ethnicity_weights, 6, "ethnicity");
  check_weights(s.cohort_weights, 3, "cohort");
}

SynthData generate(const SynthSpec& spec) {
  check_synth_spec(spec);
  SynthData out;
  const size_t n = spec.n_participants;
  const auto n_pd = static_cast<size_t>(std::llround(static_cast<double>(n) * spec.pd_fraction));

  Rng demo(mix_seed(spec.seed, 0));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  demo.shuffle(std::span<size_t>(order));
  std::vector<bool> is_pd(n, false);
  for (size_t i = 0; i < n_pd; ++i) is_pd[order[i]] = true;

  const auto base = std::chrono::sys_days{std::chrono::year{2019} / 1 / 1};
  std::vector<double> latent;
  for (size_t p = 0; p < n; ++p) {
    const std::string pid = padded("P", p + 1);
    std::optional<double> age;
    if (demo.uniform() >= spec.age_missing) {
      double a;
      do {
        a = spec.age_mean + spec.age_std * demo.normal();
      } while (a < spec.age_min || a > spec.age_max);
      age = std::round(a);
    }
    const auto sex = static_cast<Sex>(categorical(demo, spec.sex_weights));
    const auto eth = static_cast<Ethnicity>(categorical(demo, spec.ethnicity_weights));
    const auto cohort = static_cast<Cohort>(categorical(demo, spec.cohort_weights));
    std::optional<double> duration;
    if (is_pd[p] && demo.uniform() >= spec.duration_missing) {
      duration = std::clamp(std::round(std::abs(6.32 + 5.24 * demo.normal())), 1.0, 27.0);
    }
    const int samples = static_cast<int>(demo.integer(spec.min_samples, spec.max_samples));
    const auto first_day = static_cast<int>(demo.index(1000));
    for (int k = 0; k < samples; ++k) {
      SampleRecord r;
      r.participant_id = pid;
      r.sample_id = pid + "-" + std::to_string(k + 1);
      r.recording_date = std::chrono::year_month_day{base + std::chrono::days{first_day + 7 * k}};
      r.cohort = cohort;
      r.label = is_pd[p] ? Label::PD : Label::Control;
      r.age = age;
      r.sex = sex;
      r.ethnicity = eth;
      r.disease_duration = duration;
      r.audio_path = "audio/" + r.sample_id + ".wav";
      out.records.push_back(std::move(r));
      latent.push_back(demo.normal());
    }
  }

  const auto rows = static_cast<Eigen::Index>(out.records.size());
  for (size_t m = 0; m < spec.modalities.size(); ++m) {
    const auto& mod = spec.modalities[m];
    Rng rng(mix_seed(spec.seed, 1 + m));
    const Eigen::VectorXd u = random_unit(rng, mod.dim);
    Eigen::VectorXd v = random_unit(rng, mod.dim);
    v -= u * u.dot(v);
    v.normalize();

    FeatureMatrix f;
    f.set_name = mod.name;
    if (mod.name == "acoustic" && mod.dim == acoustic::kAcousticDim) {
      const auto& names = acoustic::acoustic_column_names();
      f.column_names.assign(names.begin(), names.end());
    } else {
      for (size_t j = 0; j < mod.dim; ++j) f.column_names.push_back("emb" + std::to_string(j));
    }
    f.values.resize(rows, static_cast<Eigen::Index>(mod.dim));
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& r = out.records[static_cast<size_t>(i)];
      f.sample_ids.push_back(r.sample_id);
      for (Eigen::Index j = 0; j < f.values.cols(); ++j) f.values(i, j) = rng.normal();
      f.values.row(i) += (spec.latent_weight * latent[static_cast<size_t>(i)]) * v.transpose();
      if (r.is_pd()) f.values.row(i) += spec.delta * u.transpose();
    }
    out.features.push_back(std::move(f));
    out.class_direction.push_back(u);
    out.latent_direction.push_back(v);
  }
  return out;
}

void write_synth(const std::filesystem::path& dir, const SynthData& data) {
  std::filesystem::create_directories(dir);
  write_manifest(dir / "manifest.csv", data.records);
  for (const auto& f : data.features) write_feature_csv(dir / (f.set_name + ".csv"), f);
}

}  // namespace pangram
