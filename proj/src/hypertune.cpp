#include "pangram/hypertune.hpp"

#include "pangram/errors.hpp"
#include "pangram/io.hpp"
#include "pangram/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace pangram {

TrainConfig sample_config(Rng& rng, const TrainConfig& base) {
  using preprocess::ResampleKind;
  using preprocess::ScalerKind;
  TrainConfig c = base;
  static constexpr int kBatch[] = {128, 256, 512, 1024};
  static constexpr double kCorr[] = {0.8, 0.85, 0.9, 0.95};
  c.batch_size = kBatch[rng.index(4)];
  c.beta1 = rng.uniform(0.9, 0.99);
  c.beta2 = rng.uniform(0.99, 0.9999);
  c.corr_thr = kCorr[rng.index(4)];
  c.drop_correlated = rng.index(2) == 0;
  c.gamma = rng.uniform(0.5, 0.95);
  c.learning_rate = rng.uniform(0.05, 0.8);
  c.minority_oversample = rng.index(2) == 0 ? ResampleKind::smote : ResampleKind::none;
  c.model = rng.index(2) == 0 ? HeadKind::ann : HeadKind::shallow;
  c.momentum = rng.uniform(0.1, 1.0);
  c.num_epochs = static_cast<int>(rng.integer(2, 500));
  c.optimizer = rng.index(2) == 0 ? OptimizerKind::adamw : OptimizerKind::sgd;
  c.patience = static_cast<int>(rng.integer(1, 5));
  c.random_state = static_cast<uint64_t>(rng.integer(100, 999));
  c.scaling_method = rng.index(2) == 0 ? ScalerKind::zscore : ScalerKind::minmax;
  c.scheduler = rng.index(2) == 0 ? SchedulerKind::step : SchedulerKind::reduce;
  c.seed = static_cast<uint64_t>(rng.integer(100, 999));
  c.step_size = static_cast<int>(rng.integer(1, 30));
  c.use_feature_scaling = rng.index(2) == 0;
  c.use_scheduler = rng.index(2) == 0;
  c.loss_weights.pred = static_cast<double>(rng.integer(0, 100));
  c.loss_weights.cos = static_cast<double>(rng.integer(0, 100));
  c.loss_weights.rec = static_cast<double>(rng.integer(0, 100));
  return c;
}

TrainConfig random_sampler(uint64_t trial_seed, const TrainConfig& base) {
  Rng rng(trial_seed);
  return sample_config(rng, base);
}

bool ranks_before(const TrialRecord& a, const TrialRecord& b) {
  if (a.failed != b.failed) return !a.failed;
  if (!a.failed && a.best_val_auroc != b.best_val_auroc) return a.best_val_auroc > b.best_val_auroc;
  if (!a.failed && a.best_epoch != b.best_epoch) return a.best_epoch < b.best_epoch;
  return a.index < b.index;
}

size_t thread_limit(size_t requested) {
  size_t n = std::max<size_t>(1, requested);
  if (const char* env = std::getenv("PANGRAM_FUSION_THREADS")) {
    try {
      const long long cap = io::parse_int(env);
      if (cap >= 1) n = std::min(n, static_cast<size_t>(cap));
    } catch (const DataError&) {
      // ignore a malformed cap
    }
  }
  return n;
}

std::string trial_to_json_line(const TrialRecord& t) {
  nlohmann::ordered_json j;
  j["trial"] = t.index;
  j["trial_seed"] = t.trial_seed;
  j["status"] = t.failed ? "failed" : "ok";
  if (t.failed) j["error"] = t.error;
  j["best_val_auroc"] = t.best_val_auroc;
  j["best_epoch"] = t.best_epoch;
  j["epochs_run"] = t.epochs_run;
  j["config"] = nlohmann::ordered_json::parse(config_to_json(t.config));
  return j.dump();
}

TrialRecord trial_from_json_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    TrialRecord t;
    t.index = j.at("trial").get<size_t>();
    t.trial_seed = j.at("trial_seed").get<uint64_t>();
    t.failed = j.at("status").get<std::string>() == "failed";
    if (t.failed) t.error = j.value("error", "");
    t.best_val_auroc = j.at("best_val_auroc").get<double>();
    t.best_epoch = j.at("best_epoch").get<int>();
    t.epochs_run = j.at("epochs_run").get<int>();
    t.config = config_from_json(j.at("config").dump());
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad trial log line: ") + e.what());
  }
}

std::string ranking_csv(const std::vector<TrialRecord>& ranked) {
  std::string out = "rank,trial,status,best_val_auroc,best_epoch,epochs_run\n";
  for (size_t r = 0; r < ranked.size(); ++r) {
    const auto& t = ranked[r];
    out += std::to_string(r + 1) + ',' + std::to_string(t.index) + ',' + (t.failed ? "failed" : "ok") + ',' +
           io::format_double(t.best_val_auroc) + ',' + std::to_string(t.best_epoch) + ',' +
           std::to_string(t.epochs_run) + '\n';
  }
  return out;
}

namespace {

std::vector<TrialRecord> read_log(const std::filesystem::path& path) {
  std::vector<TrialRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    try {
      out.push_back(trial_from_json_line(line));
    } catch (const DataError&) {
      // a torn final line from an interrupted run; that trial reruns
    }
  }
  return out;
}

}  // namespace

SearchResult run_search(const std::vector<SampleRecord>& records, const std::vector<FeatureMatrix>& sets,
                        const Split& split, const TrainConfig& base, const SearchOptions& options) {
  if (options.n_trials == 0) throw std::invalid_argument("search needs at least one trial");
  std::vector<std::optional<TrialRecord>> trials(options.n_trials);
  if (options.resume && options.log_path) {
    for (auto& t : read_log(*options.log_path)) {
      if (t.index < trials.size() && t.trial_seed == mix_seed(options.seed, t.index)) trials[t.index] = t;
    }
  }
  std::vector<size_t> todo;
  for (size_t i = 0; i < trials.size(); ++i) {
    if (!trials[i]) todo.push_back(i);
  }

  std::mutex mu;
  std::optional<std::ofstream> log;
  if (options.log_path) {
    log.emplace(*options.log_path, options.resume ? std::ios::app : std::ios::trunc);
    if (!*log) throw DataError("cannot open trial log " + options.log_path->string());
  }
  std::optional<TrialRecord> best_trial;
  std::optional<Checkpoint> best_checkpoint;

  std::atomic<size_t> next{0};
  std::exception_ptr fatal;
  auto worker = [&] {
    for (size_t k = next++; k < todo.size(); k = next++) {
      const size_t i = todo[k];
      TrialRecord t;
      t.index = i;
      t.trial_seed = mix_seed(options.seed, i);
      t.config = options.sampler(t.trial_seed, base);
      std::optional<Checkpoint> ck;
      try {
        FitResult fit = fit_pipeline(records, sets, split, t.config);
        t.best_val_auroc = fit.history.best_val_auroc;
        t.best_epoch = fit.history.best_epoch;
        t.epochs_run = static_cast<int>(fit.history.epochs.size());
        ck = std::move(fit.checkpoint);
      } catch (const NumericalError& e) {
        t.failed = true;
        t.error = e.what();
      } catch (const DataError& e) {
        t.failed = true;
        t.error = e.what();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!fatal) fatal = std::current_exception();
        next = todo.size();
        return;
      }
      std::lock_guard lock(mu);
      if (log) {
        *log << trial_to_json_line(t) << '\n';
        log->flush();
      }
      if (!t.failed && (!best_trial || ranks_before(t, *best_trial))) {
        best_trial = t;
        best_checkpoint = std::move(ck);
      }
      trials[i] = std::move(t);
    }
  };
  const size_t n_threads = std::min(thread_limit(options.max_threads), std::max<size_t>(1, todo.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < n_threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  SearchResult result;
  for (auto& t : trials) result.ranked.push_back(std::move(*t));
  std::sort(result.ranked.begin(), result.ranked.end(), ranks_before);
  const auto& top = result.ranked.front();
  if (!top.failed) {
    if (best_trial && best_trial->index == top.index) {
      result.best = std::move(best_checkpoint);
    } else {
      // The winner came from a resumed log; training is deterministic, so rerun it.
      result.best = fit_pipeline(records, sets, split, top.config).checkpoint;
    }
  }
  return result;
}

}  // namespace pangram
