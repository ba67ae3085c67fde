// pangram-fusion: command-line driver for the PD speech screening pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pangram/acoustic.hpp"
#include "pangram/checkpoint.hpp"
#include "pangram/config.hpp"
#include "pangram/dataset.hpp"
#include "pangram/error_analysis.hpp"
#include "pangram/errors.hpp"
#include "pangram/hypertune.hpp"
#include "pangram/io.hpp"
#include "pangram/metrics.hpp"
#include "pangram/pipeline.hpp"
#include "pangram/stats.hpp"
#include "pangram/synth.hpp"
#include "pangram/wav.hpp"

namespace fs = std::filesystem;
using namespace pangram;

namespace {

struct Options {
  std::string manifest;
  std::vector<std::string> features;
  std::string config;
  std::string out = ".";
  std::optional<uint64_t> seed;
  double threshold = 0.5;
  size_t trials = 20;
  int k = 5;
  std::string checkpoint;
  std::string scores;
  std::string in;
  std::string split = "test";
  size_t threads = 1;
  bool resume = false;
  double alpha = 0.05;
  int max_depth = 4;
  size_t min_leaf = 10;
  size_t bins = 8;
  SynthSpec synth;
};

std::vector<SampleRecord> manifest_records(const Options& o) {
  if (o.manifest.empty()) throw DataError("--manifest is required");
  return deduplicate(load_manifest(o.manifest));
}

std::vector<FeatureMatrix> feature_sets(const Options& o) {
  if (o.features.empty()) throw DataError("at least one --features name=path is required");
  std::vector<FeatureMatrix> sets;
  for (const auto& spec : o.features) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw CLI::ValidationError("--features", "expected name=path, got '" + spec + "'");
    }
    sets.push_back(read_feature_csv(spec.substr(eq + 1), spec.substr(0, eq)));
  }
  return sets;
}

// The published best hyperparameters, with the loss weights rescaled to sum
// to 1; taken literally they diverge under SGD at that learning rate.
TrainConfig train_config(const Options& o) {
  TrainConfig c = reference_best_config();
  c.normalize_loss_weights = true;
  if (!o.config.empty()) c = config_from_json(io::read_file(o.config), c);
  check_config(c);
  return c;
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

std::string scores_csv(const Scored& s, double threshold) {
  std::string out = "sample_id,participant_id,label,score,predicted,correct\n";
  for (size_t i = 0; i < s.records.size(); ++i) {
    const int pred = s.scores[i] >= threshold ? 1 : 0;
    out += io::csv_field(s.records[i].sample_id) + ',' + io::csv_field(s.records[i].participant_id) + ',' +
           std::to_string(s.labels[i]) + ',' + io::format_double(s.scores[i]) + ',' + std::to_string(pred) + ',' +
           std::to_string(pred == s.labels[i] ? 1 : 0) + '\n';
  }
  return out;
}

// Records and correctness flags for the samples listed in a scores file.
std::pair<std::vector<SampleRecord>, std::vector<bool>> scored_records(const Options& o) {
  if (o.scores.empty()) throw DataError("--scores is required");
  const auto records = manifest_records(o);
  std::map<std::string, bool> correct;
  const std::string text = io::read_file(o.scores);
  size_t pos = 0, line_no = 0;
  size_t id_col = 0, correct_col = 0;
  while (pos < text.size()) {
    const size_t end = std::min(text.find('\n', pos), text.size());
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (io::trim(line).empty()) continue;
    const auto cells = io::split_csv_line(line);
    if (line_no++ == 0) {
      const auto find = [&](const char* name) {
        const auto it = std::find(cells.begin(), cells.end(), name);
        if (it == cells.end()) throw DataError(o.scores + ": missing column '" + name + "'");
        return static_cast<size_t>(it - cells.begin());
      };
      id_col = find("sample_id");
      correct_col = find("correct");
      continue;
    }
    if (cells.size() <= std::max(id_col, correct_col)) throw DataError(o.scores + ": short row " + std::to_string(line_no - 1));
    correct[cells[id_col]] = io::parse_int(cells[correct_col]) != 0;
  }
  std::vector<SampleRecord> kept;
  std::vector<bool> flags;
  for (const auto& r : records) {
    const auto it = correct.find(r.sample_id);
    if (it == correct.end()) continue;
    kept.push_back(r);
    flags.push_back(it->second);
  }
  if (kept.size() != correct.size()) throw DataError("scores file lists samples that are not in the manifest");
  return {kept, flags};
}

int cmd_extract(const Options& o) {
  std::vector<std::pair<std::string, fs::path>> clips;
  if (!o.manifest.empty()) {
    const fs::path base = fs::path(o.manifest).parent_path();
    for (const auto& r : manifest_records(o)) {
      const fs::path p(r.audio_path);
      clips.emplace_back(r.sample_id, p.is_absolute() ? p : base / p);
    }
  } else {
    if (o.in.empty()) throw DataError("extract needs --in <wav dir> or --manifest");
    for (const auto& e : fs::directory_iterator(o.in)) {
      if (e.is_regular_file() && io::to_lower(e.path().extension().string()) == ".wav") {
        clips.emplace_back(e.path().stem().string(), e.path());
      }
    }
    std::sort(clips.begin(), clips.end());
  }
  if (clips.empty()) throw DataError("no audio clips found");
  FeatureMatrix m;
  m.set_name = "acoustic";
  const auto& names = acoustic::acoustic_column_names();
  m.column_names.assign(names.begin(), names.end());
  m.values.resize(static_cast<Eigen::Index>(clips.size()), static_cast<Eigen::Index>(acoustic::kAcousticDim));
  for (size_t i = 0; i < clips.size(); ++i) {
    try {
      const auto v = acoustic::assemble_acoustic_vector(read_wav(clips[i].second));
      m.sample_ids.push_back(clips[i].first);
      for (size_t j = 0; j < acoustic::kAcousticDim; ++j) m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v.values[j];
    } catch (const DataError& e) {
      throw DataError(clips[i].second.string() + ": " + e.what());
    }
  }
  const fs::path dir = out_dir(o);
  write_feature_csv(dir / "acoustic.csv", m);
  std::cout << "extracted " << clips.size() << " clips to " << (dir / "acoustic.csv").string() << '\n';
  return 0;
}

int cmd_preprocess(const Options& o) {
  const auto records = manifest_records(o);
  const auto sets = feature_sets(o);
  const TrainConfig c = train_config(o);
  const Split split = split_participants(records, {}, o.seed.value_or(0));
  const auto train = records_in(records, split.train);
  std::vector<std::string> train_ids, all_ids;
  for (const auto& r : train) train_ids.push_back(r.sample_id);
  for (const auto& r : records) all_ids.push_back(r.sample_id);

  preprocess::PlanOptions opts;
  opts.drop_correlated = c.drop_correlated;
  opts.corr_threshold = c.corr_thr;
  opts.scaler = c.effective_scaler();
  opts.resample = {c.minority_oversample, 5};
  opts.seed = c.random_state;
  const fs::path dir = out_dir(o);
  for (const auto& s : sets) {
    const auto plan = preprocess::fit_plan(s.select(train_ids).values, opts);
    const FeatureMatrix all = s.select(all_ids);
    FeatureMatrix t;
    t.set_name = s.set_name;
    t.sample_ids = all.sample_ids;
    for (size_t k : plan.kept_columns) t.column_names.push_back(s.column_names[k]);
    t.values = plan.transform(all.values);
    io::write_file_atomic(dir / (s.set_name + ".plan.json"), preprocess::plan_to_json(plan) + "\n");
    write_feature_csv(dir / (s.set_name + ".csv"), t);
    std::cout << s.set_name << ": kept " << plan.kept_columns.size() << " of " << s.dim() << " columns\n";
  }
  io::write_file_atomic(dir / "split.json", split_to_json(split));
  return 0;
}

int cmd_train(const Options& o) {
  const auto records = manifest_records(o);
  const auto sets = feature_sets(o);
  const TrainConfig c = train_config(o);
  const Split split = split_participants(records, {}, o.seed.value_or(0));
  const FitResult fit = fit_pipeline(records, sets, split, c);
  const fs::path dir = out_dir(o);
  save_checkpoint(dir / "checkpoint.json", fit.checkpoint);
  io::write_file_atomic(dir / "history.csv", history_csv(fit.history));
  io::write_file_atomic(dir / "split.json", split_to_json(split));
  std::cout << "best epoch " << fit.history.best_epoch << " of " << fit.history.epochs.size()
            << (fit.history.selected_on_train ? ", train AUROC " : ", validation AUROC ")
            << fit.history.best_val_auroc << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  if (o.checkpoint.empty()) throw DataError("--checkpoint is required");
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const auto records = manifest_records(o);
  const auto sets = feature_sets(o);
  std::vector<SampleRecord> chosen;
  if (o.split == "all") chosen = records;
  else if (o.split == "test") chosen = records_in(records, ck.split.test);
  else if (o.split == "validation") chosen = records_in(records, ck.split.validation);
  else if (o.split == "train") chosen = records_in(records, ck.split.train);
  else throw CLI::ValidationError("--split", "expected test, validation, train or all");
  if (chosen.empty()) throw DataError("no samples in the selected split");

  const Scored s = score_records(ck, chosen, sets);
  const auto report = evaluate_scores(s, o.threshold);
  const fs::path dir = out_dir(o);
  io::write_file_atomic(dir / "report.json", metrics::report_to_json(report));
  io::write_file_atomic(dir / "roc.csv", metrics::roc_csv(report.roc_points));
  io::write_file_atomic(dir / "confusion.csv", metrics::confusion_csv(report));
  io::write_file_atomic(dir / "scores.csv", scores_csv(s, o.threshold));
  std::cout << "samples " << report.total() << ", accuracy " << report.accuracy;
  if (report.auroc) std::cout << ", AUROC " << *report.auroc;
  std::cout << '\n';
  return 0;
}

int cmd_bias(const Options& o) {
  const auto [records, correct] = scored_records(o);
  const auto report = stats::subgroup_bias_report(records, correct, o.alpha);
  const fs::path dir = out_dir(o);
  io::write_file_atomic(dir / "bias.csv", stats::bias_report_csv(report));
  nlohmann::ordered_json j;
  j["alpha"] = report.alpha;
  j["corrected_alpha"] = report.corrected_alpha;
  j["duration_n"] = report.duration_n;
  if (report.duration) {
    j["duration_spearman_rho"] = report.duration->rho;
    j["duration_spearman_p"] = report.duration->p;
  }
  io::write_file_atomic(dir / "bias_summary.json", j.dump(2) + "\n");
  for (const auto& r : report.rows) {
    std::cout << r.property << ": " << r.group_a << " vs " << r.group_b << " p=";
    if (r.p) std::cout << *r.p << (r.significant ? " significant" : "");
    else std::cout << "n/a";
    std::cout << '\n';
  }
  return 0;
}

int cmd_error_tree(const Options& o) {
  const auto [records, correct] = scored_records(o);
  const auto samples = error_samples(records, correct);
  const auto tree = build_error_tree(samples, {o.max_depth, o.min_leaf});
  const fs::path dir = out_dir(o);
  io::write_file_atomic(dir / "tree.json", tree_to_json(tree));
  io::write_file_atomic(dir / "tree.txt", tree_to_text(tree));
  const std::pair<Attribute, Attribute> pairs[] = {{Attribute::age, Attribute::sex},
                                                   {Attribute::age, Attribute::ethnicity},
                                                   {Attribute::sex, Attribute::ethnicity},
                                                   {Attribute::cohort, Attribute::label}};
  for (const auto& [a, b] : pairs) {
    const auto cells = heatmap_matrix(samples, a, b, o.bins);
    io::write_file_atomic(dir / ("heatmap_" + to_string(a) + "_" + to_string(b) + ".csv"), heatmap_csv(cells, a, b));
  }
  std::cout << tree_to_text(tree);
  return 0;
}

int cmd_tune(const Options& o) {
  const auto records = manifest_records(o);
  const auto sets = feature_sets(o);
  const TrainConfig base = train_config(o);
  const Split split = split_participants(records, {}, o.seed.value_or(0));
  const fs::path dir = out_dir(o);
  SearchOptions so;
  so.n_trials = o.trials;
  so.seed = o.seed.value_or(0);
  so.max_threads = o.threads;
  so.log_path = dir / "trials.jsonl";
  so.resume = o.resume;
  const SearchResult res = run_search(records, sets, split, base, so);
  io::write_file_atomic(dir / "ranking.csv", ranking_csv(res.ranked));
  if (res.best) {
    save_checkpoint(dir / "best_checkpoint.json", *res.best);
    io::write_file_atomic(dir / "best_config.json", config_to_json(res.best->config) + "\n");
  }
  const auto& top = res.ranked.front();
  if (top.failed) {
    std::cerr << "every trial failed\n";
    return 3;
  }
  std::cout << "best trial " << top.index << ": validation AUROC " << top.best_val_auroc << '\n';
  return 0;
}

int cmd_synth(const Options& o) {
  SynthSpec spec = o.synth;
  spec.seed = o.seed.value_or(0);
  try {
    check_synth_spec(spec);
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("synth", e.what());
  }
  const SynthData data = generate(spec);
  write_synth(out_dir(o), data);
  std::cout << "wrote " << data.records.size() << " samples for " << spec.n_participants << " participants\n";
  return 0;
}

int cmd_crossval(const Options& o) {
  const auto records = manifest_records(o);
  const auto sets = feature_sets(o);
  const TrainConfig c = train_config(o);
  const auto folds = kfold_participants(records, o.k, o.seed.value_or(0));
  const fs::path dir = out_dir(o);
  std::string table = "fold,n_test,auroc,accuracy,sensitivity,specificity,ppv,npv\n";
  Scored pooled;
  std::vector<double> aurocs;
  auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
  for (size_t f = 0; f < folds.size(); ++f) {
    const FitResult fit = fit_pipeline(records, sets, folds[f], c);
    const Scored s = score_records(fit.checkpoint, records_in(records, folds[f].test), sets);
    const auto r = evaluate_scores(s, o.threshold);
    if (r.auroc) aurocs.push_back(*r.auroc);
    table += std::to_string(f + 1) + ',' + std::to_string(r.total()) + ',' + opt(r.auroc) + ',' +
             io::format_double(r.accuracy) + ',' + opt(r.sensitivity) + ',' + opt(r.specificity) + ',' + opt(r.ppv) +
             ',' + opt(r.npv) + '\n';
    pooled.records.insert(pooled.records.end(), s.records.begin(), s.records.end());
    pooled.scores.insert(pooled.scores.end(), s.scores.begin(), s.scores.end());
    pooled.labels.insert(pooled.labels.end(), s.labels.begin(), s.labels.end());
    std::cout << "fold " << f + 1 << ": AUROC " << opt(r.auroc) << '\n';
  }
  io::write_file_atomic(dir / "crossval.csv", table);
  io::write_file_atomic(dir / "oof_scores.csv", scores_csv(pooled, o.threshold));
  nlohmann::ordered_json j;
  j["k"] = o.k;
  if (!aurocs.empty()) {
    const double mean = std::accumulate(aurocs.begin(), aurocs.end(), 0.0) / static_cast<double>(aurocs.size());
    double var = 0.0;
    for (double a : aurocs) var += (a - mean) * (a - mean);
    j["auroc_mean"] = mean;
    j["auroc_std"] = aurocs.size() > 1 ? std::sqrt(var / static_cast<double>(aurocs.size() - 1)) : 0.0;
  }
  j["pooled"] = nlohmann::ordered_json::parse(metrics::report_to_json(evaluate_scores(pooled, o.threshold)));
  io::write_file_atomic(dir / "crossval_summary.json", j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parkinson's disease screening from pangram speech features", "pangram-fusion"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Options o;

  auto manifest = [&](CLI::App* s) { s->add_option("--manifest", o.manifest, "Manifest CSV"); };
  auto features = [&](CLI::App* s) {
    s->add_option("--features", o.features, "Feature CSV as name=path (repeatable; order = model inputs)");
  };
  auto config = [&](CLI::App* s) { s->add_option("--config", o.config, "Training config JSON (overrides the reference config)"); };
  auto out = [&](CLI::App* s) { s->add_option("--out", o.out, "Output directory")->capture_default_str(); };
  auto seed = [&](CLI::App* s, const char* what) { s->add_option("--seed", o.seed, what); };
  auto threshold = [&](CLI::App* s) { s->add_option("--threshold", o.threshold, "Decision threshold")->capture_default_str(); };
  auto scores = [&](CLI::App* s) { s->add_option("--scores", o.scores, "scores.csv written by evaluate")->required(); };

  auto* extract = app.add_subcommand("extract", "WAV clips -> acoustic feature CSV");
  extract->add_option("--in", o.in, "Directory of 16 kHz mono WAV files");
  manifest(extract);
  out(extract);

  auto* pre = app.add_subcommand("preprocess", "Fit preprocessing on the training split and apply it");
  manifest(pre);
  features(pre);
  config(pre);
  out(pre);
  seed(pre, "Split seed");

  auto* train = app.add_subcommand("train", "Train a model; writes checkpoint.json and history.csv");
  manifest(train);
  features(train);
  config(train);
  out(train);
  seed(train, "Split seed");

  auto* evaluate = app.add_subcommand("evaluate", "Score a split with a checkpoint");
  evaluate->add_option("--checkpoint", o.checkpoint, "checkpoint.json")->required();
  manifest(evaluate);
  features(evaluate);
  threshold(evaluate);
  evaluate->add_option("--split", o.split, "test, validation, train or all")->capture_default_str();
  out(evaluate);

  auto* bias = app.add_subcommand("bias-test", "Subgroup accuracy comparison with Fisher exact tests");
  manifest(bias);
  scores(bias);
  bias->add_option("--alpha", o.alpha, "Family-wise significance level")->capture_default_str();
  out(bias);

  auto* tree = app.add_subcommand("error-tree", "Error decision tree and demographic heatmaps");
  manifest(tree);
  scores(tree);
  tree->add_option("--max-depth", o.max_depth, "Tree depth limit")->capture_default_str();
  tree->add_option("--min-leaf", o.min_leaf, "Minimum samples per leaf")->capture_default_str();
  tree->add_option("--bins", o.bins, "Age bins for heatmaps")->capture_default_str();
  out(tree);

  auto* tune = app.add_subcommand("tune", "Random search over the hyperparameter space");
  manifest(tune);
  features(tune);
  config(tune);
  out(tune);
  seed(tune, "Split and search seed");
  tune->add_option("--trials", o.trials, "Number of trials")->capture_default_str();
  tune->add_option("--threads", o.threads, "Concurrent trials (capped by PANGRAM_FUSION_THREADS)")->capture_default_str();
  tune->add_flag("--resume", o.resume, "Skip trials already in trials.jsonl");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  out(synth);
  seed(synth, "Generator seed");
  synth->add_option("--n", o.synth.n_participants, "Participants")->capture_default_str();
  synth->add_option("--pd-fraction", o.synth.pd_fraction, "Fraction of PD participants")->capture_default_str();
  synth->add_option("--delta", o.synth.delta, "Class separation")->capture_default_str();
  synth->add_option("--min-samples", o.synth.min_samples, "Samples per participant, lower bound")->capture_default_str();
  synth->add_option("--max-samples", o.synth.max_samples, "Samples per participant, upper bound")->capture_default_str();

  auto* crossval = app.add_subcommand("crossval", "Stratified participant k-fold cross-validation");
  manifest(crossval);
  features(crossval);
  config(crossval);
  out(crossval);
  seed(crossval, "Fold seed");
  threshold(crossval);
  crossval->add_option("--k", o.k, "Folds")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*extract) return cmd_extract(o);
    if (*pre) return cmd_preprocess(o);
    if (*train) return cmd_train(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*bias) return cmd_bias(o);
    if (*tree) return cmd_error_tree(o);
    if (*tune) return cmd_tune(o);
    if (*synth) return cmd_synth(o);
    if (*crossval) return cmd_crossval(o);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
