#include "pangram/pipeline.hpp"

#include "pangram/errors.hpp"

#include <algorithm>

namespace pangram {

namespace {

std::vector<std::string> ids_of(const std::vector<SampleRecord>& records) {
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.sample_id);
  return ids;
}

LabeledBatch transform_all(const std::vector<preprocess::PreprocessPlan>& plans, const Batch& raw,
                           std::vector<int> labels) {
  LabeledBatch out;
  for (size_t i = 0; i < raw.size(); ++i) out.x.push_back(plans[i].transform(raw[i]));
  out.y = std::move(labels);
  return out;
}

}  // namespace

Batch raw_inputs(ModelKind kind, const std::vector<FeatureMatrix>& sets, const std::vector<SampleRecord>& records) {
  if (sets.empty()) throw DataError("no feature sets given");
  const auto ids = ids_of(records);
  Batch out;
  if (kind == ModelKind::classifier) {
    out.push_back(sets.size() == 1 ? sets[0].select(ids).values : concat_features(sets, ids).values);
  } else {
    for (const auto& s : sets) out.push_back(s.select(ids).values);
  }
  return out;
}

std::vector<int> labels_of(const std::vector<SampleRecord>& records) {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.is_pd() ? 1 : 0);
  return y;
}

ModelSpec spec_for(const TrainConfig& config, const std::vector<size_t>& input_dims) {
  ModelSpec spec;
  spec.kind = config.architecture;
  spec.head = config.model;
  spec.input_dims = input_dims;
  spec.hidden = config.hidden_units;
  spec.shared_dim = config.shared_dim;
  spec.renormalize = config.renormalize;
  spec.rec_metric = config.rec_metric;
  spec.weights = config.loss_weights;
  const double sum = spec.weights.pred + spec.weights.cos + spec.weights.rec;
  if (config.normalize_loss_weights && sum > 0.0) {
    spec.weights = {spec.weights.pred / sum, spec.weights.cos / sum, spec.weights.rec / sum};
  }
  return spec;
}

FitResult fit_pipeline(const std::vector<SampleRecord>& records, const std::vector<FeatureMatrix>& sets,
                       const Split& split, const TrainConfig& config) {
  check_config(config);
  if (config.architecture == ModelKind::projection_fusion && sets.size() != 2) {
    throw DataError("projection fusion needs exactly two feature sets (source, target)");
  }
  const auto train_records = records_in(records, split.train);
  const auto val_records = records_in(records, split.validation);
  if (train_records.empty()) throw DataError("no training samples in the split");

  const Batch raw_train = raw_inputs(config.architecture, sets, train_records);
  preprocess::PlanOptions options;
  options.drop_correlated = config.drop_correlated;
  options.corr_threshold = config.corr_thr;
  options.scaler = config.effective_scaler();
  options.resample = {config.minority_oversample, 5};
  options.seed = config.random_state;

  Checkpoint ck;
  for (const auto& s : sets) ck.feature_sets.push_back(s.set_name);
  std::vector<size_t> dims;
  for (const auto& m : raw_train) {
    ck.plans.push_back(preprocess::fit_plan(m, options));
    dims.push_back(ck.plans.back().kept_columns.size());
  }
  LabeledBatch train = transform_all(ck.plans, raw_train, labels_of(train_records));
  LabeledBatch validation;
  if (!val_records.empty()) {
    validation = transform_all(ck.plans, raw_inputs(config.architecture, sets, val_records), labels_of(val_records));
  }

  // Resample on the joined inputs so every modality keeps its row pairing.
  if (options.resample.kind != preprocess::ResampleKind::none) {
    Eigen::Index width = 0;
    for (const auto& m : train.x) width += m.cols();
    Eigen::MatrixXd joined(static_cast<Eigen::Index>(train.size()), width);
    Eigen::Index col = 0;
    for (const auto& m : train.x) {
      joined.middleCols(col, m.cols()) = m;
      col += m.cols();
    }
    auto res = preprocess::resample(joined, train.y, options.resample, config.random_state);
    col = 0;
    for (auto& m : train.x) {
      const Eigen::Index w = m.cols();
      m = res.x.middleCols(col, w);
      col += w;
    }
    train.y = std::move(res.labels);
  }

  const ModelSpec spec = spec_for(config, dims);
  TrainResult tr = train_model(spec, train, validation, config);
  ck.model = std::move(tr.best);
  ck.config = config;
  ck.split = split;
  ck.best_epoch = tr.history.best_epoch;
  ck.best_val_auroc = tr.history.best_val_auroc;
  ck.selected_on_train = tr.history.selected_on_train;
  return {std::move(ck), std::move(tr.history)};
}

Scored score_records(const Checkpoint& checkpoint, const std::vector<SampleRecord>& records,
                     const std::vector<FeatureMatrix>& sets) {
  std::vector<FeatureMatrix> ordered;
  for (const auto& name : checkpoint.feature_sets) {
    const auto it = std::find_if(sets.begin(), sets.end(), [&](const FeatureMatrix& s) { return s.set_name == name; });
    if (it == sets.end()) throw DataError("checkpoint needs feature set '" + name + "'");
    ordered.push_back(*it);
  }
  Scored s;
  s.records = records;
  s.labels = labels_of(records);
  if (records.empty()) return s;
  const LabeledBatch data =
      transform_all(checkpoint.plans, raw_inputs(checkpoint.model.spec.kind, ordered, records), s.labels);
  const Eigen::VectorXd p = predict(checkpoint.model, data.x);
  s.scores.assign(p.data(), p.data() + p.size());
  return s;
}

metrics::EvalReport evaluate_scores(const Scored& s, double threshold) {
  return metrics::confusion_and_rates(s.scores, s.labels, threshold);
}

}  // namespace pangram
