#include "pangram/config.hpp"

#include "pangram/errors.hpp"

#include <cmath>
#include <functional>
#include <map>

#include <json.hpp>

namespace pangram {

using nlohmann::json;
using preprocess::ResampleKind;
using preprocess::ScalerKind;

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "SGD" : "AdamW"; }

std::string to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::none: return "none";
    case SchedulerKind::step: return "step";
    case SchedulerKind::reduce: return "reduce";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "SGD" || s == "sgd") return OptimizerKind::sgd;
  if (s == "AdamW" || s == "adamw") return OptimizerKind::adamw;
  throw DataError("unknown optimizer '" + s + "'");
}

SchedulerKind parse_scheduler(const std::string& s) {
  if (s == "none") return SchedulerKind::none;
  if (s == "step") return SchedulerKind::step;
  if (s == "reduce") return SchedulerKind::reduce;
  throw DataError("unknown scheduler '" + s + "'");
}

TrainConfig reference_best_config() {
  TrainConfig c;
  c.batch_size = 128;
  c.beta1 = 0.9084719350261068;
  c.beta2 = 0.9940871758715644;
  c.corr_thr = 0.85;
  c.drop_correlated = true;
  c.gamma = 0.6033860204614545;
  c.learning_rate = 0.3674643450313223;
  c.minority_oversample = ResampleKind::none;
  c.model = HeadKind::ann;
  c.momentum = 0.8075456327084843;
  c.num_epochs = 86;
  c.optimizer = OptimizerKind::sgd;
  c.patience = 5;
  c.random_state = 621;
  c.scaling_method = ScalerKind::minmax;
  c.scheduler = SchedulerKind::reduce;
  c.seed = 191;
  c.step_size = 17;
  c.use_feature_scaling = true;
  c.use_scheduler = false;
  c.loss_weights = {87.0, 68.0, 48.0};
  c.architecture = ModelKind::projection_fusion;
  return c;
}

void check_config(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw DataError("invalid config: " + what); };
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (c.num_epochs < 1) fail("num_epochs must be >= 1");
  if (c.step_size < 1) fail("step_size must be >= 1");
  if (c.patience < 1) fail("patience must be >= 1");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) fail("learning_rate must be positive");
  if (!(c.momentum >= 0.0) || !std::isfinite(c.momentum)) fail("momentum must be non-negative");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0)) fail("betas must lie in [0, 1)");
  if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) fail("gamma must be positive");
  if (!(c.corr_thr > 0.0 && c.corr_thr <= 1.0)) fail("corr_thr must lie in (0, 1]");
  for (double w : {c.loss_weights.pred, c.loss_weights.cos, c.loss_weights.rec}) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail("loss weights must be finite and non-negative");
  }
  if (c.hidden_units < 1) fail("hidden_units must be >= 1");
  if (c.shared_dim < 1) fail("shared_dim must be >= 1");
}

std::vector<std::string> search_space_violations(const TrainConfig& c) {
  std::vector<std::string> out;
  auto within = [&](const char* name, double v, double lo, double hi) {
    if (!(v >= lo && v <= hi)) out.push_back(std::string(name) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  };
  if (c.batch_size != 128 && c.batch_size != 256 && c.batch_size != 512 && c.batch_size != 1024) {
    out.push_back("batch_size not in {128, 256, 512, 1024}");
  }
  within("beta1", c.beta1, 0.9, 0.99);
  within("beta2", c.beta2, 0.99, 0.9999);
  if (c.corr_thr != 0.8 && c.corr_thr != 0.85 && c.corr_thr != 0.9 && c.corr_thr != 0.95) {
    out.push_back("corr_thr not in {0.8, 0.85, 0.9, 0.95}");
  }
  within("gamma", c.gamma, 0.5, 0.95);
  within("learning_rate", c.learning_rate, 0.05, 0.8);
  if (c.minority_oversample != ResampleKind::none && c.minority_oversample != ResampleKind::smote) {
    out.push_back("minority_oversample not yes/no");
  }
  within("momentum", c.momentum, 0.1, 1.0);
  within("num_epochs", c.num_epochs, 2, 500);
  within("patience", c.patience, 1, 5);
  within("random_state", static_cast<double>(c.random_state), 100, 999);
  within("seed", static_cast<double>(c.seed), 100, 999);
  within("step_size", c.step_size, 1, 30);
  if (c.scaling_method == ScalerKind::none) out.push_back("scaling_method not Standard/MinMax");
  if (c.scheduler == SchedulerKind::none) out.push_back("scheduler not step/reduce");
  within("weight_pred", c.loss_weights.pred, 0, 100);
  within("weight_cos", c.loss_weights.cos, 0, 100);
  within("weight_rec", c.loss_weights.rec, 0, 100);
  for (double w : {c.loss_weights.pred, c.loss_weights.cos, c.loss_weights.rec}) {
    if (w != std::floor(w)) out.push_back("loss weights must be integers");
  }
  return out;
}

namespace {

std::string yes_no(bool b) { return b ? "yes" : "no"; }

bool parse_flag(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "yes") return true;
    if (s == "no") return false;
  }
  throw DataError("config field '" + key + "' must be \"yes\" or \"no\"");
}

std::string scaler_name(ScalerKind k) {
  switch (k) {
    case ScalerKind::none: return "none";
    case ScalerKind::zscore: return "StandardScaler";
    case ScalerKind::minmax: return "MinMaxScaler";
  }
  return "?";
}

std::string oversample_name(ResampleKind k) {
  if (k == ResampleKind::none) return "no";
  if (k == ResampleKind::smote) return "yes";
  return preprocess::to_string(k);
}

ResampleKind parse_oversample(const std::string& s) {
  if (s == "no") return ResampleKind::none;
  if (s == "yes") return ResampleKind::smote;
  return preprocess::parse_resample(s);
}

}  // namespace

std::string config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["batch_size"] = c.batch_size;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["corr_thr"] = c.corr_thr;
  j["drop_correlated"] = yes_no(c.drop_correlated);
  j["gamma"] = c.gamma;
  j["learning_rate"] = c.learning_rate;
  j["minority_oversample"] = oversample_name(c.minority_oversample);
  j["model"] = to_string(c.model);
  j["momentum"] = c.momentum;
  j["num_epochs"] = c.num_epochs;
  j["optimizer"] = to_string(c.optimizer);
  j["patience"] = c.patience;
  j["random_state"] = c.random_state;
  j["scaling_method"] = scaler_name(c.scaling_method);
  j["scheduler"] = to_string(c.scheduler);
  j["seed"] = c.seed;
  j["step_size"] = c.step_size;
  j["use_feature_scaling"] = yes_no(c.use_feature_scaling);
  j["use_scheduler"] = yes_no(c.use_scheduler);
  j["weight_cos"] = c.loss_weights.cos;
  j["weight_pred"] = c.loss_weights.pred;
  j["weight_rec"] = c.loss_weights.rec;
  j["architecture"] = to_string(c.architecture);
  j["rec_metric"] = to_string(c.rec_metric);
  j["renormalize"] = yes_no(c.renormalize);
  j["hidden_units"] = c.hidden_units;
  j["shared_dim"] = c.shared_dim;
  j["normalize_loss_weights"] = yes_no(c.normalize_loss_weights);
  return j.dump(2);
}

TrainConfig config_from_json(const std::string& text, TrainConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("config must be a JSON object");

  auto str = [](const json& v, const std::string& k) {
    if (!v.is_string()) throw DataError("config field '" + k + "' must be a string");
    return v.get<std::string>();
  };
  auto num = [](const json& v, const std::string& k) {
    if (!v.is_number()) throw DataError("config field '" + k + "' must be a number");
    return v.get<double>();
  };
  auto integer = [&](const json& v, const std::string& k) {
    const double d = num(v, k);
    if (d != std::floor(d)) throw DataError("config field '" + k + "' must be an integer");
    return static_cast<long long>(d);
  };
  auto natural = [&](const json& v, const std::string& k) {
    const long long n = integer(v, k);
    if (n < 0) throw DataError("config field '" + k + "' must be non-negative");
    return static_cast<uint64_t>(n);
  };

  const std::map<std::string, std::function<void(const json&, const std::string&)>> fields = {
      {"batch_size", [&](const json& v, const std::string& k) { c.batch_size = static_cast<int>(integer(v, k)); }},
      {"beta1", [&](const json& v, const std::string& k) { c.beta1 = num(v, k); }},
      {"beta2", [&](const json& v, const std::string& k) { c.beta2 = num(v, k); }},
      {"corr_thr", [&](const json& v, const std::string& k) { c.corr_thr = num(v, k); }},
      {"drop_correlated", [&](const json& v, const std::string& k) { c.drop_correlated = parse_flag(v, k); }},
      {"gamma", [&](const json& v, const std::string& k) { c.gamma = num(v, k); }},
      {"learning_rate", [&](const json& v, const std::string& k) { c.learning_rate = num(v, k); }},
      {"minority_oversample",
       [&](const json& v, const std::string& k) {
         c.minority_oversample = v.is_boolean() ? (v.get<bool>() ? ResampleKind::smote : ResampleKind::none)
                                                : parse_oversample(str(v, k));
       }},
      {"model", [&](const json& v, const std::string& k) { c.model = parse_head_kind(str(v, k)); }},
      {"momentum", [&](const json& v, const std::string& k) { c.momentum = num(v, k); }},
      {"num_epochs", [&](const json& v, const std::string& k) { c.num_epochs = static_cast<int>(integer(v, k)); }},
      {"optimizer", [&](const json& v, const std::string& k) { c.optimizer = parse_optimizer(str(v, k)); }},
      {"patience", [&](const json& v, const std::string& k) { c.patience = static_cast<int>(integer(v, k)); }},
      {"random_state", [&](const json& v, const std::string& k) { c.random_state = natural(v, k); }},
      {"scaling_method", [&](const json& v, const std::string& k) { c.scaling_method = preprocess::parse_scaler(str(v, k)); }},
      {"scheduler", [&](const json& v, const std::string& k) { c.scheduler = parse_scheduler(str(v, k)); }},
      {"seed", [&](const json& v, const std::string& k) { c.seed = natural(v, k); }},
      {"step_size", [&](const json& v, const std::string& k) { c.step_size = static_cast<int>(integer(v, k)); }},
      {"use_feature_scaling", [&](const json& v, const std::string& k) { c.use_feature_scaling = parse_flag(v, k); }},
      {"use_scheduler", [&](const json& v, const std::string& k) { c.use_scheduler = parse_flag(v, k); }},
      {"weight_cos", [&](const json& v, const std::string& k) { c.loss_weights.cos = num(v, k); }},
      {"weight_pred", [&](const json& v, const std::string& k) { c.loss_weights.pred = num(v, k); }},
      {"weight_rec", [&](const json& v, const std::string& k) { c.loss_weights.rec = num(v, k); }},
      {"architecture", [&](const json& v, const std::string& k) { c.architecture = parse_model_kind(str(v, k)); }},
      {"rec_metric", [&](const json& v, const std::string& k) { c.rec_metric = parse_rec_metric(str(v, k)); }},
      {"renormalize", [&](const json& v, const std::string& k) { c.renormalize = parse_flag(v, k); }},
      {"hidden_units", [&](const json& v, const std::string& k) { c.hidden_units = natural(v, k); }},
      {"shared_dim", [&](const json& v, const std::string& k) { c.shared_dim = natural(v, k); }},
      {"normalize_loss_weights",
       [&](const json& v, const std::string& k) { c.normalize_loss_weights = parse_flag(v, k); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw DataError("unknown config field '" + key + "'");
    it->second(value, key);
  }
  return c;
}

}  // namespace pangram
