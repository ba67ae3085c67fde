#include "pangram/checkpoint.hpp"

#include "pangram/errors.hpp"
#include "pangram/io.hpp"

#include <json.hpp>

namespace pangram {

using ojson = nlohmann::ordered_json;

std::string checkpoint_to_json(const Checkpoint& c) {
  const auto& spec = c.model.spec;
  ojson j;
  j["format"] = "pangram-fusion-checkpoint";
  j["version"] = kCheckpointVersion;
  j["model"] = {{"kind", to_string(spec.kind)},
                {"head", to_string(spec.head)},
                {"input_dims", spec.input_dims},
                {"hidden", spec.hidden},
                {"shared_dim", spec.shared_dim},
                {"renormalize", spec.renormalize},
                {"rec_metric", to_string(spec.rec_metric)},
                {"loss_weights", {{"pred", spec.weights.pred}, {"cos", spec.weights.cos}, {"rec", spec.weights.rec}}}};
  j["seed"] = c.config.seed;
  j["feature_sets"] = c.feature_sets;
  j["preprocess"] = ojson::array();
  for (const auto& p : c.plans) j["preprocess"].push_back(ojson::parse(preprocess::plan_to_json(p)));
  j["config"] = ojson::parse(config_to_json(c.config));
  j["split"] = ojson::parse(split_to_json(c.split));
  j["selection"] = {{"best_epoch", c.best_epoch},
                    {"best_val_auroc", c.best_val_auroc},
                    {"selected_on_train", c.selected_on_train}};
  j["params"] = ojson::array();
  for (const auto& p : c.model.params) {
    std::vector<double> values;
    values.reserve(static_cast<size_t>(p.value.size()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index col = 0; col < p.value.cols(); ++col) values.push_back(p.value(r, col));
    }
    j["params"].push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"values", values}});
  }
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "pangram-fusion-checkpoint") throw DataError("not a checkpoint file");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint c;
    const auto& m = j.at("model");
    ModelSpec spec;
    spec.kind = parse_model_kind(m.at("kind").get<std::string>());
    spec.head = parse_head_kind(m.at("head").get<std::string>());
    spec.input_dims = m.at("input_dims").get<std::vector<size_t>>();
    spec.hidden = m.at("hidden").get<size_t>();
    spec.shared_dim = m.at("shared_dim").get<size_t>();
    spec.renormalize = m.at("renormalize").get<bool>();
    spec.rec_metric = parse_rec_metric(m.at("rec_metric").get<std::string>());
    const auto& w = m.at("loss_weights");
    spec.weights = {w.at("pred").get<double>(), w.at("cos").get<double>(), w.at("rec").get<double>()};

    // Build the layout from the spec, then fill values by name.
    c.model = init_model(spec, 0);
    const auto& params = j.at("params");
    if (params.size() != c.model.params.size()) throw DataError("checkpoint parameter count does not match the model");
    for (const auto& p : params) {
      auto& value = c.model.at(p.at("name").get<std::string>());
      const auto shape = p.at("shape").get<std::vector<Eigen::Index>>();
      const auto values = p.at("values").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != value.rows() || shape[1] != value.cols() ||
          values.size() != static_cast<size_t>(value.size())) {
        throw DataError("checkpoint array '" + p.at("name").get<std::string>() + "' has the wrong shape");
      }
      size_t k = 0;
      for (Eigen::Index r = 0; r < value.rows(); ++r) {
        for (Eigen::Index col = 0; col < value.cols(); ++col) value(r, col) = values[k++];
      }
    }
    c.feature_sets = j.at("feature_sets").get<std::vector<std::string>>();
    for (const auto& p : j.at("preprocess")) c.plans.push_back(preprocess::plan_from_json(p.dump()));
    if (c.plans.size() != spec.input_dims.size()) throw DataError("checkpoint needs one preprocess plan per input");
    c.config = config_from_json(j.at("config").dump());
    c.split = split_from_json(j.at("split").dump());
    const auto& sel = j.at("selection");
    c.best_epoch = sel.at("best_epoch").get<int>();
    c.best_val_auroc = sel.at("best_val_auroc").get<double>();
    c.selected_on_train = sel.at("selected_on_train").get<bool>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(io::read_file(path)); }

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  io::write_file_atomic(path, checkpoint_to_json(c));
}

}  // namespace pangram
