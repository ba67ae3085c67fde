#include "pangram/preprocess.hpp"

#include "pangram/errors.hpp"
#include "pangram/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace pangram::preprocess {

std::string to_string(ScalerKind k) {
  switch (k) {
    case ScalerKind::none: return "none";
    case ScalerKind::zscore: return "zscore";
    case ScalerKind::minmax: return "minmax";
  }
  return "?";
}

std::string to_string(ResampleKind k) {
  switch (k) {
    case ResampleKind::none: return "none";
    case ResampleKind::smote: return "smote";
    case ResampleKind::random_over: return "random_over";
    case ResampleKind::random_under: return "random_under";
  }
  return "?";
}

ScalerKind parse_scaler(const std::string& s) {
  if (s == "none") return ScalerKind::none;
  if (s == "zscore" || s == "StandardScaler") return ScalerKind::zscore;
  if (s == "minmax" || s == "MinMaxScaler") return ScalerKind::minmax;
  throw DataError("unknown scaling method '" + s + "'");
}

ResampleKind parse_resample(const std::string& s) {
  if (s == "none") return ResampleKind::none;
  if (s == "smote") return ResampleKind::smote;
  if (s == "random_over") return ResampleKind::random_over;
  if (s == "random_under") return ResampleKind::random_under;
  throw DataError("unknown resampling method '" + s + "'");
}

std::vector<size_t> prune_correlated(const Eigen::MatrixXd& train, double thr) {
  if (train.rows() < 2) throw DataError("correlation pruning needs at least 2 rows");
  const Eigen::Index d = train.cols();
  Eigen::MatrixXd z = train.rowwise() - train.colwise().mean();
  std::vector<bool> constant(static_cast<size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    constant[static_cast<size_t>(j)] = train.col(j).maxCoeff() == train.col(j).minCoeff();
    const double norm = z.col(j).norm();
    if (!constant[static_cast<size_t>(j)] && norm > 0.0) z.col(j) /= norm;
    else constant[static_cast<size_t>(j)] = true;
  }
  const Eigen::MatrixXd corr = z.transpose() * z;

  std::vector<size_t> kept;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (constant[static_cast<size_t>(j)]) continue;
    const bool redundant = std::any_of(kept.begin(), kept.end(), [&](size_t k) {
      return std::abs(corr(static_cast<Eigen::Index>(k), j)) > thr;
    });
    if (!redundant) kept.push_back(static_cast<size_t>(j));
  }
  return kept;
}

Scaler fit_scaler(const Eigen::MatrixXd& train, ScalerKind kind) {
  Scaler s;
  s.kind = kind;
  const Eigen::Index d = train.cols();
  s.offset = Eigen::VectorXd::Zero(d);
  s.scale = Eigen::VectorXd::Ones(d);
  s.constant.assign(static_cast<size_t>(d), false);
  if (kind == ScalerKind::none || train.rows() == 0) return s;
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto col = train.col(j);
    double spread = 0.0;
    if (kind == ScalerKind::zscore) {
      s.offset(j) = col.mean();
      spread = std::sqrt((col.array() - s.offset(j)).square().mean());
    } else {
      s.offset(j) = col.minCoeff();
      spread = col.maxCoeff() - s.offset(j);
    }
    if (spread > 0.0) {
      s.scale(j) = spread;
    } else {
      s.constant[static_cast<size_t>(j)] = true;
    }
  }
  return s;
}

Eigen::MatrixXd apply_scaler(const Scaler& s, const Eigen::MatrixXd& x) {
  if (s.kind == ScalerKind::none) return x;
  if (x.cols() != s.offset.size()) throw DataError("scaler dimension mismatch");
  Eigen::MatrixXd out = (x.rowwise() - s.offset.transpose()).array().rowwise() / s.scale.transpose().array();
  for (size_t j = 0; j < s.constant.size(); ++j) {
    if (s.constant[j]) out.col(static_cast<Eigen::Index>(j)).setZero();
  }
  return out;
}

Eigen::MatrixXd PreprocessPlan::transform(const Eigen::MatrixXd& x) const {
  if (static_cast<size_t>(x.cols()) != input_dim) {
    throw DataError("preprocess plan expects " + std::to_string(input_dim) + " columns, got " +
                    std::to_string(x.cols()));
  }
  Eigen::MatrixXd kept(x.rows(), static_cast<Eigen::Index>(kept_columns.size()));
  for (size_t j = 0; j < kept_columns.size(); ++j) {
    kept.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(kept_columns[j]));
  }
  return apply_scaler(scaler, kept);
}

PreprocessPlan fit_plan(const Eigen::MatrixXd& train, const PlanOptions& options) {
  PreprocessPlan plan;
  plan.input_dim = static_cast<size_t>(train.cols());
  plan.drop_correlated = options.drop_correlated;
  plan.corr_threshold = options.corr_threshold;
  plan.resample = options.resample;
  plan.seed = options.seed;
  if (options.drop_correlated) {
    plan.kept_columns = prune_correlated(train, options.corr_threshold);
  } else {
    plan.kept_columns.resize(plan.input_dim);
    std::iota(plan.kept_columns.begin(), plan.kept_columns.end(), size_t{0});
  }
  if (plan.kept_columns.empty()) throw DataError("correlation pruning removed every column");
  Eigen::MatrixXd kept(train.rows(), static_cast<Eigen::Index>(plan.kept_columns.size()));
  for (size_t j = 0; j < plan.kept_columns.size(); ++j) {
    kept.col(static_cast<Eigen::Index>(j)) = train.col(static_cast<Eigen::Index>(plan.kept_columns[j]));
  }
  plan.scaler = fit_scaler(kept, options.scaler);
  return plan;
}

std::string plan_to_json(const PreprocessPlan& plan) {
  nlohmann::ordered_json j;
  j["input_dim"] = plan.input_dim;
  j["kept_columns"] = plan.kept_columns;
  j["drop_correlated"] = plan.drop_correlated;
  j["corr_threshold"] = plan.corr_threshold;
  j["scaler"] = {{"method", to_string(plan.scaler.kind)},
                 {"offset", std::vector<double>(plan.scaler.offset.begin(), plan.scaler.offset.end())},
                 {"scale", std::vector<double>(plan.scaler.scale.begin(), plan.scaler.scale.end())},
                 {"constant", plan.scaler.constant}};
  j["resample"] = {{"method", to_string(plan.resample.kind)}, {"k", plan.resample.k}};
  j["seed"] = plan.seed;
  return j.dump();
}

PreprocessPlan plan_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PreprocessPlan p;
    p.input_dim = j.at("input_dim").get<size_t>();
    p.kept_columns = j.at("kept_columns").get<std::vector<size_t>>();
    p.drop_correlated = j.at("drop_correlated").get<bool>();
    p.corr_threshold = j.at("corr_threshold").get<double>();
    const auto& sc = j.at("scaler");
    p.scaler.kind = parse_scaler(sc.at("method").get<std::string>());
    const auto offset = sc.at("offset").get<std::vector<double>>();
    const auto scale = sc.at("scale").get<std::vector<double>>();
    p.scaler.offset = Eigen::Map<const Eigen::VectorXd>(offset.data(), static_cast<Eigen::Index>(offset.size()));
    p.scaler.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    p.scaler.constant = sc.at("constant").get<std::vector<bool>>();
    p.resample.kind = parse_resample(j.at("resample").at("method").get<std::string>());
    p.resample.k = j.at("resample").at("k").get<int>();
    p.seed = j.at("seed").get<uint64_t>();
    for (size_t c : p.kept_columns) {
      if (c >= p.input_dim) throw DataError("kept column index out of range");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad preprocess plan JSON: ") + e.what());
  }
}

Eigen::VectorXd interpolate(const Eigen::VectorXd& x, const Eigen::VectorXd& neighbour, double lambda) {
  return x + lambda * (neighbour - x);
}

Resampled resample(const Eigen::MatrixXd& x, const std::vector<int>& labels, ResampleMethod method, uint64_t seed) {
  if (static_cast<size_t>(x.rows()) != labels.size()) throw DataError("resample: label count mismatch");
  Resampled out{x, labels};
  if (method.kind == ResampleKind::none) return out;

  std::vector<size_t> pos, neg;
  for (size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw DataError("resample: both classes must be present");
  if (pos.size() == neg.size()) return out;
  const bool pos_minor = pos.size() < neg.size();
  const auto& minority = pos_minor ? pos : neg;
  const auto& majority = pos_minor ? neg : pos;
  const int minority_label = pos_minor ? 1 : 0;
  const size_t need = majority.size() - minority.size();
  Rng rng(seed);

  auto append_rows = [&](const std::vector<Eigen::VectorXd>& rows) {
    const Eigen::Index base = out.x.rows();
    out.x.conservativeResize(base + static_cast<Eigen::Index>(rows.size()), Eigen::NoChange);
    for (size_t i = 0; i < rows.size(); ++i) {
      out.x.row(base + static_cast<Eigen::Index>(i)) = rows[i].transpose();
      out.labels.push_back(minority_label);
    }
  };

  switch (method.kind) {
    case ResampleKind::none:
      break;
    case ResampleKind::random_over: {
      std::vector<Eigen::VectorXd> rows;
      for (size_t i = 0; i < need; ++i) rows.push_back(x.row(static_cast<Eigen::Index>(minority[rng.index(minority.size())])).transpose());
      append_rows(rows);
      break;
    }
    case ResampleKind::random_under: {
      std::vector<size_t> shuffled = majority;
      rng.shuffle(std::span<size_t>(shuffled));
      std::vector<bool> keep(labels.size(), false);
      for (size_t i : minority) keep[i] = true;
      for (size_t i = 0; i < minority.size(); ++i) keep[shuffled[i]] = true;
      std::vector<size_t> rows;
      for (size_t i = 0; i < labels.size(); ++i) {
        if (keep[i]) rows.push_back(i);
      }
      out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
      out.labels.clear();
      for (size_t r = 0; r < rows.size(); ++r) {
        out.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
        out.labels.push_back(labels[rows[r]]);
      }
      break;
    }
    case ResampleKind::smote: {
      if (minority.size() < 2) throw DataError("SMOTE needs at least 2 minority samples");
      const size_t k = std::min<size_t>(static_cast<size_t>(std::max(method.k, 1)), minority.size() - 1);
      // k nearest minority neighbours of every minority sample, ties by index.
      std::vector<std::vector<size_t>> neighbours(minority.size());
      for (size_t a = 0; a < minority.size(); ++a) {
        std::vector<std::pair<double, size_t>> dist;
        for (size_t b = 0; b < minority.size(); ++b) {
          if (a == b) continue;
          dist.emplace_back((x.row(static_cast<Eigen::Index>(minority[a])) - x.row(static_cast<Eigen::Index>(minority[b]))).squaredNorm(), b);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
        for (size_t i = 0; i < k; ++i) neighbours[a].push_back(dist[i].second);
      }
      std::vector<Eigen::VectorXd> rows;
      for (size_t i = 0; i < need; ++i) {
        const size_t a = rng.index(minority.size());
        const size_t b = neighbours[a][rng.index(k)];
        const double lambda = rng.uniform();
        rows.push_back(interpolate(x.row(static_cast<Eigen::Index>(minority[a])).transpose(),
                                   x.row(static_cast<Eigen::Index>(minority[b])).transpose(), lambda));
      }
      append_rows(rows);
      break;
    }
  }
  return out;
}

}  // namespace pangram::preprocess
