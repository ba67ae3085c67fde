#include "pangram/fusion_model.hpp"

#include "pangram/errors.hpp"
#include "pangram/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pangram {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::classifier: return "classifier";
    case ModelKind::projection_fusion: return "projection_fusion";
    case ModelKind::shared_space: return "shared_space";
  }
  return "?";
}

std::string to_string(HeadKind k) { return k == HeadKind::shallow ? "ShallowANN" : "ANN"; }

std::string to_string(RecMetric m) {
  switch (m) {
    case RecMetric::mse: return "mse";
    case RecMetric::l1: return "l1";
    case RecMetric::kl: return "kl";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "classifier") return ModelKind::classifier;
  if (s == "projection_fusion" || s == "fusion") return ModelKind::projection_fusion;
  if (s == "shared_space" || s == "shared") return ModelKind::shared_space;
  throw DataError("unknown model kind '" + s + "'");
}

HeadKind parse_head_kind(const std::string& s) {
  if (s == "ANN" || s == "ann") return HeadKind::ann;
  if (s == "ShallowANN" || s == "shallow") return HeadKind::shallow;
  throw DataError("unknown model '" + s + "'");
}

RecMetric parse_rec_metric(const std::string& s) {
  if (s == "mse") return RecMetric::mse;
  if (s == "l1") return RecMetric::l1;
  if (s == "kl") return RecMetric::kl;
  throw DataError("unknown reconstruction metric '" + s + "'");
}

size_t ModelSpec::head_dim() const {
  switch (kind) {
    case ModelKind::classifier: return input_dims.at(0);
    case ModelKind::projection_fusion: return input_dims.at(1);
    case ModelKind::shared_space: return shared_dim;
  }
  return 0;
}

size_t Model::index_of(const std::string& name) const {
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == name) return i;
  }
  throw std::invalid_argument("model has no parameter '" + name + "'");
}

size_t Model::parameter_count() const {
  size_t n = 0;
  for (const auto& p : params) n += static_cast<size_t>(p.value.size());
  return n;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_spec(const ModelSpec& spec) {
  const size_t need = spec.kind == ModelKind::classifier ? 1 : spec.kind == ModelKind::projection_fusion ? 2 : 0;
  if (need && spec.input_dims.size() != need) {
    throw std::invalid_argument(to_string(spec.kind) + " needs " + std::to_string(need) + " inputs");
  }
  if (spec.kind == ModelKind::shared_space && spec.input_dims.empty()) {
    throw std::invalid_argument("shared_space needs at least one modality");
  }
  if (std::any_of(spec.input_dims.begin(), spec.input_dims.end(), [](size_t d) { return d == 0; })) {
    throw std::invalid_argument("input dimension must be positive");
  }
  if (spec.head == HeadKind::ann && spec.hidden == 0) throw std::invalid_argument("hidden width must be positive");
  if (spec.kind == ModelKind::shared_space && spec.shared_dim == 0) throw std::invalid_argument("shared dim must be positive");
  for (double w : {spec.weights.pred, spec.weights.cos, spec.weights.rec}) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("loss weights must be finite and non-negative");
  }
}

bool is_bias(const std::string& name) {
  return name.ends_with(".b") || name.ends_with(".b1") || name.ends_with(".b2");
}

void add_head(std::vector<Param>& params, HeadKind head, size_t d, size_t hidden) {
  const auto n = static_cast<Eigen::Index>(d);
  if (head == HeadKind::shallow) {
    params.push_back({"head.w", MatrixXd::Zero(1, n)});
    params.push_back({"head.b", MatrixXd::Zero(1, 1)});
  } else {
    const auto h = static_cast<Eigen::Index>(hidden);
    params.push_back({"head.W1", MatrixXd::Zero(h, n)});
    params.push_back({"head.b1", MatrixXd::Zero(h, 1)});
    params.push_back({"head.w2", MatrixXd::Zero(1, h)});
    params.push_back({"head.b2", MatrixXd::Zero(1, 1)});
  }
}

MatrixXd affine(const MatrixXd& x, const MatrixXd& w, const MatrixXd& b) {
  MatrixXd out = x * w.transpose();
  out.rowwise() += b.col(0).transpose();
  return out;
}

struct Normalized {
  MatrixXd n;
  VectorXd norm;
};

// Row-wise L2 normalisation; zero rows pass through.
Normalized normalize_rows(const MatrixXd& p) {
  Normalized z{p, p.rowwise().norm()};
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (z.norm(i) > 0.0) z.n.row(i) /= z.norm(i);
  }
  return z;
}

MatrixXd normalize_backward(const Normalized& z, const MatrixXd& dn) {
  MatrixXd dp = dn;
  for (Eigen::Index i = 0; i < dn.rows(); ++i) {
    if (z.norm(i) > 0.0) dp.row(i) = (dn.row(i) - z.n.row(i) * z.n.row(i).dot(dn.row(i))) / z.norm(i);
  }
  return dp;
}

struct HeadCache {
  MatrixXd a;  // hidden pre-activation
  MatrixXd h;
};

VectorXd head_logits(const Model& m, const MatrixXd& f, HeadCache* cache) {
  if (m.spec.head == HeadKind::shallow) {
    return (f * m.at("head.w").transpose()).col(0).array() + m.at("head.b")(0, 0);
  }
  MatrixXd a = affine(f, m.at("head.W1"), m.at("head.b1"));
  MatrixXd h = a.cwiseMax(0.0);
  VectorXd z = (h * m.at("head.w2").transpose()).col(0).array() + m.at("head.b2")(0, 0);
  if (cache) {
    cache->a = std::move(a);
    cache->h = std::move(h);
  }
  return z;
}

MatrixXd head_backward(const Model& m, const MatrixXd& f, const HeadCache& cache, const VectorXd& dz,
                       std::vector<MatrixXd>& g) {
  if (m.spec.head == HeadKind::shallow) {
    g[m.index_of("head.w")] += dz.transpose() * f;
    g[m.index_of("head.b")](0, 0) += dz.sum();
    return dz * m.at("head.w");
  }
  g[m.index_of("head.w2")] += dz.transpose() * cache.h;
  g[m.index_of("head.b2")](0, 0) += dz.sum();
  MatrixXd da = (dz * m.at("head.w2")).cwiseProduct((cache.a.array() > 0.0).cast<double>().matrix());
  g[m.index_of("head.W1")] += da.transpose() * f;
  g[m.index_of("head.b1")] += da.colwise().sum().transpose();
  return da * m.at("head.W1");
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Sum over rows of (1 - cos(a_i, b_i)); accumulates scale * gradient.
double cosine_term(const MatrixXd& a, const MatrixXd& b, double scale, MatrixXd* da, MatrixXd* db,
                   size_t& degenerate) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double na = a.row(i).norm(), nb = b.row(i).norm();
    if (na == 0.0 || nb == 0.0) {
      sum += 1.0;
      ++degenerate;
      continue;
    }
    const double c = a.row(i).dot(b.row(i)) / (na * nb);
    sum += 1.0 - c;
    if (da) da->row(i) -= scale * (b.row(i) / nb - c * a.row(i) / na) / na;
    if (db) db->row(i) -= scale * (a.row(i) / na - c * b.row(i) / nb) / nb;
  }
  return sum;
}

// Sum over rows of metric(r_i, x_i); dr receives scale * gradient w.r.t. r.
double rec_term(RecMetric metric, const MatrixXd& r, const MatrixXd& x, double scale, MatrixXd* dr) {
  const double d = static_cast<double>(r.cols());
  const MatrixXd diff = r - x;
  switch (metric) {
    case RecMetric::mse:
      if (dr) *dr = (2.0 * scale / d) * diff;
      return diff.squaredNorm() / d;
    case RecMetric::l1:
      if (dr) *dr = (scale / d) * diff.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
      return diff.cwiseAbs().sum() / d;
    case RecMetric::kl: {
      double sum = 0.0;
      if (dr) dr->resize(r.rows(), r.cols());
      for (Eigen::Index i = 0; i < r.rows(); ++i) {
        const double mx = x.row(i).maxCoeff(), mr = r.row(i).maxCoeff();
        const Eigen::ArrayXd lq = x.row(i).transpose().array() - mx - std::log((x.row(i).array() - mx).exp().sum());
        const Eigen::ArrayXd ls = r.row(i).transpose().array() - mr - std::log((r.row(i).array() - mr).exp().sum());
        const Eigen::ArrayXd q = lq.exp();
        sum += (q * (lq - ls)).sum();
        if (dr) dr->row(i) = scale * (ls.exp() - q).matrix().transpose();
      }
      return sum;
    }
  }
  return 0.0;
}

void check_inputs(const Model& m, const Batch& inputs) {
  if (inputs.size() != m.spec.input_dims.size()) {
    throw DataError("model expects " + std::to_string(m.spec.input_dims.size()) + " inputs, got " +
                    std::to_string(inputs.size()));
  }
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (static_cast<size_t>(inputs[i].cols()) != m.spec.input_dims[i]) {
      throw DataError("input " + std::to_string(i) + " has dimension " + std::to_string(inputs[i].cols()) +
                      ", model expects " + std::to_string(m.spec.input_dims[i]));
    }
    if (inputs[i].rows() != inputs[0].rows()) throw DataError("inputs differ in sample count");
    if (!inputs[i].allFinite()) throw DataError("input " + std::to_string(i) + " contains non-finite values");
  }
}

struct Forward {
  std::vector<MatrixXd> proj;       // projections, one per projected modality
  std::vector<Normalized> normed;   // their normalisations
  Normalized target;                // fusion target normalisation
  Normalized sum;                   // renormalisation of the sum
  MatrixXd fused;
  HeadCache head;
  VectorXd logits;
};

Forward forward(const Model& m, const Batch& x, bool keep) {
  Forward f;
  const auto& spec = m.spec;
  switch (spec.kind) {
    case ModelKind::classifier:
      f.fused = x[0];
      break;
    case ModelKind::projection_fusion: {
      f.proj.push_back(affine(x[0], m.at("proj.W"), m.at("proj.b")));
      f.normed.push_back(normalize_rows(f.proj[0]));
      f.target = normalize_rows(x[1]);
      f.fused = f.normed[0].n + f.target.n;
      break;
    }
    case ModelKind::shared_space: {
      for (size_t i = 0; i < x.size(); ++i) {
        const std::string p = "proj" + std::to_string(i);
        f.proj.push_back(affine(x[i], m.at(p + ".W"), m.at(p + ".b")));
        f.normed.push_back(normalize_rows(f.proj.back()));
        if (i == 0) f.fused = f.normed.back().n;
        else f.fused += f.normed.back().n;
      }
      break;
    }
  }
  if (spec.kind != ModelKind::classifier && spec.renormalize) {
    f.sum = normalize_rows(f.fused);
    f.fused = f.sum.n;
  }
  f.logits = head_logits(m, f.fused, keep ? &f.head : nullptr);
  return f;
}

}  // namespace

Model init_model(const ModelSpec& spec, uint64_t seed) {
  check_spec(spec);
  Model m;
  m.spec = spec;
  auto dim = [](size_t d) { return static_cast<Eigen::Index>(d); };
  switch (spec.kind) {
    case ModelKind::classifier:
      break;
    case ModelKind::projection_fusion: {
      const size_t ds = spec.input_dims[0], dt = spec.input_dims[1];
      m.params.push_back({"proj.W", MatrixXd::Zero(dim(dt), dim(ds))});
      m.params.push_back({"proj.b", MatrixXd::Zero(dim(dt), 1)});
      m.params.push_back({"rec.W", MatrixXd::Zero(dim(ds), dim(dt))});
      m.params.push_back({"rec.b", MatrixXd::Zero(dim(ds), 1)});
      break;
    }
    case ModelKind::shared_space:
      for (size_t i = 0; i < spec.input_dims.size(); ++i) {
        const auto d = dim(spec.input_dims[i]), s = dim(spec.shared_dim);
        const std::string p = std::to_string(i);
        m.params.push_back({"proj" + p + ".W", MatrixXd::Zero(s, d)});
        m.params.push_back({"proj" + p + ".b", MatrixXd::Zero(s, 1)});
        m.params.push_back({"rec" + p + ".W", MatrixXd::Zero(d, s)});
        m.params.push_back({"rec" + p + ".b", MatrixXd::Zero(d, 1)});
      }
      break;
  }
  add_head(m.params, spec.head, spec.head_dim(), spec.hidden);

  Rng rng(seed);
  for (auto& p : m.params) {
    if (is_bias(p.name)) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.cols()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) p.value(r, c) = rng.uniform(-bound, bound);
    }
  }
  return m;
}

Eigen::VectorXd predict(const Model& model, const Batch& inputs) {
  check_inputs(model, inputs);
  const Forward f = forward(model, inputs, false);
  return f.logits.unaryExpr([](double z) { return sigmoid(z); });
}

Eigen::MatrixXd fused_representation(const Model& model, const Batch& inputs) {
  check_inputs(model, inputs);
  return forward(model, inputs, false).fused;
}

LossParts loss_and_gradient(const Model& model, const Batch& inputs, std::span<const int> labels,
                            std::vector<Eigen::MatrixXd>* grads) {
  check_inputs(model, inputs);
  const Eigen::Index n = inputs[0].rows();
  if (n == 0) throw std::invalid_argument("empty batch");
  if (labels.size() != static_cast<size_t>(n)) throw DataError("label count does not match batch size");

  const auto& spec = model.spec;
  const bool fusion = spec.kind != ModelKind::classifier;
  const LossWeights w = fusion ? spec.weights : LossWeights{1.0, 0.0, 0.0};
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool want = grads != nullptr;

  const Forward f = forward(model, inputs, true);
  LossParts parts;

  VectorXd dz(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = labels[static_cast<size_t>(i)] ? 1.0 : 0.0;
    const double p = sigmoid(f.logits(i));
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    parts.bce -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
    // The clamp is flat outside its range, so the gradient vanishes there.
    dz(i) = (p == pc) ? w.pred * inv_n * (p - y) : 0.0;
  }
  parts.bce *= inv_n;

  if (want) {
    grads->clear();
    for (const auto& p : model.params) grads->push_back(MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }

  std::vector<MatrixXd> dproj;
  for (const auto& p : f.proj) dproj.push_back(MatrixXd::Zero(p.rows(), p.cols()));
  std::vector<MatrixXd> scratch;
  std::vector<MatrixXd>& g = want ? *grads : scratch;

  if (spec.kind == ModelKind::projection_fusion) {
    const double cos_scale = w.cos * inv_n;
    parts.cos = inv_n * cosine_term(f.proj[0], inputs[1], cos_scale, want ? &dproj[0] : nullptr, nullptr,
                                    parts.degenerate_cos);
    const MatrixXd r = affine(f.proj[0], model.at("rec.W"), model.at("rec.b"));
    MatrixXd dr;
    parts.rec = inv_n * rec_term(spec.rec_metric, r, inputs[0], w.rec * inv_n, want ? &dr : nullptr);
    if (want) {
      g[model.index_of("rec.W")] += dr.transpose() * f.proj[0];
      g[model.index_of("rec.b")] += dr.colwise().sum().transpose();
      dproj[0] += dr * model.at("rec.W");
    }
  } else if (spec.kind == ModelKind::shared_space) {
    const size_t mods = f.proj.size();
    const size_t pairs = mods * (mods - 1) / 2;
    if (pairs > 0) {
      const double cos_scale = w.cos * inv_n / static_cast<double>(pairs);
      double sum = 0.0;
      for (size_t a = 0; a < mods; ++a) {
        for (size_t b = a + 1; b < mods; ++b) {
          sum += cosine_term(f.proj[a], f.proj[b], cos_scale, want ? &dproj[a] : nullptr,
                             want ? &dproj[b] : nullptr, parts.degenerate_cos);
        }
      }
      parts.cos = sum * inv_n / static_cast<double>(pairs);
    }
    const double rec_scale = w.rec * inv_n / static_cast<double>(mods);
    double sum = 0.0;
    for (size_t i = 0; i < mods; ++i) {
      const std::string p = "rec" + std::to_string(i);
      const MatrixXd r = affine(f.proj[i], model.at(p + ".W"), model.at(p + ".b"));
      MatrixXd dr;
      sum += rec_term(spec.rec_metric, r, inputs[i], rec_scale, want ? &dr : nullptr);
      if (want) {
        g[model.index_of(p + ".W")] += dr.transpose() * f.proj[i];
        g[model.index_of(p + ".b")] += dr.colwise().sum().transpose();
        dproj[i] += dr * model.at(p + ".W");
      }
    }
    parts.rec = sum * inv_n / static_cast<double>(mods);
  }
  parts.total = w.pred * parts.bce + (fusion ? w.cos * parts.cos + w.rec * parts.rec : 0.0);
  if (!want) return parts;

  MatrixXd dfused = head_backward(model, f.fused, f.head, dz, g);
  if (!fusion) return parts;
  if (spec.renormalize) dfused = normalize_backward(f.sum, dfused);

  // The summed normalised projections each receive dfused.
  for (size_t i = 0; i < f.proj.size(); ++i) {
    dproj[i] += normalize_backward(f.normed[i], dfused);
    const std::string p = spec.kind == ModelKind::projection_fusion ? "proj" : "proj" + std::to_string(i);
    g[model.index_of(p + ".W")] += dproj[i].transpose() * inputs[i];
    g[model.index_of(p + ".b")] += dproj[i].colwise().sum().transpose();
  }
  return parts;
}

FeatureMatrix concat_features(const std::vector<FeatureMatrix>& sets, const std::vector<std::string>& sample_order) {
  if (sets.empty()) throw std::invalid_argument("concat_features needs at least one set");
  FeatureMatrix out;
  size_t dim = 0;
  for (const auto& s : sets) dim += s.dim();
  out.sample_ids = sample_order;
  out.values.resize(static_cast<Eigen::Index>(sample_order.size()), static_cast<Eigen::Index>(dim));
  Eigen::Index col = 0;
  for (size_t k = 0; k < sets.size(); ++k) {
    const auto& s = sets[k];
    out.set_name += (k ? "+" : "") + s.set_name;
    for (const auto& c : s.column_names) {
      // Columns that already carry a set prefix keep it, so nesting is flat.
      out.column_names.push_back(c.find(':') == std::string::npos ? s.set_name + ":" + c : c);
    }
    const FeatureMatrix rows = s.select(sample_order);
    out.values.middleCols(col, static_cast<Eigen::Index>(s.dim())) = rows.values;
    col += static_cast<Eigen::Index>(s.dim());
  }
  return out;
}

}  // namespace pangram
