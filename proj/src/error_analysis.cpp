#include "pangram/error_analysis.hpp"

#include "pangram/errors.hpp"
#include "pangram/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

namespace pangram {

std::vector<ErrorSample> error_samples(const std::vector<SampleRecord>& records, const std::vector<bool>& correct) {
  if (records.size() != correct.size()) throw DataError("records and correctness flags differ in length");
  std::vector<ErrorSample> out;
  out.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out.push_back({r.age, r.sex, r.ethnicity, r.cohort, r.is_pd() ? 1 : 0, !correct[i]});
  }
  return out;
}

std::string to_string(Attribute a) {
  switch (a) {
    case Attribute::age: return "age";
    case Attribute::sex: return "sex";
    case Attribute::ethnicity: return "ethnicity";
    case Attribute::label: return "label";
    case Attribute::cohort: return "cohort";
  }
  return "?";
}

Attribute parse_attribute(const std::string& s) {
  for (auto a : {Attribute::age, Attribute::sex, Attribute::ethnicity, Attribute::label, Attribute::cohort}) {
    if (s == to_string(a)) return a;
  }
  throw DataError("unknown attribute '" + s + "' (expected age, sex, ethnicity, label or cohort)");
}

namespace {

// Integer level of a categorical attribute, or nullopt when missing.
std::optional<int> level_of(const ErrorSample& s, Attribute a) {
  switch (a) {
    case Attribute::sex: return s.sex ? std::optional<int>(static_cast<int>(*s.sex)) : std::nullopt;
    case Attribute::ethnicity: return s.ethnicity ? std::optional<int>(static_cast<int>(*s.ethnicity)) : std::nullopt;
    case Attribute::label: return s.label;
    case Attribute::cohort: return static_cast<int>(s.cohort);
    case Attribute::age: break;
  }
  return std::nullopt;
}

std::string level_name(Attribute a, int level) {
  switch (a) {
    case Attribute::sex: return std::string(to_string(static_cast<Sex>(level)));
    case Attribute::ethnicity: return std::string(to_string(static_cast<Ethnicity>(level)));
    case Attribute::label: return level ? "pd" : "control";
    case Attribute::cohort: return std::string(to_string(static_cast<Cohort>(level)));
    case Attribute::age: break;
  }
  return "?";
}

double gini(size_t n, size_t e) {
  if (n == 0) return 0.0;
  const double p = static_cast<double>(e) / static_cast<double>(n);
  return 2.0 * p * (1.0 - p);
}

struct Candidate {
  double impurity = 0.0;
  NodeSplit split;
  std::vector<size_t> left, right;
};

struct Builder {
  const std::vector<ErrorSample>& s;
  TreeOptions opt;
  size_t total_errors = 0;

  ErrorTreeNode leaf(const std::vector<size_t>& idx) const {
    ErrorTreeNode node;
    node.n = idx.size();
    for (size_t i : idx) node.errors += s[i].error ? 1 : 0;
    node.error_rate = node.n ? static_cast<double>(node.errors) / static_cast<double>(node.n) : 0.0;
    node.error_coverage = total_errors ? static_cast<double>(node.errors) / static_cast<double>(total_errors) : 0.0;
    return node;
  }

  // Weighted child impurity once missing samples join the larger side.
  std::optional<double> score(size_t nl, size_t el, size_t nr, size_t er, size_t nm, size_t em, bool& missing_left) const {
    missing_left = nl >= nr;
    if (missing_left) {
      nl += nm;
      el += em;
    } else {
      nr += nm;
      er += em;
    }
    if (nl < opt.min_leaf || nr < opt.min_leaf) return std::nullopt;
    const double n = static_cast<double>(nl + nr);
    return (static_cast<double>(nl) * gini(nl, el) + static_cast<double>(nr) * gini(nr, er)) / n;
  }

  void consider(std::optional<Candidate>& best, Candidate c) const {
    if (!best || c.impurity < best->impurity - 1e-12) best = std::move(c);
  }

  void numeric(const std::vector<size_t>& idx, std::optional<Candidate>& best) const {
    std::vector<std::pair<double, size_t>> present;
    std::vector<size_t> missing;
    size_t em = 0;
    for (size_t i : idx) {
      if (s[i].age) present.emplace_back(*s[i].age, i);
      else {
        missing.push_back(i);
        em += s[i].error ? 1 : 0;
      }
    }
    std::sort(present.begin(), present.end());
    size_t total_e = 0;
    for (const auto& [v, i] : present) total_e += s[i].error ? 1 : 0;
    size_t el = 0;
    for (size_t k = 0; k + 1 < present.size(); ++k) {
      el += s[present[k].second].error ? 1 : 0;
      if (present[k].first == present[k + 1].first) continue;
      const size_t nl = k + 1, nr = present.size() - nl;
      bool missing_left = true;
      const auto imp = score(nl, el, nr, total_e - el, missing.size(), em, missing_left);
      if (!imp || (best && !(*imp < best->impurity - 1e-12))) continue;
      Candidate c;
      c.impurity = *imp;
      c.split.feature = Attribute::age;
      c.split.threshold = 0.5 * (present[k].first + present[k + 1].first);
      c.split.missing = missing.size();
      c.split.missing_left = missing_left;
      for (size_t j = 0; j < present.size(); ++j) (j <= k ? c.left : c.right).push_back(present[j].second);
      for (size_t i : missing) (missing_left ? c.left : c.right).push_back(i);
      std::sort(c.left.begin(), c.left.end());
      std::sort(c.right.begin(), c.right.end());
      consider(best, std::move(c));
    }
  }

  void categorical(const std::vector<size_t>& idx, Attribute a, std::optional<Candidate>& best) const {
    std::map<int, std::pair<size_t, size_t>> counts;  // level -> (n, errors)
    size_t nm = 0, em = 0;
    for (size_t i : idx) {
      const auto lv = level_of(s[i], a);
      if (lv) {
        auto& c = counts[*lv];
        ++c.first;
        c.second += s[i].error ? 1 : 0;
      } else {
        ++nm;
        em += s[i].error ? 1 : 0;
      }
    }
    std::vector<int> levels;
    for (const auto& [lv, c] : counts) levels.push_back(lv);
    const size_t L = levels.size();
    if (L < 2) return;
    // Subsets containing the first level; the complement is implied.
    for (uint32_t mask = 1; mask < (1u << L) - 1; mask += 2) {
      size_t nl = 0, el = 0, nr = 0, er = 0;
      for (size_t k = 0; k < L; ++k) {
        const auto& c = counts[levels[k]];
        if (mask & (1u << k)) {
          nl += c.first;
          el += c.second;
        } else {
          nr += c.first;
          er += c.second;
        }
      }
      bool missing_left = true;
      const auto imp = score(nl, el, nr, er, nm, em, missing_left);
      if (!imp || (best && !(*imp < best->impurity - 1e-12))) continue;
      Candidate c;
      c.impurity = *imp;
      c.split.feature = a;
      c.split.missing = nm;
      c.split.missing_left = missing_left;
      for (size_t k = 0; k < L; ++k) {
        ((mask & (1u << k)) ? c.split.left_levels : c.split.right_levels).push_back(level_name(a, levels[k]));
      }
      for (size_t i : idx) {
        const auto lv = level_of(s[i], a);
        bool left = missing_left;
        if (lv) {
          const size_t k = static_cast<size_t>(std::find(levels.begin(), levels.end(), *lv) - levels.begin());
          left = (mask & (1u << k)) != 0;
        }
        (left ? c.left : c.right).push_back(i);
      }
      consider(best, std::move(c));
    }
  }

  ErrorTreeNode build(const std::vector<size_t>& idx, int depth) const {
    ErrorTreeNode node = leaf(idx);
    const double parent = gini(node.n, node.errors);
    if (depth >= opt.max_depth || parent == 0.0 || node.n < 2 * opt.min_leaf) return node;
    std::optional<Candidate> best;
    numeric(idx, best);
    for (auto a : {Attribute::sex, Attribute::ethnicity, Attribute::label}) categorical(idx, a, best);
    if (!best || !(best->impurity < parent - 1e-12)) return node;
    node.split = best->split;
    node.children.push_back(build(best->left, depth + 1));
    node.children.push_back(build(best->right, depth + 1));
    return node;
  }
};

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

nlohmann::ordered_json node_json(const ErrorTreeNode& n) {
  nlohmann::ordered_json j;
  j["n"] = n.n;
  j["errors"] = n.errors;
  j["error_rate"] = n.error_rate;
  j["error_coverage"] = n.error_coverage;
  if (n.split) {
    const auto& s = *n.split;
    nlohmann::ordered_json sj;
    sj["feature"] = to_string(s.feature);
    if (s.threshold) sj["threshold"] = *s.threshold;
    else {
      sj["left"] = s.left_levels;
      sj["right"] = s.right_levels;
    }
    sj["missing"] = s.missing;
    sj["missing_to"] = s.missing_left ? "left" : "right";
    j["split"] = sj;
    j["children"] = nlohmann::ordered_json::array();
    for (const auto& c : n.children) j["children"].push_back(node_json(c));
  }
  return j;
}

void render(const ErrorTreeNode& n, const std::string& label, int depth, std::string& out) {
  out += std::string(static_cast<size_t>(2 * depth), ' ') + label + ": n=" + std::to_string(n.n) +
         " errors=" + std::to_string(n.errors) + " rate=" + percent(n.error_rate) +
         " coverage=" + percent(n.error_coverage) + '\n';
  if (!n.split) return;
  const auto& s = *n.split;
  const std::string f = to_string(s.feature);
  std::string left, right;
  if (s.threshold) {
    left = f + " <= " + io::format_double(*s.threshold);
    right = f + " > " + io::format_double(*s.threshold);
  } else {
    left = f + " in {" + join(s.left_levels) + "}";
    right = f + " in {" + join(s.right_levels) + "}";
  }
  if (s.missing) (s.missing_left ? left : right) += " (+" + std::to_string(s.missing) + " missing)";
  render(n.children[0], left, depth + 1, out);
  render(n.children[1], right, depth + 1, out);
}

struct Levels {
  std::vector<std::string> names;
  std::vector<std::optional<size_t>> of_sample;  // level index per sample
};

std::string range_label(double lo, double hi) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f-%.1f", lo, hi);
  return buf;
}

Levels levels_for(const std::vector<ErrorSample>& samples, Attribute a, size_t bins) {
  Levels out;
  out.of_sample.resize(samples.size());
  bool any_missing = false;
  if (a == Attribute::age) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : samples) {
      if (s.age) {
        lo = std::min(lo, *s.age);
        hi = std::max(hi, *s.age);
      }
    }
    const bool any = lo <= hi;
    const size_t nb = !any ? 0 : (lo == hi ? 1 : bins);
    const double width = nb > 1 ? (hi - lo) / static_cast<double>(nb) : 0.0;
    for (size_t b = 0; b < nb; ++b) {
      out.names.push_back(nb == 1 ? range_label(lo, hi) : range_label(lo + width * b, b + 1 == nb ? hi : lo + width * (b + 1)));
    }
    for (size_t i = 0; i < samples.size(); ++i) {
      if (!samples[i].age) {
        any_missing = true;
        continue;
      }
      size_t b = nb == 1 ? 0 : static_cast<size_t>((*samples[i].age - lo) / width);
      out.of_sample[i] = std::min(b, nb - 1);
    }
  } else {
    std::map<int, size_t> seen;
    for (const auto& s : samples) {
      if (const auto lv = level_of(s, a)) seen[*lv] = 0;
    }
    size_t k = 0;
    for (auto& [lv, index] : seen) {
      index = k++;
      out.names.push_back(level_name(a, lv));
    }
    for (size_t i = 0; i < samples.size(); ++i) {
      if (const auto lv = level_of(samples[i], a)) out.of_sample[i] = seen[*lv];
      else any_missing = true;
    }
  }
  if (any_missing) {
    const size_t m = out.names.size();
    out.names.push_back("missing");
    for (auto& v : out.of_sample) {
      if (!v) v = m;
    }
  }
  return out;
}

}  // namespace

ErrorTreeNode build_error_tree(const std::vector<ErrorSample>& samples, TreeOptions options) {
  if (samples.empty()) throw DataError("error tree needs at least one sample");
  if (options.max_depth < 0 || options.min_leaf < 1) throw std::invalid_argument("bad tree options");
  const bool any_demographic = std::any_of(samples.begin(), samples.end(), [](const ErrorSample& s) {
    return s.age || s.sex || s.ethnicity;
  });
  if (!any_demographic) throw DataError("no demographic features present");
  Builder b{samples, options};
  for (const auto& s : samples) b.total_errors += s.error ? 1 : 0;
  std::vector<size_t> all(samples.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  return b.build(all, 0);
}

std::string tree_to_json(const ErrorTreeNode& root) { return node_json(root).dump(2) + "\n"; }

std::string tree_to_text(const ErrorTreeNode& root) {
  std::string out;
  render(root, "all", 0, out);
  return out;
}

std::vector<HeatmapCell> heatmap_matrix(const std::vector<ErrorSample>& samples, Attribute a, Attribute b,
                                        size_t bins) {
  if (bins < 1) throw std::invalid_argument("heatmap needs at least one bin");
  const Levels la = levels_for(samples, a, bins);
  const Levels lb = levels_for(samples, b, bins);
  std::vector<HeatmapCell> cells;
  for (const auto& x : la.names) {
    for (const auto& y : lb.names) {
      HeatmapCell c;
      c.a = x;
      c.b = y;
      cells.push_back(std::move(c));
    }
  }
  size_t total_errors = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    auto& c = cells[*la.of_sample[i] * lb.names.size() + *lb.of_sample[i]];
    ++c.n;
    c.errors += samples[i].error ? 1 : 0;
    total_errors += samples[i].error ? 1 : 0;
  }
  for (auto& c : cells) {
    if (c.n) c.error_rate = static_cast<double>(c.errors) / static_cast<double>(c.n);
    c.error_coverage = total_errors ? static_cast<double>(c.errors) / static_cast<double>(total_errors) : 0.0;
  }
  return cells;
}

std::string heatmap_csv(const std::vector<HeatmapCell>& cells, Attribute a, Attribute b) {
  std::string out = to_string(a) + ',' + to_string(b) + ",n,errors,error_rate,error_coverage\n";
  for (const auto& c : cells) {
    out += io::csv_field(c.a) + ',' + io::csv_field(c.b) + ',' + std::to_string(c.n) + ',' + std::to_string(c.errors) +
           ',' + (c.error_rate ? io::format_double(*c.error_rate) : std::string()) + ',' +
           io::format_double(c.error_coverage) + '\n';
  }
  return out;
}

}  // namespace pangram
