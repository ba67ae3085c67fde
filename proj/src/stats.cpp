#include "pangram/stats.hpp"

#include "pangram/dataset.hpp"
#include "pangram/errors.hpp"
#include "pangram/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace pangram::stats {

namespace {

std::vector<double> log_factorials(uint64_t n) {
  std::vector<double> lf(n + 1, 0.0);
  for (uint64_t i = 1; i <= n; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
  return lf;
}

}  // namespace

double fisher_exact_two_sided(const Table2x2& t) {
  const uint64_t n = t.total();
  if (n == 0) throw std::invalid_argument("Fisher test on an empty table");
  const uint64_t row1 = t.a + t.b, col1 = t.a + t.c, row2 = t.c + t.d, col2 = t.b + t.d;
  const auto lf = log_factorials(n);
  const double log_margins = lf[row1] + lf[row2] + lf[col1] + lf[col2] - lf[n];
  auto log_p = [&](uint64_t a) {
    const uint64_t b = row1 - a, c = col1 - a, d = row2 - c;
    return log_margins - lf[a] - lf[b] - lf[c] - lf[d];
  };
  const uint64_t lo = col1 > row2 ? col1 - row2 : 0;
  const uint64_t hi = std::min(row1, col1);
  const double cutoff = log_p(t.a) + std::log1p(kFisherRelativeSlack);
  double p = 0.0;
  for (uint64_t a = lo; a <= hi; ++a) {
    const double lp = log_p(a);
    if (lp <= cutoff) p += std::exp(lp);
  }
  return std::min(p, 1.0);
}

double bonferroni(double alpha, int m) {
  if (m < 1) throw std::invalid_argument("Bonferroni needs at least one test");
  return alpha / m;
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

Spearman spearman(std::span<const double> x, std::span<const double> y, SpearmanMethod method) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 4) throw std::invalid_argument("spearman: need at least 4 pairs");
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  auto constant = [](const std::vector<double>& r) {
    return std::all_of(r.begin(), r.end(), [&](double v) { return v == r.front(); });
  };
  if (constant(rx) || constant(ry)) throw std::invalid_argument("spearman: constant input has zero rank variance");

  Spearman s;
  s.rho = pearson(rx, ry);
  const auto n = static_cast<double>(x.size());
  if (method == SpearmanMethod::t_approximation) {
    if (std::abs(s.rho) >= 1.0) {
      s.p = 0.0;
    } else {
      const double t = s.rho * std::sqrt((n - 2.0) / (1.0 - s.rho * s.rho));
      const boost::math::students_t dist(n - 2.0);
      s.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    }
    return s;
  }
  if (x.size() > 10) throw std::invalid_argument("exact Spearman permutation limited to n <= 10");
  std::vector<size_t> perm(ry.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> permuted(ry.size());
  uint64_t hits = 0, total = 0;
  const double observed = std::abs(s.rho) - 1e-12;
  do {
    for (size_t i = 0; i < perm.size(); ++i) permuted[i] = ry[perm[i]];
    if (std::abs(pearson(rx, permuted)) >= observed) ++hits;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  s.p = static_cast<double>(hits) / static_cast<double>(total);
  return s;
}

MannWhitney mann_whitney(std::span<const double> first, std::span<const double> second) {
  if (first.empty() || second.empty()) throw std::invalid_argument("Mann-Whitney: a group is empty");
  const size_t n1 = first.size(), n2 = second.size(), n = n1 + n2;
  std::vector<double> pooled(first.begin(), first.end());
  pooled.insert(pooled.end(), second.begin(), second.end());
  const auto ranks = average_ranks(pooled);
  const double r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(n1), 0.0);
  const double base = static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;

  MannWhitney mw;
  mw.u = r1 - base;
  const double mu = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  const double observed = std::abs(mw.u - mu);

  if (n <= 20) {
    // Enumerate every assignment of n1 of the pooled mid-ranks to group 1.
    mw.exact = true;
    uint64_t hits = 0, total = 0;
    const uint32_t limit = 1u << n;
    for (uint32_t mask = (1u << n1) - 1; mask < limit;) {
      double rs = 0.0;
      for (size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) rs += ranks[i];
      }
      if (std::abs(rs - base - mu) >= observed - 1e-9) ++hits;
      ++total;
      // Gosper's hack: next mask with the same popcount.
      const uint32_t c = mask & (~mask + 1);
      const uint32_t r = mask + c;
      mask = (((r ^ mask) >> 2) / c) | r;
    }
    mw.p = static_cast<double>(hits) / static_cast<double>(total);
    return mw;
  }

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double nn = static_cast<double>(n);
  const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (!(var > 0.0)) {
    mw.p = 1.0;
    return mw;
  }
  const double z = std::max(0.0, observed - 0.5) / std::sqrt(var);
  mw.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return mw;
}

namespace {

struct Group {
  uint64_t n = 0;
  uint64_t correct = 0;
};

BiasRow compare(std::string property, std::string name_a, std::string name_b, const Group& a, const Group& b,
                double corrected_alpha) {
  BiasRow row;
  row.property = std::move(property);
  row.group_a = std::move(name_a);
  row.group_b = std::move(name_b);
  row.n_a = a.n;
  row.n_b = b.n;
  row.accuracy_a = a.n ? static_cast<double>(a.correct) / static_cast<double>(a.n) : 0.0;
  row.accuracy_b = b.n ? static_cast<double>(b.correct) / static_cast<double>(b.n) : 0.0;
  if (a.n > 0 && b.n > 0) {
    row.p = fisher_exact_two_sided({a.correct, a.n - a.correct, b.correct, b.n - b.correct});
    row.significant = *row.p < corrected_alpha;
  }
  return row;
}

}  // namespace

BiasReport subgroup_bias_report(const std::vector<SampleRecord>& records, const std::vector<bool>& correct,
                                double alpha) {
  if (records.size() != correct.size()) throw DataError("bias report: records and correctness differ in length");
  BiasReport report;
  report.alpha = alpha;
  report.corrected_alpha = bonferroni(alpha, 6);

  Group male, female, white, nonwhite, young, old, home, clinic, care;
  auto add = [](Group& g, bool ok) {
    ++g.n;
    g.correct += ok ? 1 : 0;
  };
  std::vector<double> durations, outcome;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const bool ok = correct[i];
    if (r.sex == Sex::Male) add(male, ok);
    if (r.sex == Sex::Female) add(female, ok);
    if (r.ethnicity && *r.ethnicity != Ethnicity::Unknown) add(*r.ethnicity == Ethnicity::White ? white : nonwhite, ok);
    if (r.age) add(*r.age < 50.0 ? young : old, ok);
    switch (r.cohort) {
      case Cohort::HomeRecorded: add(home, ok); break;
      case Cohort::ClinicalSetup: add(clinic, ok); break;
      case Cohort::PDCareFacility: add(care, ok); break;
    }
    if (r.is_pd() && r.disease_duration) {
      durations.push_back(*r.disease_duration);
      outcome.push_back(ok ? 1.0 : 0.0);
    }
  }
  const double ca = report.corrected_alpha;
  report.rows.push_back(compare("Sex", "Male", "Female", male, female, ca));
  report.rows.push_back(compare("Ethnicity", "White", "Non-White", white, nonwhite, ca));
  report.rows.push_back(compare("Age", "Below 50", "50 and Above", young, old, ca));
  report.rows.push_back(compare("Recording Environment", "Home Recorded", "Clinical Setup", home, clinic, ca));
  report.rows.push_back(compare("Recording Environment", "Home Recorded", "PD Care Facility", home, care, ca));
  report.rows.push_back(compare("Recording Environment", "Clinical Setup", "PD Care Facility", clinic, care, ca));

  report.duration_n = durations.size();
  if (durations.size() >= 4) {
    try {
      report.duration = spearman(durations, outcome);
    } catch (const std::invalid_argument&) {
      // constant outcome or durations: leave the correlation empty
    }
  }
  return report;
}

std::string bias_report_csv(const BiasReport& report) {
  std::string out = "property,group,n,accuracy,p,significant\n";
  for (const auto& r : report.rows) {
    const std::string p = r.p ? io::format_double(*r.p) : "";
    const std::string sig = r.p ? (r.significant ? "yes" : "no") : "not-computable";
    out += io::csv_field(r.property) + ',' + io::csv_field(r.group_a) + ',' + std::to_string(r.n_a) + ',' +
           io::format_double(r.accuracy_a) + ',' + p + ',' + sig + '\n';
    out += io::csv_field(r.property) + ',' + io::csv_field(r.group_b) + ',' + std::to_string(r.n_b) + ',' +
           io::format_double(r.accuracy_b) + ',' + p + ',' + sig + '\n';
  }
  return out;
}

}  // namespace pangram::stats
