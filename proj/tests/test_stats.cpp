#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pangram/errors.hpp"
#include "pangram/random.hpp"
#include "pangram/stats.hpp"

using namespace pangram;
using namespace pangram::stats;

TEST_CASE("fisher examples") {
  CHECK(std::abs(fisher_exact_two_sided({121, 12, 52, 20}) - 0.0010) < 0.0005);
  CHECK(std::abs(fisher_exact_two_sided({19, 0, 171, 28}) - 0.1423) < 0.0005);
  CHECK(fisher_exact_two_sided({5, 5, 5, 5}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(fisher_exact_two_sided({0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("fisher agrees with exact rational enumeration for totals up to 20") {
  for (uint64_t n = 1; n <= 20; ++n) {
    for (uint64_t r1 = 0; r1 <= n; ++r1) {
      for (uint64_t c1 = 0; c1 <= n; ++c1) {
        const auto fam = oracle::margin_family(r1, n - r1, c1);
        for (uint64_t a = fam.lo; a < fam.lo + fam.weight.size(); ++a) {
          const Table2x2 t{a, r1 - a, c1 - a, n - r1 - c1 + a};
          const double want = oracle::to_double(oracle::family_p(fam, a));
          const double got = fisher_exact_two_sided(t);
          CHECK(std::abs(got - want) <= 1e-10 * want);
          CHECK(oracle::to_double(oracle::fisher_exact(t)) == want);
        }
      }
    }
  }
}

TEST_CASE("published subgroup tables") {
  const double alpha_star = bonferroni(0.05, 6);
  for (const auto& row : fixture::subgroup_rows()) {
    CAPTURE(row.name);
    const double p = fisher_exact_two_sided(row.table);
    CHECK((p < alpha_star) == row.published_significant);
    // One published value cannot be reached from the reconstructed counts;
    // the acceptance report carries that discrepancy.
    if (std::string(row.name) != "home vs care") CHECK(std::abs(p - row.published_p) <= 0.005);
  }
  CHECK(fisher_exact_two_sided(fixture::subgroup_rows()[4].table) == doctest::Approx(1.0));
}

TEST_CASE("bonferroni") {
  CHECK(bonferroni(0.05, 6) == doctest::Approx(0.05 / 6.0));
  CHECK(std::round(bonferroni(0.05, 6) * 1e4) / 1e4 == 0.0083);
  CHECK(bonferroni(0.05, 1) == 0.05);
  CHECK(bonferroni(0.10, 2) == 0.05);
  CHECK_THROWS_AS(bonferroni(0.05, 0), std::invalid_argument);
}

TEST_CASE("average ranks") {
  const std::vector<double> x = {10, 20, 20, 5, 20};
  CHECK(average_ranks(x) == std::vector<double>{2, 4, 4, 1, 4});
}

TEST_CASE("spearman") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {2, 1, 4, 3, 5};
  CHECK(spearman(x, y).rho == doctest::Approx(0.8));
  CHECK(spearman(x, x).rho == doctest::Approx(1.0));
  const std::vector<double> rev = {5, 4, 3, 2, 1};
  CHECK(spearman(x, rev).rho == doctest::Approx(-1.0));
  // n = 5, sum d^2 <= 4: the identity, 4 adjacent swaps and 3 pairs of
  // disjoint adjacent swaps. Mirror images give the other tail: 16 of 120.
  CHECK(spearman(x, y, SpearmanMethod::exact_permutation).p == doctest::Approx(16.0 / 120.0));
  const std::vector<double> flat = {3, 3, 3, 3, 3};
  CHECK_THROWS(spearman(x, flat));
}

TEST_CASE("mann-whitney") {
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  const auto r = mann_whitney(a, b);
  CHECK(r.exact);
  CHECK(r.u == 0.0);
  CHECK(r.p == doctest::Approx(0.1));
  const auto swapped = mann_whitney(b, a);
  CHECK(swapped.u == 9.0);
  CHECK(swapped.p == doctest::Approx(r.p));
  CHECK(mann_whitney(a, a).p == doctest::Approx(1.0));
  CHECK_THROWS(mann_whitney(a, std::vector<double>{}));

  Rng rng(3);
  std::vector<double> big1, big2;
  for (int i = 0; i < 40; ++i) big1.push_back(rng.normal());
  for (int i = 0; i < 30; ++i) big2.push_back(rng.normal() + 3.0);
  const auto approx = mann_whitney(big1, big2);
  CHECK_FALSE(approx.exact);
  CHECK(approx.p < 1e-6);
}

TEST_CASE("subgroup bias report reproduces the published comparisons") {
  const auto cohort = fixture::subgroup_cohort();
  const auto report = subgroup_bias_report(cohort.records, cohort.correct);
  REQUIRE(report.rows.size() == 6);
  CHECK(report.corrected_alpha == doctest::Approx(0.05 / 6.0));
  for (size_t i = 0; i < 6; ++i) {
    const auto& want = fixture::subgroup_rows()[i];
    const auto& row = report.rows[i];
    CAPTURE(want.name);
    CHECK(row.n_a == want.table.a + want.table.b);
    CHECK(row.n_b == want.table.c + want.table.d);
    REQUIRE(row.p.has_value());
    CHECK(*row.p == fisher_exact_two_sided(want.table));
    CHECK(row.significant == want.published_significant);
  }
  const std::vector<bool> all(cohort.records.size(), true);
  for (const auto& row : subgroup_bias_report(cohort.records, all).rows) CHECK(*row.p == doctest::Approx(1.0));
  CHECK_THROWS_AS(subgroup_bias_report(cohort.records, std::vector<bool>(3, true)), DataError);
  CHECK(bias_report_csv(report).find("Home") != std::string::npos);
}

TEST_CASE("empty subgroup is not computable") {
  auto cohort = fixture::subgroup_cohort();
  for (auto& r : cohort.records) r.age.reset();
  const auto report = subgroup_bias_report(cohort.records, cohort.correct);
  CHECK_FALSE(report.rows[2].p.has_value());
  CHECK_FALSE(report.rows[2].significant);
}
