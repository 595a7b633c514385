#include <doctest.h>

#include <cmath>
#include <vector>

#include "bpa/pairwise.hpp"
#include "bpa/rng.hpp"
#include "test_util.hpp"

using namespace bpa;
using namespace testutil;

namespace {

CellCounts counts_from(const std::vector<std::vector<int>>& rows) {
  CellCounts c;
  c.counts.resize(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      c.counts(i, j) = rows[i][j];
    }
  }
  c.row_margin = c.counts.rowwise().sum();
  c.col_margin = c.counts.colwise().sum().transpose();
  c.total = c.counts.sum();
  return c;
}

// independent G^2 route: deviance against expected counts E = n_u n_v / n
double g_squared(const CellCounts& c) {
  double g2 = 0.0;
  for (int i = 0; i < c.counts.rows(); ++i) {
    for (int j = 0; j < c.counts.cols(); ++j) {
      int o = c.counts(i, j);
      if (o == 0) continue;
      double e = double(c.row_margin[i]) * c.col_margin[j] / c.total;
      g2 += 2.0 * o * std::log(o / e);
    }
  }
  return g2;
}

double pearson_corr(const Vector& x, const Vector& y) {
  double mx = x.mean(), my = y.mean();
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("discrete MI hand cases") {
  SUBCASE("uniform table has zero MI") {
    auto r = discrete_pair_mi(counts_from({{10, 10}, {10, 10}}));
    CHECK(r.mi == doctest::Approx(0.0));
    CHECK(r.df == 1);
  }
  SUBCASE("diagonal table") {
    auto r = discrete_pair_mi(counts_from({{20, 0}, {0, 20}}));
    CHECK(r.mi == doctest::Approx(40.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(r.df == 1);
  }
  SUBCASE("3x4 degrees of freedom") {
    auto r = discrete_pair_mi(counts_from(
        {{3, 1, 2, 4}, {2, 2, 2, 1}, {1, 4, 1, 2}}));
    CHECK(r.df == 6);
  }
  SUBCASE("zero-margin level collapsed and flagged") {
    auto r = discrete_pair_mi(counts_from({{5, 5}, {0, 0}, {5, 5}}));
    CHECK(r.df == 1);  // (2-1)(2-1) after collapsing the empty row
    CHECK(r.flag == EdgeFlag::ZeroMarginCollapsed);
  }
}

TEST_CASE("discrete MI equals half the G-squared deviance") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    int lu = 2 + static_cast<int>(rng.below(3));
    int lv = 2 + static_cast<int>(rng.below(3));
    std::vector<std::vector<int>> rows(lu, std::vector<int>(lv));
    for (auto& row : rows) {
      for (auto& cell : row) cell = static_cast<int>(rng.below(30));
    }
    auto c = counts_from(rows);
    if (c.total == 0) continue;
    bool empty_margin = false;
    for (int i = 0; i < c.row_margin.size(); ++i) {
      if (c.row_margin[i] == 0) empty_margin = true;
    }
    for (int j = 0; j < c.col_margin.size(); ++j) {
      if (c.col_margin[j] == 0) empty_margin = true;
    }
    if (empty_margin) continue;
    auto r = discrete_pair_mi(c);
    CHECK(r.mi == doctest::Approx(0.5 * g_squared(c)).epsilon(1e-10));
  }
}

TEST_CASE("level permutation leaves discrete MI unchanged") {
  Rng rng(5);
  std::vector<int> u(150), v(150);
  for (int i = 0; i < 150; ++i) {
    u[i] = static_cast<int>(rng.below(3));
    v[i] = (u[i] + static_cast<int>(rng.below(2))) % 3;
  }
  MixedDataTable t1({disc("u", {"0", "1", "2"}), disc("v", {"0", "1", "2"})},
                    {u, v});
  std::vector<int> u_perm(u);
  for (auto& x : u_perm) x = (x + 1) % 3;  // relabel levels
  MixedDataTable t2({disc("u", {"0", "1", "2"}), disc("v", {"0", "1", "2"})},
                    {u_perm, v});
  auto a = discrete_pair_mi(cross_tabulate(t1, 0, 1));
  auto b = discrete_pair_mi(cross_tabulate(t2, 0, 1));
  CHECK(a.mi == doctest::Approx(b.mi).epsilon(1e-12));
  CHECK(a.df == b.df);
}

TEST_CASE("gaussian MI") {
  SUBCASE("orthogonal centered sample") {
    auto r = gaussian_pair_mi(vec({-1, 0, 1}), vec({1, 0, 1}));
    CHECK(r.mi == doctest::Approx(0.0));
    CHECK(r.df == 1);
  }
  SUBCASE("exact collinearity reports the infinite sentinel") {
    auto r = gaussian_pair_mi(vec({1, 2, 3, 4}), vec({2, 4, 6, 8}));
    CHECK(r.flag == EdgeFlag::DegenerateCorrelation);
    CHECK(std::isinf(r.mi));
  }
  SUBCASE("constant column") {
    CHECK_THROWS_AS(gaussian_pair_mi(vec({1, 1, 1}), vec({1, 2, 3})), Error);
  }
  SUBCASE("matches the direct correlation formula on a fixture") {
    Rng rng(314);
    int n = 100;
    Vector x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = 0.6 * x[i] + 0.8 * rng.normal();
    }
    double rho = pearson_corr(x, y);
    auto r = gaussian_pair_mi(x, y);
    CHECK(r.mi ==
          doctest::Approx(-0.5 * n * std::log(1.0 - rho * rho)).epsilon(1e-10));
  }
}

TEST_CASE("gaussian MI is affine invariant") {
  Rng rng(7);
  int n = 80;
  Vector x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = x[i] + rng.normal();
  }
  auto base = gaussian_pair_mi(x, y);
  auto scaled = gaussian_pair_mi((-3.7 * x.array() + 11.0).matrix(), y);
  CHECK(base.mi == doctest::Approx(scaled.mi).epsilon(1e-10));
}

TEST_CASE("mixed MI hand cases") {
  MixedDataTable t({disc("g", {"A", "B"}), cont("x")},
                   {std::vector<int>{0, 0, 1, 1}, vec({0, 1, 2, 3})});
  auto stats = group_stats(t, 0, 1);

  SUBCASE("identical groups give zero homogeneous MI") {
    MixedDataTable same({disc("g", {"A", "B"}), cont("x")},
                        {std::vector<int>{0, 0, 0, 1, 1, 1},
                         vec({1, 2, 3, 1, 2, 3})});
    auto r = mixed_pair_mi(group_stats(same, 0, 1), VarianceMode::Homogeneous);
    CHECK(r.mi == doctest::Approx(0.0));
  }
  SUBCASE("homogeneous separated groups") {
    auto r = mixed_pair_mi(stats, VarianceMode::Homogeneous);
    CHECK(r.mi == doctest::Approx(2.0 * std::log(5.0)).epsilon(1e-12));
    CHECK(r.df == 1);
  }
  SUBCASE("heterogeneous coincides for equal group variances") {
    auto r = mixed_pair_mi(stats, VarianceMode::Heterogeneous);
    CHECK(r.mi == doctest::Approx(2.0 * std::log(5.0)).epsilon(1e-12));
    CHECK(r.df == 2);
  }
  SUBCASE("zero group variance falls back to homogeneous") {
    MixedDataTable degen({disc("g", {"A", "B"}), cont("x")},
                         {std::vector<int>{0, 0, 1, 1}, vec({2, 2, 5, 6})});
    auto r = mixed_pair_mi(group_stats(degen, 0, 1),
                           VarianceMode::Heterogeneous);
    CHECK(r.flag == EdgeFlag::HeterogeneousFallback);
    CHECK(r.df == 1);
  }
}

TEST_CASE("balanced two-group equal-variance design: het equals hom") {
  Rng rng(17);
  std::vector<double> base(40);
  for (auto& v : base) v = rng.normal();
  std::vector<int> g;
  std::vector<double> x;
  for (int i = 0; i < 40; ++i) {
    g.push_back(0);
    x.push_back(base[i]);
  }
  for (int i = 0; i < 40; ++i) {
    g.push_back(1);
    x.push_back(base[i] + 2.5);  // same shape, shifted: equal variances
  }
  MixedDataTable t({disc("g", {"A", "B"}), cont("x")}, {g, from_std(x)});
  auto stats = group_stats(t, 0, 1);
  auto hom = mixed_pair_mi(stats, VarianceMode::Homogeneous);
  auto het = mixed_pair_mi(stats, VarianceMode::Heterogeneous);
  CHECK(hom.mi == doctest::Approx(het.mi).epsilon(1e-10));
}

TEST_CASE("all_pairwise_scores") {
  SUBCASE("pair count and ordering") {
    Rng rng(3);
    Vector a(30), b(30), c(30);
    for (int i = 0; i < 30; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      c[i] = rng.normal();
    }
    MixedDataTable t({cont("a"), cont("b"), cont("c")}, {a, b, c});
    auto scores = all_pairwise_scores(t, VarianceMode::Homogeneous);
    REQUIRE(scores.size() == 3);
    CHECK(scores[0].u == 0);
    CHECK(scores[0].v == 1);
    CHECK(scores[1].v == 2);
    CHECK(scores[2].u == 1);
    for (const auto& e : scores) {
      CHECK(e.weight_aic == doctest::Approx(e.mi - 2.0 * e.df));
      CHECK(e.weight_bic ==
            doctest::Approx(e.mi - std::log(30.0) * e.df));
    }
  }
  SUBCASE("independent columns get negative BIC weights") {
    Rng rng(12);
    int n = 1000;
    Vector a(n), b(n);
    std::vector<int> g(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      g[i] = static_cast<int>(rng.below(3));
    }
    MixedDataTable t({cont("a"), cont("b"), disc("g", {"0", "1", "2"})},
                     {a, b, g});
    auto scores = all_pairwise_scores(t, VarianceMode::Homogeneous);
    for (const auto& e : scores) CHECK(e.weight_bic < 0.0);
  }
  SUBCASE("mixed pair kind follows the variance mode") {
    MixedDataTable t({disc("g", {"A", "B"}), cont("x")},
                     {std::vector<int>{0, 1, 0, 1}, vec({1, 2, 3, 4})});
    auto hom = all_pairwise_scores(t, VarianceMode::Homogeneous);
    auto het = all_pairwise_scores(t, VarianceMode::Heterogeneous);
    REQUIRE(hom.size() == 1);
    CHECK(hom[0].kind == PairKind::MixHom);
    CHECK(het[0].kind == PairKind::MixHet);
  }
  SUBCASE("BIC never exceeds AIC once ln n >= 2") {
    Rng rng(8);
    int n = 50;  // ln 50 > 2
    Vector a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = 0.5 * a[i] + rng.normal();
    }
    MixedDataTable t({cont("a"), cont("b")}, {a, b});
    auto scores = all_pairwise_scores(t, VarianceMode::Homogeneous);
    CHECK(scores[0].weight_bic <= scores[0].weight_aic);
  }
}

TEST_CASE("lr_test") {
  SUBCASE("zero MI gives p = 1") {
    auto t = lr_test(0.0, 1);
    CHECK(t.statistic == 0.0);
    CHECK(t.p_value == doctest::Approx(1.0));
  }
  SUBCASE("chi-squared 95th percentile") {
    auto t = lr_test(1.92, 1);
    CHECK(t.statistic == doctest::Approx(3.84));
    CHECK(t.p_value == doctest::Approx(0.05).epsilon(0.01));
  }
  SUBCASE("huge statistic vanishes") {
    auto t = lr_test(40.0 * std::log(2.0), 1);
    CHECK(t.p_value < 1e-12);
  }
}
