#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bpa/selection.hpp"
#include "test_util.hpp"

using namespace bpa;
using namespace testutil;

namespace {

MixedDataTable prostate() {
  auto schema = load_schema(std::string(BPA_DATA_DIR) +
                            "/prostate_schema.json");
  return load_csv(std::string(BPA_DATA_DIR) + "/prostate.csv", schema);
}

// Y depends on A; B hangs off A and adds nothing given A; D is detached noise
MixedDataTable planted_chain(int n, uint64_t seed) {
  Rng rng(seed);
  Vector y(n), a(n), b(n), d(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.normal();
    y[i] = a[i] + 0.8 * rng.normal();
    b[i] = a[i] + 0.4 * rng.normal();
    d[i] = rng.normal();
  }
  return MixedDataTable({cont("y"), cont("a"), cont("b"), cont("d")},
                        {y, a, b, d});
}

}  // namespace

TEST_CASE("prostate R2 pipeline matches the published selection") {
  auto table = prostate();
  BpaConfig cfg;
  cfg.method = Method::R2;
  cfg.criterion = Criterion::BIC;
  cfg.seed = 1;
  auto report = run_bpa(table, table.require("lpsa"), cfg);

  REQUIRE_FALSE(report.isolated_target);
  CHECK(report.path_step_scores.size() == 4);
  CHECK(report.best_k == 3);

  std::vector<std::string> kept;
  for (int j : report.m_wf) kept.push_back(table.spec(j).name);
  std::sort(kept.begin(), kept.end());
  CHECK(kept == std::vector<std::string>{"lcavol", "lweight", "svi"});

  SUBCASE("chain inclusion holds") {
    std::set<int> mw(report.m_w.begin(), report.m_w.end());
    for (int j : report.m_wf) CHECK(mw.count(j) == 1);
    CHECK(report.m_w.size() < static_cast<size_t>(table.n_vars()));
  }
  SUBCASE("scores carry both MSE flavours") {
    for (const auto& s : report.path_step_scores) {
      CHECK(s.cv_mse.has_value());
      CHECK(s.in_sample_mse.has_value());
    }
  }
}

TEST_CASE("planted chain: R2 method keeps only the direct neighbour") {
  int hits = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto table = planted_chain(400, 900 + seed);
    BpaConfig cfg;
    cfg.method = Method::R2;
    cfg.seed = seed;
    auto report = run_bpa(table, 0, cfg);
    if (report.isolated_target) continue;
    if (report.best_k == 1 && report.m_wf == std::vector<int>{1}) ++hits;
  }
  CHECK(hits >= 11);  // majority of seeds
}

TEST_CASE("independent target is isolated under BIC") {
  Rng rng(31);
  int n = 500;
  Vector y(n), a(n), b(n);
  for (int i = 0; i < n; ++i) {
    y[i] = rng.normal();
    a[i] = rng.normal();
    b[i] = a[i] + 0.5 * rng.normal();
  }
  MixedDataTable t({cont("y"), cont("a"), cont("b")}, {y, a, b});
  BpaConfig cfg;
  cfg.method = Method::R2;
  auto report = run_bpa(t, 0, cfg);
  CHECK(report.isolated_target);
  CHECK(report.m_w.empty());
  CHECK(report.m_wf.empty());
}

TEST_CASE("EC method skips singleton first steps") {
  auto table = planted_chain(300, 77);
  BpaConfig cfg;
  cfg.method = Method::EC;
  cfg.seed = 3;
  auto report = run_bpa(table, 0, cfg);
  REQUIRE_FALSE(report.isolated_target);
  REQUIRE(report.path_step_scores.size() >= 2);
  CHECK(report.path_step_scores[0].skipped);
  CHECK(report.best_k >= 2);
  auto profile = score_profile(report);
  CHECK(profile[0].second == "-");
}

TEST_CASE("EC method recovers a planted two-neighbour set") {
  // y has two relevant neighbours; z hangs off x1 and is conditionally
  // irrelevant; w_1 = {x1, x2} should win over w_2 = {x1, x2, z}
  int hits = 0;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(5000 + seed);
    int n = 400;
    Vector x1(n), x2(n), z(n), y(n);
    for (int i = 0; i < n; ++i) {
      x1[i] = rng.normal();
      x2[i] = rng.normal();
      y[i] = x1[i] + x2[i] + rng.normal();
      z[i] = x1[i] + 0.3 * rng.normal();
    }
    MixedDataTable t({cont("y"), cont("x1"), cont("x2"), cont("z")},
                     {y, x1, x2, z});
    BpaConfig cfg;
    cfg.method = Method::EC;
    cfg.seed = seed;
    auto report = run_bpa(t, 0, cfg);
    if (report.isolated_target) continue;
    std::vector<int> sorted_wf = report.m_wf;
    std::sort(sorted_wf.begin(), sorted_wf.end());
    if (report.best_k == 1 && sorted_wf == std::vector<int>{1, 2}) ++hits;
  }
  CHECK(hits >= 2);
}

TEST_CASE("positive rescaling leaves the R2 selection unchanged") {
  auto table = prostate();
  BpaConfig cfg;
  cfg.method = Method::R2;
  cfg.seed = 9;
  auto base = run_bpa(table, table.require("lpsa"), cfg);

  std::vector<VariableSpec> specs = table.specs();
  std::vector<MixedDataTable::Column> cols;
  for (int j = 0; j < table.n_vars(); ++j) {
    if (table.is_discrete(j)) {
      cols.push_back(table.codes(j));
    } else if (table.spec(j).name == "lpsa") {
      cols.push_back(table.continuous(j));
    } else {
      cols.push_back((table.continuous(j).array() * (3.0 + j)).matrix().eval());
    }
  }
  for (auto& s : specs) s.index = 0;
  MixedDataTable scaled(std::move(specs), std::move(cols));
  auto other = run_bpa(scaled, scaled.require("lpsa"), cfg);

  CHECK(base.best_k == other.best_k);
  CHECK(base.m_wf == other.m_wf);
  for (size_t i = 0; i < base.path_step_scores.size(); ++i) {
    CHECK(base.path_step_scores[i].score ==
          doctest::Approx(other.path_step_scores[i].score).epsilon(1e-10));
  }
}

TEST_CASE("reports are byte-identical across reruns") {
  auto table = prostate();
  BpaConfig cfg;
  cfg.method = Method::R2;
  cfg.seed = 4;
  auto a = run_bpa(table, table.require("lpsa"), cfg);
  auto b = run_bpa(table, table.require("lpsa"), cfg);
  CHECK(report_to_json(a, table) == report_to_json(b, table));
}

TEST_CASE("score profile shapes") {
  SelectionReport report;
  SUBCASE("empty") { CHECK(score_profile(report).empty()); }
  SUBCASE("ties preserved") {
    StepScore s1{1, 2, false, 0.5, {}, {}, {}};
    StepScore s2{2, 3, false, 0.5, {}, {}, {}};
    report.path_step_scores = {s1, s2};
    auto rows = score_profile(report);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].second == rows[1].second);
  }
}
