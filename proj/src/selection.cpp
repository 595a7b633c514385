#include "bpa/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bpa {

namespace {

std::vector<VarKind> kinds_of(const MixedDataTable& table) {
  std::vector<VarKind> kinds;
  kinds.reserve(table.n_vars());
  for (const auto& s : table.specs()) kinds.push_back(s.kind);
  return kinds;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SelectionReport run_bpa(const MixedDataTable& table, int target,
                        const BpaConfig& cfg) {
  SelectionReport report;
  report.config = cfg;
  report.target = target;
  report.target_name = table.spec(target).name;
  report.dropped_rows = table.dropped_rows();

  auto scores = all_pairwise_scores(table, cfg.variance);
  for (const auto& e : scores) {
    if (e.flag == EdgeFlag::DegenerateCorrelation ||
        e.flag == EdgeFlag::PerfectSeparation) {
      report.diagnostics.push_back(
          "pair (" + table.spec(e.u).name + ", " + table.spec(e.v).name +
          "): " + edge_flag_name(e.flag));
    }
  }
  report.model_0 = build_forest(scores, cfg.criterion, kinds_of(table));

  auto steps = path_steps(report.model_0, target);
  if (steps.empty()) {
    report.isolated_target = true;
    report.diagnostics.push_back(
        "target '" + report.target_name +
        "' is isolated in the forest; nothing to select");
    return report;
  }

  // Step 2: score each path-step
  for (const auto& step : steps) {
    StepScore s;
    s.k = step.k;
    s.n_vars = static_cast<int>(step.members.size());
    if (cfg.method == Method::EC) {
      if (s.n_vars < 2) {
        s.skipped = true;
        report.path_step_scores.push_back(s);
        continue;
      }
      DensityCvConfig cv = cfg.density_cv;
      cv.seed = mix_seed(cfg.seed, 100 + step.k);
      auto model = ConditionalDensityModel::fit(table, target, step.members,
                                                cv);
      if (model.all_smoothed_out()) {
        report.diagnostics.push_back(
            "path-step " + std::to_string(step.k) +
            ": every conditioning variable smoothed out");
      }
      if (model.floored_points() > 0) {
        report.diagnostics.push_back(
            "path-step " + std::to_string(step.k) + ": " +
            std::to_string(model.floored_points()) +
            " log-density evaluations floored");
      }
      EcScore ec = ec_score(model, step.k);
      s.score = ec.ec;
      s.ecd = ec.ecd;
    } else {
      OlsFit fit = ols_fit(table, target, step.members);
      s.score = fit.adj_r2;
      s.r2 = fit.r2;
      s.in_sample_mse = fit.in_sample_mse;
      try {
        CvResult cv = kfold_cv_mse(table, target, step.members, cfg.cv_folds,
                                   mix_seed(cfg.seed, 200 + step.k));
        s.cv_mse = cv.mean_mse;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::FoldTooSmall) throw;
        report.diagnostics.push_back("path-step " + std::to_string(step.k) +
                                     ": " + e.what());
      }
    }
    report.path_step_scores.push_back(s);
  }

  // Step 3: argmax with parsimony tie-break (|delta| <= 1e-9 is a tie)
  int best_idx = -1;
  for (size_t i = 0; i < report.path_step_scores.size(); ++i) {
    const auto& s = report.path_step_scores[i];
    if (s.skipped) continue;
    if (best_idx < 0 ||
        s.score > report.path_step_scores[best_idx].score + 1e-9) {
      best_idx = static_cast<int>(i);
    }
  }
  if (best_idx < 0) {
    report.isolated_target = true;
    report.diagnostics.push_back("no scorable path-step");
    return report;
  }
  report.best_k = report.path_step_scores[best_idx].k;
  report.m_w = steps[best_idx].members;

  // Step 4: significance pruning
  if (cfg.method == Method::EC) {
    Vector yv = table.numeric_view(target);
    for (int j : report.m_w) {
      KraskovConfig kc = cfg.kraskov;
      kc.seed = mix_seed(cfg.seed, 1000 + j);
      VariableTest t;
      t.variable = j;
      t.name = table.spec(j).name;
      try {
        auto res = independence_test(table.numeric_view(j), yv, kc);
        t.statistic = res.mi_hat;
        t.p_value = res.p_value;
        t.kept = res.reject;  // dependence established
      } catch (const Error& e) {
        t.kept = false;
        report.diagnostics.push_back("independence test for '" + t.name +
                                     "': " + e.what());
      }
      report.per_variable_tests.push_back(t);
      if (t.kept) report.m_wf.push_back(j);
    }
  } else {
    OlsFit fit = ols_fit(table, target, report.m_w);
    PruneResult pruned = prune_by_ttest(table, target, fit, cfg.alpha);
    if (pruned.all_pruned) {
      report.diagnostics.push_back(
          "every regressor of the best step failed the t-test");
    }
    for (size_t c = 1; c < fit.column_names.size(); ++c) {
      VariableTest t;
      t.variable = fit.column_variable[c];
      t.name = fit.column_names[c];
      t.statistic = fit.t_statistics[c];
      t.p_value = fit.p_values[c];
      t.kept = std::find(pruned.kept.begin(), pruned.kept.end(),
                         t.variable) != pruned.kept.end();
      report.per_variable_tests.push_back(t);
    }
    report.m_wf = pruned.kept;
  }
  std::sort(report.m_wf.begin(), report.m_wf.end());
  return report;
}

std::vector<std::pair<std::string, std::string>> score_profile(
    const SelectionReport& report) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& s : report.path_step_scores) {
    rows.emplace_back("w_" + std::to_string(s.k),
                      s.skipped ? "-" : fmt17(s.score));
  }
  return rows;
}

std::string report_to_json(const SelectionReport& report,
                           const MixedDataTable& table) {
  nlohmann::ordered_json doc;
  doc["target"] = report.target_name;
  doc["method"] = report.config.method == Method::EC ? "ec" : "r2";
  doc["isolated_target"] = report.isolated_target;

  std::vector<std::string> names;
  for (const auto& s : table.specs()) names.push_back(s.name);
  doc["model_0"] =
      nlohmann::ordered_json::parse(forest_to_json(report.model_0, names));

  doc["path_step_scores"] = nlohmann::ordered_json::array();
  for (const auto& s : report.path_step_scores) {
    nlohmann::ordered_json row;
    row["k"] = s.k;
    row["n_vars"] = s.n_vars;
    if (s.skipped) {
      row["score"] = "-";
    } else {
      row["score"] = s.score;
      if (s.ecd) row["ecd"] = *s.ecd;
      if (s.r2) row["r2"] = *s.r2;
      if (s.cv_mse) row["cv_mse"] = *s.cv_mse;
      if (s.in_sample_mse) row["in_sample_mse"] = *s.in_sample_mse;
    }
    doc["path_step_scores"].push_back(row);
  }
  doc["best_k"] = report.best_k;

  auto name_list = [&](const std::vector<int>& vars) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (int j : vars) arr.push_back(table.spec(j).name);
    return arr;
  };
  doc["M_w"] = name_list(report.m_w);
  doc["M_wf"] = name_list(report.m_wf);

  doc["per_variable_tests"] = nlohmann::ordered_json::array();
  for (const auto& t : report.per_variable_tests) {
    doc["per_variable_tests"].push_back({{"name", t.name},
                                         {"statistic", t.statistic},
                                         {"p_value", t.p_value},
                                         {"kept", t.kept}});
  }

  doc["diagnostics"] = report.diagnostics;
  doc["dropped_rows"] = report.dropped_rows;

  nlohmann::ordered_json cfg;
  cfg["method"] = report.config.method == Method::EC ? "ec" : "r2";
  cfg["criterion"] =
      report.config.criterion == Criterion::AIC ? "aic" : "bic";
  cfg["variance"] = report.config.variance == VarianceMode::Homogeneous
                        ? "homogeneous"
                        : "heterogeneous";
  cfg["cv_folds"] = report.config.cv_folds;
  cfg["alpha"] = report.config.alpha;
  cfg["kraskov_k"] = report.config.kraskov.k_neighbors;
  cfg["kraskov_permutations"] = report.config.kraskov.permutations;
  cfg["seed"] = report.config.seed;
  doc["provenance"] = {{"config", cfg}, {"version", "0.1.0"}};
  return doc.dump(2) + "\n";
}

void write_profile_csv(const SelectionReport& report,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  out << "path_step,score\n";
  for (const auto& [k, score] : score_profile(report)) {
    out << k << ',' << score << '\n';
  }
}

}  // namespace bpa
