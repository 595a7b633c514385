#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bpa/density.hpp"
#include "bpa/forest.hpp"
#include "bpa/knn_mi.hpp"
#include "bpa/linear_model.hpp"

namespace bpa {

enum class Method { EC, R2 };

struct BpaConfig {
  Method method = Method::EC;
  Criterion criterion = Criterion::BIC;
  VarianceMode variance = VarianceMode::Homogeneous;
  int cv_folds = 10;           // R2 scoring only
  DensityCvConfig density_cv;  // EC scoring only
  KraskovConfig kraskov;       // EC pruning only
  double alpha = 0.05;         // t-test pruning level (R2)
  uint64_t seed = 0;
};

struct StepScore {
  int k = 0;
  int n_vars = 0;
  bool skipped = false;             // singleton step under the EC method
  double score = 0.0;               // EC or adjusted R^2
  std::optional<double> ecd;
  std::optional<double> r2;         // unadjusted, R2 method
  std::optional<double> cv_mse;     // R2 method
  std::optional<double> in_sample_mse;
};

struct VariableTest {
  int variable = -1;
  std::string name;
  double statistic = 0.0;  // Kraskov MI or t
  double p_value = 1.0;
  bool kept = false;
};

struct SelectionReport {
  bool isolated_target = false;
  int target = -1;
  std::string target_name;
  Forest model_0;
  std::vector<StepScore> path_step_scores;
  int best_k = 0;
  std::vector<int> m_w;    // best path-step variable indices
  std::vector<int> m_wf;   // pruned final set
  std::vector<VariableTest> per_variable_tests;
  std::vector<std::string> diagnostics;
  int dropped_rows = 0;
  BpaConfig config;
};

/// Runs the full pipeline: forest, path-steps from the target, per-step
/// scoring (EC or adjusted R^2, ties broken toward the smallest step), and
/// significance pruning of the winning step.
SelectionReport run_bpa(const MixedDataTable& table, int target,
                        const BpaConfig& cfg);

/// Per-step score table in emission order; singleton EC steps carry "-".
std::vector<std::pair<std::string, std::string>> score_profile(
    const SelectionReport& report);

std::string report_to_json(const SelectionReport& report,
                           const MixedDataTable& table);

void write_profile_csv(const SelectionReport& report, const std::string& path);

}  // namespace bpa
