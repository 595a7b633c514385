#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpa/data_table.hpp"

namespace bpa {

/// Design matrix with an intercept column first. Discrete regressors are
/// expanded to L-1 dummy columns against the first observed level.
struct Design {
  Matrix X;                            // n x (1 + p_used)
  Vector y;
  std::vector<std::string> column_names;   // per X column
  std::vector<int> column_variable;        // variable index per X column
};

Design build_design(const MixedDataTable& table, int target,
                    const std::vector<int>& regressors);

Design build_design_rows(const MixedDataTable& table, int target,
                         const std::vector<int>& regressors,
                         const std::vector<int>& rows);

struct OlsFit {
  Vector coefficients;        // incl. intercept at index 0
  Vector standard_errors;
  Vector t_statistics;
  Vector p_values;            // two-sided
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double residual_variance = 0.0;  // RSS / (n - p_used - 1)
  double in_sample_mse = 0.0;      // RSS / n
  int n = 0;
  int p_used = 0;
  std::vector<std::string> column_names;
  std::vector<int> column_variable;
};

/// Least squares through a column-pivoted Householder QR; throws
/// RankDeficient naming the dependent columns.
OlsFit ols_fit(const Design& design);

OlsFit ols_fit(const MixedDataTable& table, int target,
               const std::vector<int>& regressors);

struct CvResult {
  int folds = 0;
  std::vector<double> fold_mse;
  double mean_mse = 0.0;
  uint64_t seed = 0;
};

/// Seeded h-fold cross-validated out-of-sample MSE of the OLS model.
CvResult kfold_cv_mse(const MixedDataTable& table, int target,
                      const std::vector<int>& regressors, int folds,
                      uint64_t seed);

struct PruneResult {
  std::vector<int> kept;   // regressor variable indices
  OlsFit refit;            // single refit on the kept set (when non-empty)
  bool all_pruned = false;
};

/// Drops every regressor whose p-value exceeds alpha (a dummy block stays if
/// any of its columns is significant), then refits once.
PruneResult prune_by_ttest(const MixedDataTable& table, int target,
                           const OlsFit& fit, double alpha);

}  // namespace bpa
