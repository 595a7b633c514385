#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpa/data_table.hpp"
#include "bpa/linear_model.hpp"

namespace bpa {

enum class VarrankScheme { MID, MIQ };

struct VarrankRanking {
  std::vector<int> selected;            // in pick order
  std::vector<std::vector<double>> score_matrix;  // step x candidate (NaN = out)
  std::vector<int> candidates;          // column order of the matrix
  VarrankScheme scheme = VarrankScheme::MID;
  std::vector<int> excluded_constant;   // zero-entropy variables, flagged
};

/// Greedy forward ranking by relevance I(x; target) against redundancy with
/// the already-selected set, scaled by 1/(|S| min(H(x), H(s))). Continuous
/// variables enter through equal-frequency binning into ceil(n^(1/3)) bins.
VarrankRanking varrank_select(const MixedDataTable& table, int target,
                              int m_picks, VarrankScheme scheme);

/// Plug-in entropy (nats) of a column after discretization.
double varrank_entropy(const MixedDataTable& table, int j);

/// Plug-in mutual information (nats) between two discretized columns.
double varrank_mi(const MixedDataTable& table, int a, int b);

void write_varrank_csv(const VarrankRanking& ranking,
                       const MixedDataTable& table, const std::string& path);

struct ElasticNetFit {
  Vector beta;              // coefficients on standardized predictors
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int iterations = 0;
  bool converged = false;
  double mixing = 0.0;      // lambda2 / (lambda1 + lambda2)
  std::vector<double> objective_trace;  // per-sweep checkpoints
};

/// Cyclic coordinate descent on |y - Xb|^2 + l1 |b|_1 + l2 |b|_2^2 for
/// standardized inputs; update b_j <- S(x_j'r_-j, l1/2) / (x_j'x_j + l2).
ElasticNetFit elastic_net_fit(const Matrix& x_std, const Vector& y_std,
                              double lambda1, double lambda2,
                              double tol = 1e-8, int max_iter = 100000);

double elastic_net_objective(const Matrix& x_std, const Vector& y_std,
                             const Vector& beta, double lambda1,
                             double lambda2);

struct CompareConfig {
  double train_fraction = 0.7;
  int repeats = 100;
  uint64_t seed = 0;
  int cv_folds = 10;          // elastic-net tuning folds
  int lambda_count = 50;
  double lambda_min_ratio = 1e-3;
  std::vector<double> mixings = {0.25, 0.5, 0.75};
};

struct CompareResult {
  std::vector<double> mse_bpa;    // per repeat, test MSE
  std::vector<double> mse_enet;
  int bpa_wins = 0;
  double median_mse_bpa = 0.0;
  double median_mse_enet = 0.0;
};

/// Repeated random splits: OLS on the selected variables vs a CV-tuned
/// elastic net over all candidate predictors, both scored on the held-out
/// rows in original units.
CompareResult compare_predictions(const MixedDataTable& table, int target,
                                  const std::vector<int>& selected,
                                  const CompareConfig& cfg);

void write_compare_csv(const CompareResult& result, const std::string& path);

}  // namespace bpa
