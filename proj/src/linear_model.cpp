#include "bpa/linear_model.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "bpa/rng.hpp"
#include "bpa/special.hpp"

namespace bpa {

namespace {

std::vector<int> all_rows(int n) {
  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

Design build_design_rows(const MixedDataTable& table, int target,
                         const std::vector<int>& regressors,
                         const std::vector<int>& rows) {
  if (table.is_discrete(target)) {
    throw Error(ErrorCode::NotContinuous,
                "linear model target must be continuous");
  }
  const int n = static_cast<int>(rows.size());

  int cols = 1;
  for (int j : regressors) {
    if (j == target) {
      throw Error(ErrorCode::InvalidArgument, "target used as regressor");
    }
    cols += table.is_discrete(j) ? table.spec(j).level_count() - 1 : 1;
  }

  Design d;
  d.X.resize(n, cols);
  d.y.resize(n);
  d.column_names.assign(cols, "");
  d.column_variable.assign(cols, -1);

  const Vector& yfull = table.continuous(target);
  for (int i = 0; i < n; ++i) d.y[i] = yfull[rows[i]];

  d.X.col(0).setOnes();
  d.column_names[0] = "(intercept)";
  int c = 1;
  for (int j : regressors) {
    const auto& spec = table.spec(j);
    if (spec.is_discrete()) {
      const auto& codes = table.codes(j);
      for (int l = 1; l < spec.level_count(); ++l) {
        for (int i = 0; i < n; ++i) {
          d.X(i, c) = codes[rows[i]] == l ? 1.0 : 0.0;
        }
        d.column_names[c] = spec.name + "=" + spec.levels[l];
        d.column_variable[c] = j;
        ++c;
      }
    } else {
      const Vector& x = table.continuous(j);
      for (int i = 0; i < n; ++i) d.X(i, c) = x[rows[i]];
      d.column_names[c] = spec.name;
      d.column_variable[c] = j;
      ++c;
    }
  }
  return d;
}

Design build_design(const MixedDataTable& table, int target,
                    const std::vector<int>& regressors) {
  return build_design_rows(table, target, regressors, all_rows(table.n_rows()));
}

OlsFit ols_fit(const Design& design) {
  const int n = static_cast<int>(design.X.rows());
  const int cols = static_cast<int>(design.X.cols());
  const int p_used = cols - 1;
  if (n <= p_used + 1) {
    throw Error(ErrorCode::TooFewRows,
                "need n > p + 1 (n=" + std::to_string(n) +
                    ", p=" + std::to_string(p_used) + ")");
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(design.X);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    const auto& perm = qr.colsPermutation().indices();
    std::string bad;
    for (int k = qr.rank(); k < cols; ++k) {
      if (!bad.empty()) bad += ", ";
      bad += design.column_names[perm[k]];
    }
    throw Error(ErrorCode::RankDeficient, "dependent columns: " + bad);
  }

  OlsFit fit;
  fit.n = n;
  fit.p_used = p_used;
  fit.column_names = design.column_names;
  fit.column_variable = design.column_variable;
  fit.coefficients = qr.solve(design.y);

  Vector residuals = design.y - design.X * fit.coefficients;
  double rss = residuals.squaredNorm();
  double tss = (design.y.array() - design.y.mean()).square().sum();
  int df = n - p_used - 1;
  fit.residual_variance = rss / df;
  fit.in_sample_mse = rss / n;
  fit.r2 = tss > 0.0 ? 1.0 - rss / tss : 0.0;
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * double(n - 1) / df;

  // (X'X)^-1 through the pivoted R factor
  Matrix r = qr.matrixR().topLeftCorner(cols, cols)
                 .template triangularView<Eigen::Upper>();
  Matrix rinv = r.inverse();
  Matrix xtx_inv_perm = rinv * rinv.transpose();
  Matrix perm = qr.colsPermutation();
  Matrix xtx_inv = perm * xtx_inv_perm * perm.transpose();

  fit.standard_errors.resize(cols);
  fit.t_statistics.resize(cols);
  fit.p_values.resize(cols);
  for (int c = 0; c < cols; ++c) {
    fit.standard_errors[c] = std::sqrt(fit.residual_variance * xtx_inv(c, c));
    fit.t_statistics[c] = fit.standard_errors[c] > 0.0
                              ? fit.coefficients[c] / fit.standard_errors[c]
                              : 0.0;
    fit.p_values[c] = student_t_two_sided_p(fit.t_statistics[c], df);
  }
  return fit;
}

OlsFit ols_fit(const MixedDataTable& table, int target,
               const std::vector<int>& regressors) {
  return ols_fit(build_design(table, target, regressors));
}

CvResult kfold_cv_mse(const MixedDataTable& table, int target,
                      const std::vector<int>& regressors, int folds,
                      uint64_t seed) {
  const int n = table.n_rows();
  if (folds < 2 || folds > n) {
    throw Error(ErrorCode::InvalidArgument, "folds must be in [2, n]");
  }

  Rng rng(seed);
  std::vector<size_t> order = rng.permutation(n);

  // contiguous chunks of the shuffled order; first n % folds get one extra
  std::vector<std::vector<int>> fold_rows(folds);
  int base = n / folds, extra = n % folds, pos = 0;
  for (int f = 0; f < folds; ++f) {
    int size = base + (f < extra ? 1 : 0);
    for (int i = 0; i < size; ++i) {
      fold_rows[f].push_back(static_cast<int>(order[pos++]));
    }
  }

  int min_needed = 0;
  for (int j : regressors) {
    min_needed += table.is_discrete(j) ? table.spec(j).level_count() - 1 : 1;
  }
  for (const auto& f : fold_rows) {
    if (static_cast<int>(f.size()) < min_needed + 2) {
      throw Error(ErrorCode::FoldTooSmall,
                  "fold of " + std::to_string(f.size()) + " rows with " +
                      std::to_string(min_needed) + " regressor columns");
    }
  }

  CvResult out;
  out.folds = folds;
  out.seed = seed;
  for (int f = 0; f < folds; ++f) {
    std::vector<int> train;
    for (int g = 0; g < folds; ++g) {
      if (g != f) train.insert(train.end(), fold_rows[g].begin(),
                               fold_rows[g].end());
    }
    Design dt = build_design_rows(table, target, regressors, train);
    OlsFit fit = ols_fit(dt);
    Design dv = build_design_rows(table, target, regressors, fold_rows[f]);
    Vector pred = dv.X * fit.coefficients;
    out.fold_mse.push_back((dv.y - pred).squaredNorm() / dv.y.size());
  }
  out.mean_mse =
      std::accumulate(out.fold_mse.begin(), out.fold_mse.end(), 0.0) / folds;
  return out;
}

PruneResult prune_by_ttest(const MixedDataTable& table, int target,
                           const OlsFit& fit, double alpha) {
  // a variable survives if any of its design columns is significant
  std::set<int> significant;
  std::set<int> all_vars;
  for (size_t c = 1; c < fit.column_names.size(); ++c) {
    int var = fit.column_variable[c];
    all_vars.insert(var);
    if (fit.p_values[c] <= alpha) significant.insert(var);
  }

  PruneResult out;
  out.kept.assign(significant.begin(), significant.end());
  if (out.kept.empty()) {
    out.all_pruned = true;
    return out;
  }
  if (significant.size() == all_vars.size()) {
    out.refit = fit;  // nothing dropped
    return out;
  }
  out.refit = ols_fit(table, target, out.kept);
  return out;
}

}  // namespace bpa
