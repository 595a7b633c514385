#include "bpa/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "bpa/parallel.hpp"
#include "bpa/rng.hpp"

namespace bpa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Equal-frequency discretization into ceil(n^(1/3)) bins; bin boundaries are
// value quantiles, so identical values always share a bin.
std::vector<int> discretize(const Vector& x, int bins) {
  const int n = static_cast<int>(x.size());
  std::vector<double> sorted(x.data(), x.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int b = 1; b < bins; ++b) {
    edges.push_back(sorted[static_cast<size_t>(double(n) * b / bins)]);
  }
  std::vector<int> codes(n);
  for (int i = 0; i < n; ++i) {
    int c = 0;
    for (double e : edges) {
      if (x[i] >= e) ++c;
    }
    codes[i] = c;
  }
  return codes;
}

std::vector<int> column_codes(const MixedDataTable& table, int j) {
  if (table.is_discrete(j)) return table.codes(j);
  int bins = static_cast<int>(
      std::ceil(std::pow(double(table.n_rows()), 1.0 / 3.0)));
  return discretize(table.continuous(j), std::max(2, bins));
}

double entropy_of(const std::vector<int>& codes) {
  std::map<int, int> counts;
  for (int c : codes) counts[c] += 1;
  double n = static_cast<double>(codes.size());
  double h = 0.0;
  for (const auto& [c, m] : counts) {
    double p = m / n;
    h -= p * std::log(p);
  }
  return h;
}

double mi_of(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, int> joint;
  std::map<int, int> ma, mb;
  for (size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ma[a[i]] += 1;
    mb[b[i]] += 1;
  }
  double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (const auto& [cell, m] : joint) {
    double pij = m / n;
    double pi = ma[cell.first] / n;
    double pj = mb[cell.second] / n;
    mi += pij * std::log(pij / (pi * pj));
  }
  return std::max(0.0, mi);
}

}  // namespace

double varrank_entropy(const MixedDataTable& table, int j) {
  return entropy_of(column_codes(table, j));
}

double varrank_mi(const MixedDataTable& table, int a, int b) {
  return mi_of(column_codes(table, a), column_codes(table, b));
}

VarrankRanking varrank_select(const MixedDataTable& table, int target,
                              int m_picks, VarrankScheme scheme) {
  VarrankRanking out;
  out.scheme = scheme;

  std::vector<std::vector<int>> codes(table.n_vars());
  std::vector<double> entropy(table.n_vars());
  for (int j = 0; j < table.n_vars(); ++j) {
    codes[j] = column_codes(table, j);
    entropy[j] = entropy_of(codes[j]);
  }

  for (int j = 0; j < table.n_vars(); ++j) {
    if (j == target) continue;
    if (entropy[j] <= 0.0) {
      out.excluded_constant.push_back(j);
    } else {
      out.candidates.push_back(j);
    }
  }
  if (m_picks > static_cast<int>(out.candidates.size())) {
    throw Error(ErrorCode::InvalidArgument,
                "cannot pick more variables than candidates");
  }

  std::vector<double> relevance(table.n_vars(), 0.0);
  for (int j : out.candidates) relevance[j] = mi_of(codes[j], codes[target]);

  std::vector<int> remaining = out.candidates;
  std::vector<int> selected;
  for (int step = 0; step < m_picks; ++step) {
    std::vector<double> row(out.candidates.size(), kNaN);
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < out.candidates.size(); ++c) {
      int j = out.candidates[c];
      if (std::find(remaining.begin(), remaining.end(), j) == remaining.end())
        continue;
      double redundancy = 0.0;
      for (int s : selected) {
        double scale =
            1.0 / (double(selected.size()) *
                   std::max(1e-12, std::min(entropy[j], entropy[s])));
        redundancy += scale * mi_of(codes[j], codes[s]);
      }
      double score;
      if (selected.empty()) {
        score = relevance[j];  // empty redundancy sum
      } else if (scheme == VarrankScheme::MID) {
        score = relevance[j] - redundancy;
      } else {
        score = relevance[j] / std::max(1e-12, redundancy);
      }
      row[c] = score;
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    out.score_matrix.push_back(row);
    selected.push_back(best);
    remaining.erase(std::find(remaining.begin(), remaining.end(), best));
  }
  out.selected = selected;
  return out;
}

void write_varrank_csv(const VarrankRanking& ranking,
                       const MixedDataTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  out << "step,picked";
  for (int j : ranking.candidates) out << ',' << table.spec(j).name;
  out << '\n';
  char buf[40];
  for (size_t s = 0; s < ranking.score_matrix.size(); ++s) {
    out << (s + 1) << ',' << table.spec(ranking.selected[s]).name;
    for (double v : ranking.score_matrix[s]) {
      if (std::isnan(v)) {
        out << ",";
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
      }
    }
    out << '\n';
  }
}

double elastic_net_objective(const Matrix& x_std, const Vector& y_std,
                             const Vector& beta, double lambda1,
                             double lambda2) {
  double rss = (y_std - x_std * beta).squaredNorm();
  return rss + lambda1 * beta.array().abs().sum() +
         lambda2 * beta.squaredNorm();
}

ElasticNetFit elastic_net_fit(const Matrix& x_std, const Vector& y_std,
                              double lambda1, double lambda2, double tol,
                              int max_iter) {
  const int p = static_cast<int>(x_std.cols());
  ElasticNetFit fit;
  fit.lambda1 = lambda1;
  fit.lambda2 = lambda2;
  fit.mixing = lambda1 + lambda2 > 0.0 ? lambda2 / (lambda1 + lambda2) : 0.0;
  fit.beta = Vector::Zero(p);

  Vector col_sq(p);
  for (int j = 0; j < p; ++j) col_sq[j] = x_std.col(j).squaredNorm();

  Vector residual = y_std;
  auto soft = [](double z, double g) {
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
  };

  for (int it = 0; it < max_iter; ++it) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      if (col_sq[j] + lambda2 <= 0.0) continue;
      double old = fit.beta[j];
      double rho = x_std.col(j).dot(residual) + col_sq[j] * old;
      double updated = soft(rho, 0.5 * lambda1) / (col_sq[j] + lambda2);
      if (updated != old) {
        residual += x_std.col(j) * (old - updated);
        fit.beta[j] = updated;
      }
      max_delta = std::max(max_delta, std::fabs(updated - old));
    }
    fit.iterations = it + 1;
    fit.objective_trace.push_back(
        elastic_net_objective(x_std, y_std, fit.beta, lambda1, lambda2));
    if (max_delta < tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

namespace {

struct Standardizer {
  Vector mean;
  Vector scale;  // standard deviation, 1 where constant

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    s.scale.resize(x.cols());
    for (int j = 0; j < x.cols(); ++j) {
      double var = (x.col(j).array() - s.mean[j]).square().sum() / x.rows();
      s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    Matrix out = x;
    for (int j = 0; j < x.cols(); ++j) {
      out.col(j) = (x.col(j).array() - mean[j]) / scale[j];
    }
    return out;
  }
};

Matrix predictor_matrix(const MixedDataTable& table, int target,
                        const std::vector<int>& vars,
                        const std::vector<int>& rows) {
  Design d = build_design_rows(table, target, vars, rows);
  return d.X.rightCols(d.X.cols() - 1);  // drop intercept
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

CompareResult compare_predictions(const MixedDataTable& table, int target,
                                  const std::vector<int>& selected,
                                  const CompareConfig& cfg) {
  const int n = table.n_rows();
  std::vector<int> all_predictors;
  for (int j = 0; j < table.n_vars(); ++j) {
    if (j != target) all_predictors.push_back(j);
  }

  CompareResult result;
  result.mse_bpa.assign(cfg.repeats, 0.0);
  result.mse_enet.assign(cfg.repeats, 0.0);

  parallel_for(cfg.repeats, [&](size_t r) {
    Rng rng(mix_seed(cfg.seed, r));
    std::vector<size_t> order = rng.permutation(n);
    int n_train = std::max(2, static_cast<int>(cfg.train_fraction * n));
    std::vector<int> train(order.begin(), order.begin() + n_train);
    std::vector<int> test(order.begin() + n_train, order.end());

    // OLS on the selected variables
    {
      Design dt = build_design_rows(table, target, selected, train);
      OlsFit fit = ols_fit(dt);
      Design dv = build_design_rows(table, target, selected, test);
      Vector pred = dv.X * fit.coefficients;
      result.mse_bpa[r] = (dv.y - pred).squaredNorm() / dv.y.size();
    }

    // elastic net over all candidate predictors, tuned by CV on the train set
    {
      Matrix xtr = predictor_matrix(table, target, all_predictors, train);
      Matrix xte = predictor_matrix(table, target, all_predictors, test);
      Vector ytr(train.size()), yte(test.size());
      const Vector& y = table.continuous(target);
      for (size_t i = 0; i < train.size(); ++i) ytr[i] = y[train[i]];
      for (size_t i = 0; i < test.size(); ++i) yte[i] = y[test[i]];

      Standardizer sx = Standardizer::fit(xtr);
      double ymean = ytr.mean();
      double yvar = (ytr.array() - ymean).square().sum() / ytr.size();
      double yscale = yvar > 0.0 ? std::sqrt(yvar) : 1.0;
      Matrix xs = sx.apply(xtr);
      Vector ys = (ytr.array() - ymean) / yscale;

      double lambda_max = 2.0 * (xs.transpose() * ys).array().abs().maxCoeff();
      if (lambda_max <= 0.0) lambda_max = 1.0;

      // CV folds within the training split
      Rng fold_rng(mix_seed(cfg.seed, 100000 + r));
      std::vector<size_t> forder = fold_rng.permutation(train.size());
      int folds = std::min<int>(cfg.cv_folds, static_cast<int>(train.size()));

      double best_cv = std::numeric_limits<double>::infinity();
      double best_l1 = lambda_max, best_l2 = 0.0;
      for (double mixing : cfg.mixings) {
        for (int li = 0; li < cfg.lambda_count; ++li) {
          double l1 = lambda_max *
                       std::pow(cfg.lambda_min_ratio,
                                double(li) / (cfg.lambda_count - 1));
          double l2 = mixing < 1.0 ? l1 * mixing / (1.0 - mixing) : l1;
          double cv_acc = 0.0;
          for (int f = 0; f < folds; ++f) {
            std::vector<int> tr_rows, va_rows;
            for (size_t i = 0; i < forder.size(); ++i) {
              if (static_cast<int>(i % folds) == f) {
                va_rows.push_back(static_cast<int>(forder[i]));
              } else {
                tr_rows.push_back(static_cast<int>(forder[i]));
              }
            }
            Matrix xf(tr_rows.size(), xs.cols());
            Vector yf(tr_rows.size());
            for (size_t i = 0; i < tr_rows.size(); ++i) {
              xf.row(i) = xs.row(tr_rows[i]);
              yf[i] = ys[tr_rows[i]];
            }
            ElasticNetFit efit = elastic_net_fit(xf, yf, l1, l2, 1e-6, 2000);
            double mse = 0.0;
            for (int va : va_rows) {
              double pred = xs.row(va).dot(efit.beta);
              double err = ys[va] - pred;
              mse += err * err;
            }
            cv_acc += mse / va_rows.size();
          }
          cv_acc /= folds;
          if (cv_acc < best_cv) {
            best_cv = cv_acc;
            best_l1 = l1;
            best_l2 = l2;
          }
        }
      }

      ElasticNetFit efit = elastic_net_fit(xs, ys, best_l1, best_l2);
      Matrix xts = sx.apply(xte);
      double mse = 0.0;
      for (int i = 0; i < xts.rows(); ++i) {
        double pred = ymean + yscale * xts.row(i).dot(efit.beta);
        double err = yte[i] - pred;
        mse += err * err;
      }
      result.mse_enet[r] = mse / xts.rows();
    }
  });

  for (int r = 0; r < cfg.repeats; ++r) {
    if (result.mse_bpa[r] < result.mse_enet[r]) ++result.bpa_wins;
  }
  result.median_mse_bpa = median_of(result.mse_bpa);
  result.median_mse_enet = median_of(result.mse_enet);
  return result;
}

void write_compare_csv(const CompareResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  out << "repeat,mse_bpa,mse_enet\n";
  char buf[40];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (size_t r = 0; r < result.mse_bpa.size(); ++r) {
    out << r << ',' << fmt(result.mse_bpa[r]) << ',' << fmt(result.mse_enet[r])
        << '\n';
  }
}

}  // namespace bpa
