#include "bpa/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace bpa {

namespace {

constexpr double kFloor = 1e-300;
constexpr double kLogClamp = -700.0;  // exp() underflows to ~0 but stays finite
const double kInvSqrt2Pi = 0.3989422804014327;

double silverman(const Vector& x) {
  const int n = static_cast<int>(x.size());
  double mean = x.mean();
  double var = (x.array() - mean).square().sum() / (n - 1);
  return 1.06 * std::sqrt(var) * std::pow(double(n), -0.2);
}

double safe_log(double v, int* floored) {
  if (v < kFloor) {
    if (floored) ++(*floored);
    v = kFloor;
  }
  return std::log(v);
}

}  // namespace

ConditionalDensityModel ConditionalDensityModel::fit(
    const MixedDataTable& table, int target,
    const std::vector<int>& conditioners, const DensityCvConfig& cv) {
  if (conditioners.empty()) {
    throw Error(ErrorCode::InvalidArgument, "need at least one conditioner");
  }
  const int n = table.n_rows();
  if (n < 25) throw Error(ErrorCode::TooFewRows, "need n >= 25");

  ConditionalDensityModel m;
  m.n_ = n;
  m.target_discrete_ = table.is_discrete(target);
  m.target_levels_ = m.target_discrete_ ? table.spec(target).level_count() : 0;
  m.y_ = table.numeric_view(target);
  m.conditioners_ = conditioners;
  for (int j : conditioners) {
    if (j == target) {
      throw Error(ErrorCode::InvalidArgument, "target conditions on itself");
    }
    m.xcols_.push_back(table.numeric_view(j));
    m.xdiscrete_.push_back(table.is_discrete(j));
    m.xlevels_.push_back(table.is_discrete(j) ? table.spec(j).level_count()
                                              : 0);
  }

  const int P = std::max(3, cv.grid.points);
  const int d = static_cast<int>(conditioners.size());

  // Per-conditioner parameter ladders; the last rung smooths the variable
  // out of the weights entirely (uniform kernel).
  std::vector<std::vector<double>> ladder(d);
  std::vector<bool> forced_out(d, false);
  for (int j = 0; j < d; ++j) {
    if (m.xdiscrete_[j]) {
      int levels = m.xlevels_[j];
      if (levels <= 1) {
        forced_out[j] = true;
        continue;
      }
      double top = double(levels - 1) / levels;
      for (int t = 0; t < P; ++t) {
        ladder[j].push_back(top * t / (P - 1));
      }
    } else {
      double ref = silverman(m.xcols_[j]);
      if (!(ref > 0.0)) {
        forced_out[j] = true;
        continue;
      }
      for (int t = 0; t < P; ++t) {
        ladder[j].push_back(ref * cv.grid.lo *
                            std::pow(cv.grid.hi / cv.grid.lo,
                                     double(t) / (P - 1)));
      }
    }
  }

  std::vector<double> target_ladder;
  if (m.target_discrete_) {
    int levels = std::max(2, m.target_levels_);
    double top = double(levels - 1) / levels;
    for (int t = 0; t < P; ++t) target_ladder.push_back(top * t / (P - 1));
  } else {
    double ref = silverman(m.y_);
    if (!(ref > 0.0)) {
      throw Error(ErrorCode::ConstantColumn, "constant target");
    }
    for (int t = 0; t < P; ++t) {
      target_ladder.push_back(
          ref * cv.grid.lo *
          std::pow(cv.grid.hi / cv.grid.lo, double(t) / (P - 1)));
    }
  }

  // log-kernel matrix of conditioner j at parameter value v
  auto log_kernel = [&](int j, double v) {
    Matrix L(n, n);
    const Vector& x = m.xcols_[j];
    if (m.xdiscrete_[j]) {
      int levels = m.xlevels_[j];
      double match = std::max(std::log(std::max(1.0 - v, 0.0)), kLogClamp);
      double miss = std::max(std::log(std::max(v / (levels - 1), 0.0)),
                             kLogClamp);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
          L(i, k) = x[i] == x[k] ? match : miss;
        }
      }
    } else {
      double inv = -0.5 / (v * v);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
          double dxy = x[i] - x[k];
          L(i, k) = std::max(inv * dxy * dxy, kLogClamp);
        }
      }
    }
    return L;
  };

  auto target_matrix = [&](double v) {
    Matrix K(n, n);
    if (m.target_discrete_) {
      int levels = std::max(2, m.target_levels_);
      double match = 1.0 - v;
      double miss = v / (levels - 1);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
          K(i, k) = m.y_[i] == m.y_[k] ? match : miss;
        }
      }
    } else {
      double inv = -0.5 / (v * v);
      double norm = kInvSqrt2Pi / v;
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
          double dxy = m.y_[i] - m.y_[k];
          K(i, k) = norm * std::exp(inv * dxy * dxy);
        }
      }
    }
    return K;
  };

  // leave-one-out mean log conditional density
  auto objective = [&](const Matrix& W, const Matrix& K) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double den = 0.0, num = 0.0;
      for (int k = 0; k < n; ++k) {
        if (k == i) continue;
        den += W(i, k);
        num += W(i, k) * K(i, k);
      }
      double f = den > 0.0 ? num / den : 0.0;
      acc += std::log(std::max(f, kFloor));
    }
    return acc / n;
  };

  // state: selected rung per variable; cached log-kernels at the selection
  std::vector<int> sel(d, (P - 1) / 2);
  int target_sel = (P - 1) / 2;
  std::vector<Matrix> cur(d);
  for (int j = 0; j < d; ++j) {
    if (forced_out[j]) {
      sel[j] = P - 1;
      cur[j] = Matrix::Zero(n, n);
    } else {
      cur[j] = log_kernel(j, ladder[j][sel[j]]);
    }
  }
  auto sum_except = [&](int skip) {
    Matrix S = Matrix::Zero(n, n);
    for (int j = 0; j < d; ++j) {
      if (j != skip) S += cur[j];
    }
    return S;
  };

  Matrix Ky = target_matrix(target_ladder[target_sel]);
  double best_obj = -std::numeric_limits<double>::infinity();
  for (int pass = 0; pass < cv.grid.max_passes; ++pass) {
    bool changed = false;

    {
      Matrix W = sum_except(-1).array().exp();
      int best_t = target_sel;
      best_obj = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < P; ++t) {
        Matrix Kt = target_matrix(target_ladder[t]);
        double obj = objective(W, Kt);
        if (obj >= best_obj) {  // ties -> smoother
          best_obj = obj;
          best_t = t;
        }
      }
      if (best_t != target_sel) {
        target_sel = best_t;
        Ky = target_matrix(target_ladder[target_sel]);
        changed = true;
      }
    }

    for (int j = 0; j < d; ++j) {
      if (forced_out[j]) continue;
      Matrix base = sum_except(j);
      int best_t = sel[j];
      best_obj = -std::numeric_limits<double>::infinity();
      Matrix best_L;
      for (int t = 0; t < P; ++t) {
        // the top rung is the uniform kernel; it contributes nothing
        Matrix L = t == P - 1 ? Matrix::Zero(n, n)
                              : log_kernel(j, ladder[j][t]);
        Matrix W = (base + L).array().exp();
        double obj = objective(W, Ky);
        if (obj >= best_obj) {
          best_obj = obj;
          best_t = t;
          best_L = L;
        }
      }
      if (best_t != sel[j]) {
        sel[j] = best_t;
        cur[j] = best_L;
        changed = true;
      }
    }
    if (!changed) break;
  }

  m.bandwidths_.target = target_ladder[target_sel];
  for (int j = 0; j < d; ++j) {
    bool out = forced_out[j] || sel[j] == P - 1;
    double value = forced_out[j]
                       ? std::numeric_limits<double>::quiet_NaN()
                       : ladder[j][sel[j]];
    m.bandwidths_.conditioner.push_back(value);
    m.bandwidths_.smoothed_out.push_back(out);
  }

  {
    Matrix W = sum_except(-1).array().exp();
    m.loo_objective_ = objective(W, Ky);
    m.weights_ = std::move(W);
  }
  m.finalize();
  return m;
}

void ConditionalDensityModel::finalize() {
  row_sums_ = weights_.rowwise().sum();
  mix_coeff_ = Vector::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    double s = row_sums_[i];
    if (s > 0.0) {
      mix_coeff_ += weights_.row(i).transpose() / s;
    } else {
      mix_coeff_.array() += 1.0 / n_;  // degenerate row: uniform weights
    }
  }
  mix_coeff_ /= n_;
}

bool ConditionalDensityModel::all_smoothed_out() const {
  for (bool b : bandwidths_.smoothed_out) {
    if (!b) return false;
  }
  return true;
}

double ConditionalDensityModel::target_kernel(double y, double y_train) const {
  if (target_discrete_) {
    double lambda = bandwidths_.target;
    int levels = std::max(2, target_levels_);
    return y == y_train ? 1.0 - lambda : lambda / (levels - 1);
  }
  double h = bandwidths_.target;
  double u = (y - y_train) / h;
  return kInvSqrt2Pi / h * std::exp(-0.5 * u * u);
}

double ConditionalDensityModel::conditional_at(double y, int row) const {
  double den = row_sums_[row];
  if (den <= 0.0) return marginal_kde(y);
  double num = 0.0;
  for (int k = 0; k < n_; ++k) {
    num += weights_(row, k) * target_kernel(y, y_[k]);
  }
  return num / den;
}

double ConditionalDensityModel::mixture_marginal(double y) const {
  double acc = 0.0;
  for (int k = 0; k < n_; ++k) acc += mix_coeff_[k] * target_kernel(y, y_[k]);
  return acc;
}

double ConditionalDensityModel::marginal_kde(double y) const {
  double acc = 0.0;
  for (int k = 0; k < n_; ++k) acc += target_kernel(y, y_[k]);
  return acc / n_;
}

void ConditionalDensityModel::compute_divergences() const {
  if (stats_ready_) return;
  floored_ = 0;

  Matrix K(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int k = 0; k < n_; ++k) K(i, k) = target_kernel(y_[i], y_[k]);
  }
  Matrix V(n_, n_);
  for (int i = 0; i < n_; ++i) {
    double s = row_sums_[i];
    V.row(i) = s > 0.0 ? (weights_.row(i) / s).eval()
                       : Matrix::Constant(1, n_, 1.0 / n_);
  }
  Matrix F = V * K;  // F(i, m) = f(y_m | x_i)

  Vector fmix = Vector::Zero(n_);
  for (int mcol = 0; mcol < n_; ++mcol) {
    fmix[mcol] = mix_coeff_.dot(K.col(mcol));
  }

  double fwd = 0.0;
  for (int mcol = 0; mcol < n_; ++mcol) {
    fwd += safe_log(F(mcol, mcol), &floored_) - safe_log(fmix[mcol], &floored_);
  }
  fwd /= n_;

  double mean_log_f = 0.0;
  for (int i = 0; i < n_; ++i) {
    for (int mcol = 0; mcol < n_; ++mcol) {
      mean_log_f += safe_log(F(i, mcol), &floored_);
    }
  }
  mean_log_f /= double(n_) * n_;
  double mean_log_mix = 0.0;
  for (int mcol = 0; mcol < n_; ++mcol) {
    mean_log_mix += safe_log(fmix[mcol], &floored_);
  }
  mean_log_mix /= n_;

  fwd_ = fwd;
  rev_ = mean_log_mix - mean_log_f;
  stats_ready_ = true;
}

double ConditionalDensityModel::sample_mi() const {
  compute_divergences();
  return std::max(0.0, fwd_);
}

double ConditionalDensityModel::symmetric_kl() const {
  compute_divergences();
  return std::max(0.0, fwd_ + rev_);
}

EcScore ec_score(const ConditionalDensityModel& model, int k) {
  if (model.n_conditioners() < 2) {
    throw Error(ErrorCode::SingletonPathStep,
                "entropy coefficient needs at least two variables");
  }
  EcScore s;
  s.k = k;
  s.n_vars = model.n_conditioners();
  s.ec = model.symmetric_kl() / s.n_vars;
  s.ecd = s.ec / (s.ec + 1.0);
  return s;
}

DensityCurve density_curve(const ConditionalDensityModel& model,
                           const MixedDataTable& table, int target,
                           int grid_points) {
  DensityCurve curve;
  if (model.target_discrete()) {
    const auto& spec = table.spec(target);
    for (int l = 0; l < spec.level_count(); ++l) {
      curve.label.push_back(spec.levels[l]);
      curve.y.push_back(l);
      curve.marginal.push_back(model.marginal_kde(l));
      curve.conditional_mixture.push_back(model.mixture_marginal(l));
    }
    return curve;
  }
  const Vector& y = table.continuous(target);
  double bw = model.bandwidths().target;
  double lo = y.minCoeff() - 3.0 * bw;
  double hi = y.maxCoeff() + 3.0 * bw;
  char buf[40];
  for (int t = 0; t < grid_points; ++t) {
    double v = lo + (hi - lo) * t / (grid_points - 1);
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    curve.label.push_back(buf);
    curve.y.push_back(v);
    curve.marginal.push_back(model.marginal_kde(v));
    curve.conditional_mixture.push_back(model.mixture_marginal(v));
  }
  return curve;
}

void write_density_csv(const DensityCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  out << "y,marginal,conditional_mixture\n";
  char buf[40];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (size_t i = 0; i < curve.y.size(); ++i) {
    out << curve.label[i] << ',' << fmt(curve.marginal[i]) << ','
        << fmt(curve.conditional_mixture[i]) << '\n';
  }
}

}  // namespace bpa
