#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpa/data_table.hpp"

namespace bpa {

struct BandwidthGrid {
  double lo = 0.25;   // multiples of the Silverman reference (continuous)
  double hi = 8.0;    // top of the grid; landing here smooths a
                      // conditioning variable out entirely
  int points = 13;    // log-spaced for continuous, uniform for discrete
  int max_passes = 5; // coordinate-descent sweeps
};

struct DensityCvConfig {
  BandwidthGrid grid;
  uint64_t seed = 0;
};

/// Fitted smoothing parameters. A conditioning variable whose parameter
/// reached the top of its range is treated as smoothed out: its kernel is
/// uniform and drops from the weights, so the variable is irrelevant.
struct Bandwidths {
  double target = 0.0;  // h0 for continuous Y, lambda_Y for discrete Y
  std::vector<double> conditioner;  // h_j or lambda_j
  std::vector<bool> smoothed_out;
};

/// Product-kernel conditional density f(y | x): Gaussian kernels on
/// continuous coordinates, Aitchison-Aitken on discrete ones, bandwidths
/// chosen by leave-one-out log-likelihood over a deterministic grid sweep
/// (ties prefer the smoother model). Immutable once fitted.
class ConditionalDensityModel {
 public:
  static ConditionalDensityModel fit(const MixedDataTable& table, int target,
                                     const std::vector<int>& conditioners,
                                     const DensityCvConfig& cv = {});

  int n() const { return n_; }
  int n_conditioners() const { return static_cast<int>(conditioners_.size()); }
  bool target_discrete() const { return target_discrete_; }
  const Bandwidths& bandwidths() const { return bandwidths_; }
  bool all_smoothed_out() const;
  double loo_log_likelihood() const { return loo_objective_; }
  int floored_points() const { return floored_; }

  /// f(y | x_row) with x_row a training row's conditioning values.
  double conditional_at(double y, int train_row) const;

  /// Model-implied marginal: the equal-weight mixture of the conditional
  /// over the observed conditioning points, (1/N) sum_n f(y | x_n).
  double mixture_marginal(double y) const;

  /// Plain kernel estimate of the target's marginal at the fitted target
  /// bandwidth.
  double marginal_kde(double y) const;

  /// Sample mutual information under the fitted model,
  /// mean_n[ln f(y_n|x_n) - ln f_mix(y_n)], clamped at 0.
  double sample_mi() const;

  /// Symmetric Kullback-Leibler divergence between the marginal and the
  /// conditional: the forward term is averaged over the joint sample, the
  /// reverse term over all (row, target) pairs as draws from the product
  /// measure. Clamped at 0 from below.
  double symmetric_kl() const;

 private:
  ConditionalDensityModel() = default;
  void finalize();

  int n_ = 0;
  bool target_discrete_ = false;
  int target_levels_ = 0;
  Vector y_;                      // values or level codes
  std::vector<Vector> xcols_;     // conditioning columns (codes as reals)
  std::vector<bool> xdiscrete_;
  std::vector<int> xlevels_;
  std::vector<int> conditioners_; // table indices, for reporting
  Bandwidths bandwidths_;
  double loo_objective_ = 0.0;

  Matrix weights_;      // W[i][m]: conditioning kernel between rows i, m
  Vector row_sums_;
  Vector mix_coeff_;    // c_j = column means of the normalized weights
  mutable int floored_ = 0;
  mutable bool stats_ready_ = false;
  mutable double fwd_ = 0.0, rev_ = 0.0;

  double target_kernel(double y, double y_train) const;
  void compute_divergences() const;
};

struct EcScore {
  int k = 0;
  double ec = 0.0;
  double ecd = 0.0;
  int n_vars = 0;
};

/// Entropy coefficient of one path-step: the symmetric KL divergence of the
/// fitted model divided by the number of variables in the step. Singleton
/// steps are rejected (their EC is defined as zero and skipped upstream).
EcScore ec_score(const ConditionalDensityModel& model, int k);

struct DensityCurve {
  std::vector<std::string> label;  // grid value or level label
  std::vector<double> y;
  std::vector<double> marginal;
  std::vector<double> conditional_mixture;
};

/// 512-point curves of the plain marginal and the model-implied mixture
/// marginal over [min - 3bw, max + 3bw] (levels for a discrete target).
DensityCurve density_curve(const ConditionalDensityModel& model,
                           const MixedDataTable& table, int target,
                           int grid_points = 512);

void write_density_csv(const DensityCurve& curve, const std::string& path);

}  // namespace bpa
