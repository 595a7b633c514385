#pragma once

#include <string>
#include <vector>

#include "bpa/data_table.hpp"

namespace bpa {

enum class Criterion { AIC, BIC };
enum class VarianceMode { Homogeneous, Heterogeneous };
enum class PairKind { DD, CC, MixHom, MixHet };

enum class EdgeFlag {
  None,
  ConstantColumn,         // a side carries no information; edge excluded
  DegenerateCorrelation,  // |corr| == 1; infinite MI sentinel
  ZeroMarginCollapsed,    // unobserved levels removed before df
  HeterogeneousFallback,  // zero group variance; homogeneous estimate used
  PerfectSeparation,      // pooled within-group variance is zero
};

const char* pair_kind_name(PairKind k);
const char* edge_flag_name(EdgeFlag f);

/// Penalized mutual-information score of one variable pair (u < v).
struct EdgeScore {
  int u = 0;
  int v = 0;
  double mi = 0.0;  // nats
  int df = 1;
  double weight_aic = 0.0;
  double weight_bic = 0.0;
  PairKind kind = PairKind::CC;
  EdgeFlag flag = EdgeFlag::None;

  double weight(Criterion c) const {
    return c == Criterion::AIC ? weight_aic : weight_bic;
  }
};

struct MiResult {
  double mi = 0.0;
  int df = 1;
  EdgeFlag flag = EdgeFlag::None;
};

/// MI of two discrete variables from their contingency table; equals half
/// the G-squared deviance. Unobserved levels are collapsed out before the
/// degrees of freedom (L_u - 1)(L_v - 1) are computed.
MiResult discrete_pair_mi(const CellCounts& counts);

/// Gaussian MI -N/2 ln(1 - rho^2) of two continuous columns; df = 1.
MiResult gaussian_pair_mi(const Vector& x, const Vector& y);

/// Mixed discrete/continuous MI from group statistics.
/// Homogeneous: N/2 ln(s0/s), df = L-1. Heterogeneous: N/2 ln(s0) -
/// 1/2 sum n_i ln(s_i), df = 2(L-1); falls back to homogeneous when a
/// group variance vanishes. L counts observed levels only.
MiResult mixed_pair_mi(const GroupStats& stats, VarianceMode mode);

/// All p(p-1)/2 pair scores, ordered by (u, v). Per-pair degeneracies are
/// reported through sentinel weights and flags; the sweep never aborts.
std::vector<EdgeScore> all_pairwise_scores(const MixedDataTable& table,
                                           VarianceMode mode);

struct LrTest {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Likelihood-ratio test of marginal independence: 2*MI ~ chi^2(df).
LrTest lr_test(double mi, int df);

/// CSV dump (u,v,kind,mi,df,weight_aic,weight_bic,p_value) of a sweep.
void write_scores_csv(const std::vector<EdgeScore>& scores,
                      const MixedDataTable& table, const std::string& path);

}  // namespace bpa
