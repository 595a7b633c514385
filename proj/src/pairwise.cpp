#include "bpa/pairwise.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "bpa/parallel.hpp"
#include "bpa/special.hpp"

namespace bpa {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* pair_kind_name(PairKind k) {
  switch (k) {
    case PairKind::DD: return "DD";
    case PairKind::CC: return "CC";
    case PairKind::MixHom: return "MixHom";
    case PairKind::MixHet: return "MixHet";
  }
  return "?";
}

const char* edge_flag_name(EdgeFlag f) {
  switch (f) {
    case EdgeFlag::None: return "";
    case EdgeFlag::ConstantColumn: return "constant_column";
    case EdgeFlag::DegenerateCorrelation: return "degenerate_correlation";
    case EdgeFlag::ZeroMarginCollapsed: return "zero_margin_collapsed";
    case EdgeFlag::HeterogeneousFallback: return "heterogeneous_fallback";
    case EdgeFlag::PerfectSeparation: return "perfect_separation";
  }
  return "";
}

MiResult discrete_pair_mi(const CellCounts& counts) {
  MiResult out;
  const int n = counts.total;
  if (n <= 0) throw Error(ErrorCode::EmptyTable, "empty contingency table");

  int lu = 0, lv = 0;
  for (int i = 0; i < counts.row_margin.size(); ++i) {
    if (counts.row_margin[i] > 0) ++lu;
  }
  for (int j = 0; j < counts.col_margin.size(); ++j) {
    if (counts.col_margin[j] > 0) ++lv;
  }
  if (lu < counts.row_margin.size() || lv < counts.col_margin.size()) {
    out.flag = EdgeFlag::ZeroMarginCollapsed;
  }
  if (lu <= 1 || lv <= 1) {
    out.mi = 0.0;
    out.df = 1;
    out.flag = EdgeFlag::ConstantColumn;
    return out;
  }

  double mi = 0.0;
  for (int i = 0; i < counts.counts.rows(); ++i) {
    for (int j = 0; j < counts.counts.cols(); ++j) {
      int nij = counts.counts(i, j);
      if (nij == 0) continue;  // x ln x -> 0
      mi += nij * std::log(double(nij) * n /
                           (double(counts.row_margin[i]) *
                            counts.col_margin[j]));
    }
  }
  out.mi = std::max(0.0, mi);
  out.df = (lu - 1) * (lv - 1);
  return out;
}

MiResult gaussian_pair_mi(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::InvalidArgument, "length mismatch");
  }
  const int n = static_cast<int>(x.size());
  if (n < 3) throw Error(ErrorCode::TooFewRows, "need N >= 3");

  Vector xc = x.array() - x.mean();
  Vector yc = y.array() - y.mean();
  double sx = xc.squaredNorm();
  double sy = yc.squaredNorm();
  if (sx == 0.0 || sy == 0.0) {
    throw Error(ErrorCode::ConstantColumn, "constant continuous column");
  }
  double rho = xc.dot(yc) / std::sqrt(sx * sy);
  MiResult out;
  out.df = 1;
  if (std::fabs(rho) >= 1.0 - 1e-12) {
    out.mi = kInf;
    out.flag = EdgeFlag::DegenerateCorrelation;
    return out;
  }
  out.mi = std::max(0.0, -0.5 * n * std::log1p(-rho * rho));
  return out;
}

MiResult mixed_pair_mi(const GroupStats& stats, VarianceMode mode) {
  MiResult out;
  const int n = stats.total;
  int observed = 0;
  for (int ni : stats.n) {
    if (ni > 0) ++observed;
  }
  if (stats.grand_variance <= 0.0) {
    out.flag = EdgeFlag::ConstantColumn;
    return out;
  }
  if (observed <= 1) {
    out.flag = EdgeFlag::ConstantColumn;
    return out;
  }

  double pooled = 0.0;
  bool degenerate_group = false;
  for (size_t l = 0; l < stats.n.size(); ++l) {
    if (stats.n[l] == 0) continue;
    pooled += stats.n[l] * stats.variance[l];
    if (stats.variance[l] <= 0.0) degenerate_group = true;
  }
  pooled /= n;

  if (mode == VarianceMode::Heterogeneous && !degenerate_group) {
    double mi = 0.5 * n * std::log(stats.grand_variance);
    for (size_t l = 0; l < stats.n.size(); ++l) {
      if (stats.n[l] == 0) continue;
      mi -= 0.5 * stats.n[l] * std::log(stats.variance[l]);
    }
    out.mi = std::max(0.0, mi);
    out.df = 2 * (observed - 1);
    return out;
  }

  if (mode == VarianceMode::Heterogeneous) {
    out.flag = EdgeFlag::HeterogeneousFallback;
  }
  if (pooled <= 0.0) {
    // all groups internally constant but means differ
    out.mi = kInf;
    out.df = observed - 1;
    out.flag = EdgeFlag::PerfectSeparation;
    return out;
  }
  out.mi = std::max(0.0, 0.5 * n * std::log(stats.grand_variance / pooled));
  out.df = observed - 1;
  return out;
}

namespace {

EdgeScore score_pair(const MixedDataTable& table, int u, int v,
                     VarianceMode mode) {
  EdgeScore e;
  e.u = u;
  e.v = v;
  const bool du = table.is_discrete(u);
  const bool dv = table.is_discrete(v);
  MiResult r;
  if (du && dv) {
    e.kind = PairKind::DD;
    r = discrete_pair_mi(cross_tabulate(table, u, v));
  } else if (!du && !dv) {
    e.kind = PairKind::CC;
    try {
      r = gaussian_pair_mi(table.continuous(u), table.continuous(v));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::ConstantColumn) throw;
      r.mi = 0.0;
      r.df = 1;
      r.flag = EdgeFlag::ConstantColumn;
    }
  } else {
    e.kind = mode == VarianceMode::Homogeneous ? PairKind::MixHom
                                               : PairKind::MixHet;
    int d = du ? u : v;
    int c = du ? v : u;
    r = mixed_pair_mi(group_stats(table, d, c), mode);
  }

  e.mi = r.mi;
  e.df = std::max(1, r.df);
  e.flag = r.flag;
  const int n = table.n_rows();
  if (r.flag == EdgeFlag::ConstantColumn) {
    // carries no usable signal; keep it out of any forest
    e.weight_aic = -kInf;
    e.weight_bic = -kInf;
  } else if (std::isinf(r.mi)) {
    e.weight_aic = kInf;
    e.weight_bic = kInf;
  } else {
    e.weight_aic = r.mi - 2.0 * e.df;
    e.weight_bic = r.mi - std::log(double(n)) * e.df;
  }
  return e;
}

}  // namespace

std::vector<EdgeScore> all_pairwise_scores(const MixedDataTable& table,
                                           VarianceMode mode) {
  const int p = table.n_vars();
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(p * (p - 1) / 2);
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) pairs.emplace_back(u, v);
  }
  std::vector<EdgeScore> scores(pairs.size());
  parallel_for(pairs.size(), [&](size_t i) {
    scores[i] = score_pair(table, pairs[i].first, pairs[i].second, mode);
  });
  return scores;  // already ordered by (u, v)
}

LrTest lr_test(double mi, int df) {
  LrTest t;
  t.statistic = 2.0 * mi;
  t.p_value = chi_squared_sf(t.statistic, df);
  return t;
}

void write_scores_csv(const std::vector<EdgeScore>& scores,
                      const MixedDataTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  out << "u,v,kind,mi,df,weight_aic,weight_bic,p_value,flag\n";
  char buf[40];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& e : scores) {
    double p = std::isfinite(e.mi) ? lr_test(e.mi, e.df).p_value : 0.0;
    out << table.spec(e.u).name << ',' << table.spec(e.v).name << ','
        << pair_kind_name(e.kind) << ',' << fmt(e.mi) << ',' << e.df << ','
        << fmt(e.weight_aic) << ',' << fmt(e.weight_bic) << ',' << fmt(p)
        << ',' << edge_flag_name(e.flag) << '\n';
  }
}

}  // namespace bpa
