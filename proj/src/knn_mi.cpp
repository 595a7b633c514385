#include "bpa/knn_mi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bpa/parallel.hpp"
#include "bpa/special.hpp"

namespace bpa {

Vector jitter(const Vector& x, Rng& rng) {
  double lo = x.minCoeff();
  double hi = x.maxCoeff();
  if (hi <= lo) throw Error(ErrorCode::AllTied, "constant column");
  double scale = 1e-10 * (hi - lo);
  Vector out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = x[i] + scale * rng.uniform01();
  return out;
}

namespace {

// Counts points with |v_j - v_i| strictly below eps, excluding i itself,
// using one shared sorted copy of the column.
int strict_range_count(const std::vector<double>& sorted, double center,
                       double eps) {
  auto lo = std::upper_bound(sorted.begin(), sorted.end(), center - eps);
  auto hi = std::lower_bound(sorted.begin(), sorted.end(), center + eps);
  return static_cast<int>(hi - lo) - 1;
}

}  // namespace

double kraskov_mi(const Vector& x, const Vector& y, int k_neighbors) {
  const int n = static_cast<int>(x.size());
  if (y.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "length mismatch");
  }
  if (k_neighbors < 1 || n <= k_neighbors) {
    throw Error(ErrorCode::TooFewSamples,
                "need n > k (n=" + std::to_string(n) +
                    ", k=" + std::to_string(k_neighbors) + ")");
  }

  std::vector<double> xs(x.data(), x.data() + n);
  std::vector<double> ys(y.data(), y.data() + n);
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  double acc = 0.0;
  std::vector<double> dist(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      dist[j] = std::max(std::fabs(x[j] - x[i]), std::fabs(y[j] - y[i]));
    }
    dist[i] = std::numeric_limits<double>::infinity();  // exclude self
    std::nth_element(dist.begin(), dist.begin() + (k_neighbors - 1),
                     dist.end());
    double eps = dist[k_neighbors - 1];

    int nx = strict_range_count(xs, x[i], eps);
    int ny = strict_range_count(ys, y[i], eps);
    acc += digamma(nx + 1) + digamma(ny + 1);
  }
  return digamma(k_neighbors) + digamma(n) - acc / n;
}

IndependenceTest independence_test(const Vector& x, const Vector& y,
                                   const KraskovConfig& cfg) {
  if (cfg.permutations < 19) {
    throw Error(ErrorCode::InvalidArgument, "need at least 19 permutations");
  }
  Rng jitter_rng(mix_seed(cfg.seed, 0));
  Vector xj = jitter(x, jitter_rng);
  Vector yj = jitter(y, jitter_rng);

  IndependenceTest out;
  out.mi_hat = kraskov_mi(xj, yj, cfg.k_neighbors);

  const int B = cfg.permutations;
  std::vector<int> at_least(B, 0);
  parallel_for(B, [&](size_t b) {
    Rng rng(mix_seed(cfg.seed, b + 1));
    std::vector<size_t> perm = rng.permutation(yj.size());
    Vector yp(yj.size());
    for (int i = 0; i < yj.size(); ++i) yp[i] = yj[perm[i]];
    if (kraskov_mi(xj, yp, cfg.k_neighbors) >= out.mi_hat) at_least[b] = 1;
  });
  int exceed = 0;
  for (int v : at_least) exceed += v;

  out.p_value = double(1 + exceed) / double(B + 1);
  out.reject = out.p_value <= cfg.alpha;
  return out;
}

}  // namespace bpa
