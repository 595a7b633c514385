#pragma once

#include <cstdint>

#include "bpa/data_table.hpp"
#include "bpa/rng.hpp"

namespace bpa {

struct KraskovConfig {
  int k_neighbors = 3;
  int permutations = 99;  // p-value floor 1/(B+1) = 0.01
  uint64_t seed = 0;
  double alpha = 0.05;
};

/// Nearest-neighbour mutual information estimate (nats) from jittered
/// samples: psi(k) + psi(n) - mean_i[psi(nx_i + 1) + psi(ny_i + 1)] with
/// max-norm neighbourhoods. Inputs must be tie-free (see jitter()).
double kraskov_mi(const Vector& x, const Vector& y, int k_neighbors);

/// Adds seeded uniform noise of 1e-10 times the column range, breaking the
/// ties the estimator cannot handle. Throws AllTied on constant input.
Vector jitter(const Vector& x, Rng& rng);

struct IndependenceTest {
  double mi_hat = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

/// Permutation test of independence: p = (1 + #{I_b >= I_obs}) / (B + 1)
/// over B seeded permutations of y. Replicate RNG streams are derived from
/// (seed, replicate), so results do not depend on scheduling.
IndependenceTest independence_test(const Vector& x, const Vector& y,
                                   const KraskovConfig& cfg);

}  // namespace bpa
