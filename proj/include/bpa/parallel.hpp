#pragma once

#include <cstddef>
#include <functional>

namespace bpa {

/// Caps the number of worker threads used by parallel regions.
/// 0 restores the default (hardware concurrency).
void set_max_threads(unsigned n);

unsigned max_threads();

/// Runs f(i) for i in [0, n). Work is split into contiguous index blocks,
/// one per worker; each index writes only its own output slot, so results
/// are independent of scheduling.
void parallel_for(size_t n, const std::function<void(size_t)>& f);

}  // namespace bpa
