#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace sphg {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is split into
/// contiguous static blocks; callers keep results per index and reduce them in
/// index order, so output never depends on the worker count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Worker count from SPHG_THREADS, or 1 when unset or invalid.
int default_threads();

/// Independent seed for sub-stream `stream` of `seed` (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace sphg
