#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace concavelr {

/// Resolves a requested worker count: 0 means hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work is handed
/// out by an atomic counter; callers write results by index so the outcome does
/// not depend on scheduling. The first exception thrown by any body is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

/// Generator for replication `index` of a run seeded with `seed`. Streams for
/// distinct indices are seeded independently so draw k never depends on the
/// worker that computes it.
std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace concavelr
