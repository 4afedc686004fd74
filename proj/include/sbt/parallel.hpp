#pragma once

#include <cstddef>
#include <functional>

namespace sbt {

/// Run body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Bodies write only to per-index slots; the call joins all
/// workers before returning, so merged results are deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

}  // namespace sbt
