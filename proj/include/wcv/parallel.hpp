#pragma once

#include <cstddef>
#include <functional>

namespace wcv {

// Runs body(i) for i in [0, n) on up to `jobs` threads. If any call throws, the
// exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body);

} // namespace wcv
