#pragma once

#include <cstddef>
#include <functional>

namespace stpp::core {

// Available hardware parallelism, at least 1.
[[nodiscard]] std::size_t default_jobs();

// Calls fn(i) for i in [0, n) on up to `jobs` threads (0 means default_jobs()).
// Indices are claimed dynamically; the first exception thrown is rethrown after
// all workers finish.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace stpp::core
