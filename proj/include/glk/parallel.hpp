#pragma once

#include <cstddef>
#include <functional>

namespace glk {

/// Worker count: GLK_THREADS if set and positive, otherwise the hardware
/// concurrency (at least 1). set_thread_limit() overrides both.
std::size_t worker_count();
void set_thread_limit(std::size_t n);

/// Runs body(i) for i in [0, n). Each index runs exactly once; callers write
/// into per-index slots and reduce afterwards in index order, so results do
/// not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace glk
