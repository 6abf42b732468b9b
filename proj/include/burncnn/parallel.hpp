#pragma once

#include <cstddef>
#include <functional>

namespace burncnn {

/// Worker count used by parallel_for. Initialized from BURNCNN_THREADS
/// (unset or 0 = hardware concurrency).
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Calls body(i) for every i in [0, n). Each index runs exactly once on one
/// thread, so results are bit-identical for any thread count as long as
/// body(i) only writes outputs owned by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace burncnn
