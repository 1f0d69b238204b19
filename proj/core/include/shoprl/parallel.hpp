// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace shoprl
{

/// Runs fn(0) .. fn(n-1) on at most `threads` workers (the caller counts as
/// one). Results must be written by index for determinism. If tasks throw,
/// the exception of the lowest failing index is rethrown after all workers
/// stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

} // namespace shoprl
