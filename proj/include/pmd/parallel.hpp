#pragma once

#include <atomic>
#include <cstddef>
#include <functional>

namespace pmd {

/// Number of workers actually used for a request of `threads`
/// (0 = all hardware threads).
int resolve_threads(int threads);

/// Runs fn(begin, end) over [0, count) in chunks on `threads` workers.
/// While workers are busy, poll() (when nonempty) is invoked from the
/// calling thread roughly every quarter second; it is called once more
/// after completion.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  const std::function<void()>& poll = {});

}  // namespace pmd
