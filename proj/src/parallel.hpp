// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_SRC_PARALLEL_HPP
#define MKTDIFF_SRC_PARALLEL_HPP

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace mktdiff::detail {

/// Runs fn(chunk, begin, end) over [0, total) split into contiguous chunks,
/// one per worker.  Callers keep per-chunk accumulators and combine them in
/// chunk order, which makes results bit-identical at a fixed thread count.
inline void run_chunked(int total, int threads,
                        const std::function<void(int, int, int)>& fn) {
  if (threads <= 1 || total <= 1) {
    if (total > 0) fn(0, 0, total);
    return;
  }
  const int nchunks = std::min(threads, total);
  std::vector<std::exception_ptr> errors(nchunks);
  std::vector<std::thread> pool;
  pool.reserve(nchunks);
  const int base = total / nchunks;
  const int rem = total % nchunks;
  int begin = 0;
  for (int chunk = 0; chunk < nchunks; ++chunk) {
    const int len = base + (chunk < rem ? 1 : 0);
    const int end = begin + len;
    pool.emplace_back([&, chunk, begin, end] {
      try {
        fn(chunk, begin, end);
      } catch (...) {
        errors[chunk] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace mktdiff::detail

#endif  // MKTDIFF_SRC_PARALLEL_HPP
