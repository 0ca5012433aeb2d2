#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace bootlin {
namespace detail {

//! Run fn(i) for i in [0, count) on up to `threads` workers, contiguous
//! chunks per worker. Callers write results into preallocated slots
//! indexed by i, so the outcome does not depend on the worker count.
inline void
parallel_for_indexed(std::size_t count, int threads,
                     const std::function<void(std::size_t)>& fn)
{
  const std::size_t workers = std::max<std::size_t>(
    1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)),
                             count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) {
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

} // namespace detail
} // namespace bootlin
