#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace istsim::detail {

inline constexpr std::uint64_t kChunkRuns = 4096;

// Runs fn(run_index, accumulator) over [0, runs) in fixed-size chunks and
// merges chunk accumulators in chunk order. The first failing chunk (by
// index) determines the rethrown exception.
template <class Accum, class Fn>
Accum run_chunked(std::uint64_t runs, const Accum& init, Fn fn) {
  const std::size_t chunks = static_cast<std::size_t>((runs + kChunkRuns - 1) / kChunkRuns);
  std::vector<Accum> partial(chunks, init);
  std::vector<std::exception_ptr> errors(chunks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        const std::uint64_t begin = c * kChunkRuns;
        const std::uint64_t end = std::min(runs, begin + kChunkRuns);
        for (std::uint64_t r = begin; r < end; ++r) fn(r, partial[c]);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t threads = std::min<std::size_t>(hw, chunks);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Accum total = init;
  for (const auto& p : partial) total.merge(p);
  return total;
}

}  // namespace istsim::detail
