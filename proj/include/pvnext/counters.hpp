#pragma once

#include <atomic>
#include <cstdint>

namespace pvnext {

// Process-wide instrumentation counters. All counts are exact; increments use
// relaxed atomics so instrumented code may run from multiple threads.
struct Counters {
  std::atomic<std::uint64_t> ball_queries{0};       // one per (center, query call)
  std::atomic<std::uint64_t> distance_evals{0};     // point-pair distances inside searches
  std::atomic<std::uint64_t> member_embeddings{0};  // group members fed to the first MLP
  std::atomic<std::uint64_t> multiply_adds{0};      // forward-pass linear-layer MACs

  void reset() {
    ball_queries.store(0, std::memory_order_relaxed);
    distance_evals.store(0, std::memory_order_relaxed);
    member_embeddings.store(0, std::memory_order_relaxed);
    multiply_adds.store(0, std::memory_order_relaxed);
  }
};

Counters& counters();

struct CounterSnapshot {
  std::uint64_t ball_queries = 0;
  std::uint64_t distance_evals = 0;
  std::uint64_t member_embeddings = 0;
  std::uint64_t multiply_adds = 0;
};

CounterSnapshot snapshot_counters();

}  // namespace pvnext
