#include "pvnext/counters.hpp"

namespace pvnext {

Counters& counters() {
  static Counters c;
  return c;
}

CounterSnapshot snapshot_counters() {
  const Counters& c = counters();
  CounterSnapshot s;
  s.ball_queries = c.ball_queries.load(std::memory_order_relaxed);
  s.distance_evals = c.distance_evals.load(std::memory_order_relaxed);
  s.member_embeddings = c.member_embeddings.load(std::memory_order_relaxed);
  s.multiply_adds = c.multiply_adds.load(std::memory_order_relaxed);
  return s;
}

}  // namespace pvnext
