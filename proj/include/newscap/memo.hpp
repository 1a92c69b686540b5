#pragma once

#include <cstdint>
#include <memory>

#include "newscap/backends.hpp"
#include "newscap/fixture_store.hpp"

namespace newscap::backends {

struct MemoStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;

  double hit_rate() const {
    auto total = hits + misses;
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
  }
};

// Wraps a BackendSet so that each distinct (contract, input) is forwarded to
// the underlying backend at most once per run (modulo concurrent first
// requests for the same input). Batch calls forward only the misses, as one
// inner batch. Internally synchronized.
class MemoizedBackends {
 public:
  explicit MemoizedBackends(BackendSet inner);
  ~MemoizedBackends();
  MemoizedBackends(const MemoizedBackends&) = delete;
  MemoizedBackends& operator=(const MemoizedBackends&) = delete;

  const BackendSet& backends() const { return wrapped_; }
  MemoStats stats() const;

  // Every response observed so far, keyed the way the fixture backends look
  // them up. Replaying a run against this store reproduces it exactly.
  FixtureStore export_fixtures() const;

  struct State;

 private:
  std::shared_ptr<State> state_;
  BackendSet wrapped_;
};

}  // namespace newscap::backends
