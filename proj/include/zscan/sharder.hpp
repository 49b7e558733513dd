#pragma once

#include <cstdint>
#include <optional>

#include "zscan/groupcycle.hpp"

// Pizza sharding: the group is cut into N contiguous exponent ranges
// (shards), each subdivided into T subshards, so senders iterate disjoint
// target sets without coordination. Iteration terminates by count, never by
// value comparison.

namespace zscan::sharder {

struct ShardPlan {
  groupcycle::GroupSpec group;
  std::uint64_t generator = 0;
  std::uint32_t shards = 1;     // N
  std::uint32_t subshards = 1;  // T, per-shard (typically sender threads)
};

// One subshard's walk: elements g^exponent_begin .. g^(exponent_end-1).
// Owned by exactly one send worker.
struct ShardCursor {
  std::uint32_t shard = 0;
  std::uint32_t subshard = 0;
  std::uint64_t exponent_begin = 0;
  std::uint64_t exponent_end = 0;  // exclusive
  std::uint64_t current_element = 0;
  std::uint64_t emitted = 0;
  std::uint64_t generator = 0;
  std::uint64_t p = 0;

  std::uint64_t size() const { return exponent_end - exponent_begin; }

  // Returns the next element, or nullopt exactly once when the range is
  // exhausted (emitted == size()).
  std::optional<std::uint64_t> next();
};

// Builds the cursor for subshard (n, t). Slice boundaries use floor
// interpolation, so any two subshard sizes differ by at most 1 within a
// shard and at most 2 globally. Throws std::out_of_range on bad indices.
ShardCursor make_cursor(const ShardPlan& plan, std::uint32_t n,
                        std::uint32_t t);

}  // namespace zscan::sharder
