#include "zscan/sharder.hpp"

#include <stdexcept>

namespace zscan::sharder {

std::optional<std::uint64_t> ShardCursor::next() {
  if (emitted == size()) return std::nullopt;
  using u128 = unsigned __int128;
  std::uint64_t element = current_element;
  current_element =
      static_cast<std::uint64_t>(u128{current_element} * generator % p);
  ++emitted;
  return element;
}

ShardCursor make_cursor(const ShardPlan& plan, std::uint32_t n,
                        std::uint32_t t) {
  if (plan.shards == 0 || plan.subshards == 0 ||
      std::uint64_t{plan.shards} * plan.subshards > plan.group.order())
    throw std::invalid_argument("shard plan does not fit the group");
  if (n >= plan.shards) throw std::out_of_range("shard index out of range");
  if (t >= plan.subshards)
    throw std::out_of_range("subshard index out of range");

  const std::uint64_t order = plan.group.order();
  using u128 = unsigned __int128;
  const std::uint64_t slice_begin =
      static_cast<std::uint64_t>(u128{order} * n / plan.shards);
  const std::uint64_t slice_end =
      static_cast<std::uint64_t>(u128{order} * (n + 1) / plan.shards);
  const std::uint64_t slice_len = slice_end - slice_begin;

  ShardCursor cursor;
  cursor.shard = n;
  cursor.subshard = t;
  cursor.exponent_begin =
      slice_begin + static_cast<std::uint64_t>(u128{slice_len} * t /
                                               plan.subshards);
  cursor.exponent_end =
      slice_begin + static_cast<std::uint64_t>(u128{slice_len} * (t + 1) /
                                               plan.subshards);
  cursor.generator = plan.generator;
  cursor.p = plan.group.p;
  cursor.current_element =
      groupcycle::modpow(plan.generator, cursor.exponent_begin, plan.group.p);
  cursor.emitted = 0;
  return cursor;
}

}  // namespace zscan::sharder
