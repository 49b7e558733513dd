#pragma once

#include <cstdint>
#include <optional>
#include <vector>

// Multiplicative cyclic group arithmetic: the builtin prime table, generator
// discovery, and element iteration that drive pseudorandom target ordering.

namespace zscan::groupcycle {

struct FactorPower {
  std::uint64_t prime;
  std::uint32_t exponent;
};

// One multiplicative group (Z/pZ)^x, p prime, with the stored factorization
// of p-1. Immutable and freely shareable.
struct GroupSpec {
  std::uint64_t p = 0;
  std::vector<FactorPower> factors;  // p-1 = prod factors[i].prime^exponent

  std::uint64_t order() const { return p - 1; }
};

// The builtin table: 2^16+1, 2^24+43, 2^32+15, 2^48+21, sorted ascending.
// Every stored factorization is re-verified (multiply-back, primality and
// distinctness of each factor) the first time the table is built; a
// verification failure throws std::logic_error.
const std::vector<GroupSpec>& builtin_groups();

// Smallest builtin group with p-1 >= space_size. Throws std::out_of_range
// when space_size exceeds the largest group's order.
const GroupSpec& smallest_group_for(std::uint64_t space_size);

// base^exponent mod modulus. Requires modulus <= 2^48+21 so intermediates
// fit unsigned 128-bit arithmetic with room to spare.
std::uint64_t modpow(std::uint64_t base, std::uint64_t exponent,
                     std::uint64_t modulus);

// True iff g is a primitive root of the group: g^((p-1)/k) mod p != 1 for
// every distinct prime factor k of p-1. Requires 2 <= g <= p-2.
bool is_generator(std::uint64_t g, const GroupSpec& group);

// Draws candidates g in [2, 2^16-1] from a PRNG seeded with `seed` until
// is_generator accepts one. Deterministic for a fixed seed. If attempts_out
// is non-null, receives the number of candidates drawn.
std::uint64_t find_generator(const GroupSpec& group, std::uint64_t seed,
                             std::uint64_t* attempts_out = nullptr);

// One pseudorandom walk of a group: cursor over successive powers of g.
// Owned by exactly one execution context; never mutated concurrently.
struct Permutation {
  GroupSpec group;
  std::uint64_t generator = 0;
  std::uint64_t first = 0;
  std::uint64_t current = 0;

  // Generator and starting element both drawn from the seeded PRNG.
  static Permutation create(const GroupSpec& group, std::uint64_t seed);

  // Advances current <- current * g mod p. Returns the new element, or
  // nullopt once the walk arrives back at `first` (cycle complete).
  std::optional<std::uint64_t> next();
};

}  // namespace zscan::groupcycle
