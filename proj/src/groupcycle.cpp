#include "zscan/groupcycle.hpp"

#include <random>
#include <stdexcept>

namespace zscan::groupcycle {
namespace {

using u128 = unsigned __int128;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(u128{a} * b % m);
}

// Deterministic Miller-Rabin, exact for all 64-bit inputs with this
// witness set.
bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t q : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull,
                          19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n == q) return true;
    if (n % q == 0) return false;
  }
  std::uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull,
                          19ull, 23ull, 29ull, 31ull, 37ull}) {
    std::uint64_t x = modpow(a % n, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 0; i < r - 1; ++i) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

void verify_spec(const GroupSpec& spec) {
  if (!is_prime_u64(spec.p)) throw std::logic_error("group table: p not prime");
  u128 product = 1;
  for (std::size_t i = 0; i < spec.factors.size(); ++i) {
    const auto& f = spec.factors[i];
    if (!is_prime_u64(f.prime))
      throw std::logic_error("group table: stored factor not prime");
    for (std::size_t j = 0; j < i; ++j)
      if (spec.factors[j].prime == f.prime)
        throw std::logic_error("group table: duplicate factor");
    for (std::uint32_t e = 0; e < f.exponent; ++e) product *= f.prime;
  }
  if (product != spec.p - 1)
    throw std::logic_error("group table: factorization does not multiply back");
}

std::vector<GroupSpec> build_table() {
  // Factorizations of p-1 computed once offline by trial division and
  // hardcoded here; verify_spec re-checks them on every startup.
  std::vector<GroupSpec> table = {
      {65537ull, {{2, 16}}},                       // 2^16 + 1
      {16777259ull, {{2, 1}, {23, 1}, {103, 1}, {3541, 1}}},  // 2^24 + 43
      {4294967311ull,
       {{2, 1}, {3, 2}, {5, 1}, {131, 1}, {364289, 1}}},      // 2^32 + 15
      {281474976710677ull,
       {{2, 2}, {3, 1}, {7, 1}, {1361, 1}, {2462081249, 1}}},  // 2^48 + 21
  };
  for (const auto& spec : table) verify_spec(spec);
  return table;
}

}  // namespace

const std::vector<GroupSpec>& builtin_groups() {
  static const std::vector<GroupSpec> table = build_table();
  return table;
}

const GroupSpec& smallest_group_for(std::uint64_t space_size) {
  if (space_size < 1) throw std::out_of_range("space size must be positive");
  for (const auto& spec : builtin_groups())
    if (spec.order() >= space_size) return spec;
  throw std::out_of_range("target space exceeds the largest builtin group");
}

std::uint64_t modpow(std::uint64_t base, std::uint64_t exponent,
                     std::uint64_t modulus) {
  std::uint64_t result = 1 % modulus;
  std::uint64_t b = base % modulus;
  while (exponent != 0) {
    if (exponent & 1) result = mulmod(result, b, modulus);
    b = mulmod(b, b, modulus);
    exponent >>= 1;
  }
  return result;
}

bool is_generator(std::uint64_t g, const GroupSpec& group) {
  for (const auto& f : group.factors)
    if (modpow(g, group.order() / f.prime, group.p) == 1) return false;
  return true;
}

std::uint64_t find_generator(const GroupSpec& group, std::uint64_t seed,
                             std::uint64_t* attempts_out) {
  std::mt19937_64 rng(seed);
  std::uint64_t hi = std::min<std::uint64_t>(group.p - 2, 0xFFFF);
  std::uniform_int_distribution<std::uint64_t> dist(2, hi);
  std::uint64_t attempts = 0;
  for (;;) {
    std::uint64_t g = dist(rng);
    ++attempts;
    if (is_generator(g, group)) {
      if (attempts_out) *attempts_out = attempts;
      return g;
    }
  }
}

Permutation Permutation::create(const GroupSpec& group, std::uint64_t seed) {
  Permutation perm;
  perm.group = group;
  perm.generator = find_generator(group, seed);
  // Start rule: uniform over [1, p-1], from the same seeded stream domain
  // but a distinct seed derivation so it is independent of generator draws.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<std::uint64_t> dist(1, group.p - 1);
  perm.first = dist(rng);
  perm.current = perm.first;
  return perm;
}

std::optional<std::uint64_t> Permutation::next() {
  current = mulmod(current, generator, group.p);
  if (current == first) return std::nullopt;
  return current;
}

}  // namespace zscan::groupcycle
