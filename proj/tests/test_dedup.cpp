#include "doctest.h"

#include <random>
#include <vector>

#include "zscan/dedup.hpp"

using zscan::dedup::DedupWindow;

TEST_CASE("direct membership inside the window") {
  DedupWindow w(4);
  CHECK(w.check_and_insert(1, 80));
  CHECK(w.check_and_insert(2, 80));
  CHECK_FALSE(w.check_and_insert(1, 80));
  CHECK(w.check_and_insert(1, 443));  // different port is a different key
}

TEST_CASE("FIFO eviction re-admits an evicted key") {
  DedupWindow w(2);
  CHECK(w.check_and_insert(0xA, 1));
  CHECK(w.check_and_insert(0xB, 1));
  CHECK(w.check_and_insert(0xC, 1));  // evicts A
  CHECK(w.check_and_insert(0xA, 1));  // A is fresh again
  CHECK(w.size() == 2);
}

TEST_CASE("a hit does not refresh recency") {
  DedupWindow w(2);
  w.check_and_insert(0xA, 1);
  w.check_and_insert(0xB, 1);
  CHECK_FALSE(w.check_and_insert(0xA, 1));  // hit, but A stays oldest
  w.check_and_insert(0xC, 1);               // evicts A, not B
  CHECK_FALSE(w.check_and_insert(0xB, 1));
  CHECK(w.check_and_insert(0xA, 1));
}

TEST_CASE("capacity zero disables deduplication") {
  DedupWindow w(0);
  CHECK(w.check_and_insert(1, 1));
  CHECK(w.check_and_insert(1, 1));
  CHECK(w.size() == 0);
}

TEST_CASE("no false negatives within the window") {
  // A key re-observed while fewer than n distinct inserts intervened is
  // always reported duplicate.
  std::mt19937_64 rng(7);
  const std::size_t n = 64;
  DedupWindow w(n);
  for (std::uint32_t i = 0; i < 1000; ++i) w.check_and_insert(i, 1);
  std::uint32_t probe = 5000;
  w.check_and_insert(probe, 1);
  for (std::uint32_t i = 0; i < n - 1; ++i) w.check_and_insert(10000 + i, 1);
  CHECK_FALSE(w.check_and_insert(probe, 1));
  w.check_and_insert(20000, 1);  // n-th distinct insertion evicts probe
  CHECK(w.check_and_insert(probe, 1));
}

TEST_CASE("passed duplicates are monotone non-increasing in window size") {
  // Synthetic blowback-style trace: a few keys repeated many times at
  // scattered distances, plus unique fill.
  std::mt19937_64 rng(99);
  std::vector<std::uint64_t> trace;
  for (int i = 0; i < 20000; ++i) {
    if (rng() % 10 == 0) {
      trace.push_back(rng() % 50);  // hot repeated keys
    } else {
      trace.push_back(1000 + (rng() % 100000));
    }
  }
  std::uint64_t previous_passed = ~0ull;
  for (std::size_t n : {10ul, 100ul, 1000ul, 10000ul, 100000ul}) {
    DedupWindow w(n);
    std::uint64_t passed_duplicates = 0;
    std::vector<bool> seen_before(200000, false);
    for (auto key : trace) {
      bool fresh = w.check_and_insert(static_cast<std::uint32_t>(key), 1);
      if (fresh && seen_before[key]) ++passed_duplicates;
      seen_before[key] = true;
    }
    CHECK(passed_duplicates <= previous_passed);
    previous_passed = passed_duplicates;
  }
  CHECK(previous_passed == 0);  // window larger than distinct keys
}

TEST_CASE("memory bound: state never exceeds capacity") {
  DedupWindow w(100);
  for (std::uint32_t i = 0; i < 100000; ++i) {
    w.check_and_insert(i, static_cast<std::uint16_t>(i));
    CHECK(w.size() <= 100);
  }
}
