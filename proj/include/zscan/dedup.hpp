#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <unordered_set>

namespace zscan::dedup {

// Sliding window over the last n (IP, port) responses. Pure FIFO: a hit
// does not refresh recency. State is O(n), independent of target-space
// size. Capacity 0 disables deduplication entirely.
class DedupWindow {
 public:
  explicit DedupWindow(std::size_t capacity) : capacity_(capacity) {}

  // Returns true when the key is fresh (and records it), false when it is
  // a duplicate still inside the window.
  bool check_and_insert(std::uint32_t ip, std::uint16_t port) {
    if (capacity_ == 0) return true;
    const std::uint64_t key = (std::uint64_t{ip} << 16) | port;
    if (seen_.contains(key)) return false;
    seen_.insert(key);
    order_.push_back(key);
    if (order_.size() > capacity_) {
      seen_.erase(order_.front());
      order_.pop_front();
    }
    return true;
  }

  std::size_t size() const { return order_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::unordered_set<std::uint64_t> seen_;
  std::deque<std::uint64_t> order_;
};

}  // namespace zscan::dedup
