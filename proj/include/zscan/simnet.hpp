#pragma once

#include <cstdint>
#include <mutex>
#include <queue>
#include <string>
#include <vector>

#include "json.hpp"
#include "zscan/medium.hpp"

// Deterministic simulated network medium: configurable responder
// populations, loss, latency, duplication, and blowback, on a virtual
// clock. (profile, seed, probe sequence) fully determines the responses.

namespace zscan::simnet {

enum class Behavior { silent, synack, rst, synack_dup, blowback };

struct ResponderRule {
  std::uint32_t prefix = 0;
  unsigned prefix_len = 0;
  Behavior behavior = Behavior::silent;
  std::uint32_t count = 0;  // k for synack_dup, m for blowback
};

struct MediumProfile {
  std::vector<ResponderRule> responders;
  double loss_prob = 0;
  double latency_lo_ms = 1.0;
  double latency_hi_ms = 1.0;
  std::uint64_t seed = 0;

  static MediumProfile from_json(const nlohmann::json& doc);
  static MediumProfile from_file(const std::string& path);
};

class SimMedium final : public Medium {
 public:
  explicit SimMedium(MediumProfile profile);

  void send_frame(std::span<const std::uint8_t> frame) override;
  std::optional<std::vector<std::uint8_t>> recv_frame(
      double timeout_s) override;
  double now_s() override;
  void sleep_s(double seconds) override;

  std::uint64_t frames_seen() const;
  std::uint64_t malformed_frames() const;

 private:
  struct Pending {
    double ready_s;
    std::uint64_t order;  // tie-break: enqueue order
    std::vector<std::uint8_t> frame;
    bool operator>(const Pending& other) const {
      return std::tie(ready_s, order) > std::tie(other.ready_s, other.order);
    }
  };

  const ResponderRule* match(std::uint32_t ip) const;

  MediumProfile profile_;
  mutable std::mutex mutex_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  double now_s_ = 0;
  std::uint64_t enqueue_order_ = 0;
  std::uint64_t frames_seen_ = 0;
  std::uint64_t malformed_ = 0;
};

}  // namespace zscan::simnet
