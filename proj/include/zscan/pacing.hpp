#pragma once

#include <cstddef>
#include <cstdint>

// Send-rate control and Ethernet line-rate arithmetic.

namespace zscan::pacing {

struct RatePlan {
  double target_pps = 0;       // 0 = unlimited
  std::uint32_t batch_size = 64;  // probes between pacing checks

  static RatePlan unlimited() { return RatePlan{}; }
  static RatePlan from_pps(double pps, std::uint32_t batch = 64) {
    return RatePlan{pps, batch};
  }
  // Derives pps from a bandwidth cap and the probe's frame length, using
  // the full wire footprint (padding, FCS, preamble, inter-frame gap).
  static RatePlan from_bandwidth(std::uint64_t bits_per_second,
                                 std::size_t frame_len_bytes,
                                 std::uint32_t batch = 64);
};

// Packets/second a link sustains for a frame: wire length is
// max(frame, 60) + 4 FCS + 8 preamble/SFD + 12 inter-frame gap.
std::uint64_t line_rate_pps(std::size_t frame_len_bytes,
                            std::uint64_t link_bps);

// Non-negative delay (seconds) before the next batch so that the
// cumulative rate stays <= target. Zero when unlimited.
double pace_delay(const RatePlan& plan, std::uint64_t sent_so_far,
                  double scan_start_s, double now_s);

}  // namespace zscan::pacing
