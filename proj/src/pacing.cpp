#include "zscan/pacing.hpp"

#include <algorithm>

namespace zscan::pacing {

namespace {
constexpr std::size_t kMinFrame = 60;
constexpr std::size_t kFrameOverhead = 4 + 8 + 12;  // FCS + preamble + IFG
}  // namespace

std::uint64_t line_rate_pps(std::size_t frame_len_bytes,
                            std::uint64_t link_bps) {
  const std::size_t wire_len =
      std::max(frame_len_bytes, kMinFrame) + kFrameOverhead;
  return link_bps / (wire_len * 8);
}

RatePlan RatePlan::from_bandwidth(std::uint64_t bits_per_second,
                                  std::size_t frame_len_bytes,
                                  std::uint32_t batch) {
  return RatePlan{
      static_cast<double>(line_rate_pps(frame_len_bytes, bits_per_second)),
      batch};
}

double pace_delay(const RatePlan& plan, std::uint64_t sent_so_far,
                  double scan_start_s, double now_s) {
  if (plan.target_pps <= 0) return 0;
  const double elapsed = now_s - scan_start_s;
  const double due_at = static_cast<double>(sent_so_far) / plan.target_pps;
  return std::max(0.0, due_at - elapsed);
}

}  // namespace zscan::pacing
