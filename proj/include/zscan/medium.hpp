#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

// Transmit abstraction shared by the raw-socket and simulated backends.
// send_frame may be called from many contexts; recv_frame from exactly one.

namespace zscan {

class Medium {
 public:
  virtual ~Medium() = default;

  virtual void send_frame(std::span<const std::uint8_t> frame) = 0;

  // Next ready frame, or nullopt after timeout_s with nothing to deliver.
  virtual std::optional<std::vector<std::uint8_t>> recv_frame(
      double timeout_s) = 0;

  // The medium owns the scan clock: wall time for real sockets, a virtual
  // clock for the simulated backend.
  virtual double now_s() = 0;
  virtual void sleep_s(double seconds) = 0;
};

}  // namespace zscan
