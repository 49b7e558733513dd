#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "zscan/medium.hpp"
#include "zscan/probes.hpp"
#include "zscan/simnet.hpp"
#include "zscan/streams.hpp"

// Scan orchestration: config resolution, worker topology (T send workers,
// one receive worker, one monitor), cooldown, and the CLI entry point.

namespace zscan::engine {

struct ScanConfig {
  // Target space
  std::string target_ports;  // "80,443,8000-8100"; ignored for icmp_echo
  std::string allowlist_file;
  std::string blocklist_file;
  std::vector<std::string> allow_lines;  // direct lists for library callers
  std::vector<std::string> block_lines;
  std::string max_targets;  // "" unlimited, absolute count, or "12.5%"

  // Rate (mutually exclusive; validation rejects both)
  double rate_pps = 0;
  std::uint64_t bandwidth_bps = 0;
  std::uint32_t batch_size = 64;

  // Sharding
  std::uint32_t shards = 1;
  std::uint32_t shard_index = 0;
  std::uint32_t sender_threads = 1;

  // Probe
  probes::ProbeKind probe_kind = probes::ProbeKind::tcp_syn;
  probes::OptionLayout tcp_options = probes::OptionLayout::mss_only;
  probes::IpIdPolicy ip_id;
  std::uint16_t source_port_lo = 32768;
  std::uint16_t source_port_hi = 61000;
  std::uint32_t source_ip = 0xC0000201;  // 192.0.2.1 unless configured
  wire::MacAddress source_mac{0x02, 0, 0, 0, 0, 0x01};
  wire::MacAddress gateway_mac{0x02, 0, 0, 0, 0, 0x02};
  std::string interface;

  // Behavior
  std::size_t dedup_window = 1000000;
  std::optional<std::uint64_t> seed;  // entropy when unset, always recorded
  double cooldown_s = 8;
  bool dry_run = false;

  // Output
  streams::OutputFormat output_format = streams::OutputFormat::csv;
  bool quiet = false;
};

// Progress counters and the abort signal; shareable across contexts.
class ScanHandle {
 public:
  void abort() { abort_.store(true, std::memory_order_relaxed); }
  bool aborted() const { return abort_.load(std::memory_order_relaxed); }

  std::atomic<std::uint64_t> targets_emitted{0};
  std::atomic<std::uint64_t> skipped_elements{0};
  std::atomic<std::uint64_t> probes_sent{0};
  std::atomic<std::uint64_t> responses_received{0};
  std::atomic<std::uint64_t> rows_output{0};

 private:
  std::atomic<bool> abort_{false};
};

// Stream destinations; status and metadata may be null (routed by the CLI
// to the log channel or suppressed by --quiet).
struct ScanIO {
  std::ostream* data = nullptr;
  std::ostream* log = nullptr;
  std::ostream* status = nullptr;
  std::ostream* metadata = nullptr;
  streams::LogLevel log_level = streams::LogLevel::info;
};

// Runs one scan over the given medium. Validates the whole config before
// any packet is sent (std::invalid_argument on bad config). Fatal stream
// errors abort the scan, flush partial metadata, then rethrow.
streams::ScanMetadata run_scan(const ScanConfig& config, Medium& medium,
                               const ScanIO& io,
                               ScanHandle* handle = nullptr);

// Exit codes: 0 success, 1 runtime error, 2 usage error, 130 aborted.
int cli_main(int argc, char** argv);

}  // namespace zscan::engine
