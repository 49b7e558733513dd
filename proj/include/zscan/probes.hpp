#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "zscan/targetspace.hpp"
#include "zscan/wire.hpp"

// Probe construction and stateless response validation. Every field that
// must survive the round trip (sequence number, source port, timestamp,
// ICMP id/seq/payload) is derived from a keyed PRF over the target, so no
// per-probe state is kept.

namespace zscan::probes {

enum class ProbeKind { tcp_syn, icmp_echo };

enum class OptionLayout { none, mss_only, linux_os, windows_os, bsd_os };

struct IpIdPolicy {
  bool random_per_probe = true;  // the current default
  std::uint16_t static_value = 0;
};

struct ProbeTemplate {
  ProbeKind kind = ProbeKind::tcp_syn;
  wire::MacAddress source_mac{};
  wire::MacAddress gateway_mac{};
  std::uint32_t source_ip = 0;
  std::uint16_t source_port_lo = 32768;
  std::uint16_t source_port_hi = 61000;
  OptionLayout options = OptionLayout::mss_only;
  IpIdPolicy ip_id;
};

// 16-byte per-scan secret derived from the scan seed. Never written to any
// output stream.
struct ValidationKey {
  std::array<std::uint8_t, 16> bytes{};
  static ValidationKey from_seed(std::uint64_t seed);
};

enum class ResponseClass { synack, rst, icmp_unreach, other };

enum class RejectReason { malformed, wrong_dest, bad_validation, unknown_type };

struct ResponseRecord {
  std::uint32_t responder_ip = 0;
  std::uint16_t responder_port = 0;  // 0 for ICMP responders
  std::uint32_t target_ip = 0;
  std::uint16_t target_port = 0;
  ResponseClass classification = ResponseClass::other;
  std::uint8_t ttl = 0;
};

using ValidationResult = std::variant<ResponseRecord, RejectReason>;

// TCP option template for a layout; the Timestamp TSval (all zero here) is
// patched with a key-derived value at build time. Lengths: none 0,
// mss_only 4, windows 12, bsd 16, linux 20 - all multiples of 4.
std::vector<std::uint8_t> tcp_option_bytes(OptionLayout layout);

std::uint16_t internet_checksum(std::span<const std::uint8_t> data);

std::uint16_t ipid_for_probe(const IpIdPolicy& policy, std::mt19937_64& rng);

// Expected probe fields for a given target, for validation and tests.
std::uint32_t expected_sequence(const ValidationKey& key, std::uint32_t src_ip,
                                std::uint32_t dst_ip, std::uint16_t dst_port,
                                ProbeKind kind);
std::uint16_t expected_source_port(const ProbeTemplate& tmpl,
                                   const ValidationKey& key,
                                   std::uint32_t dst_ip,
                                   std::uint16_t dst_port);

// Complete unpadded Ethernet frame for one target. Wire padding to the
// 60-byte minimum is the medium's concern.
std::vector<std::uint8_t> build_probe(const ProbeTemplate& tmpl,
                                      const targetspace::Target& target,
                                      const ValidationKey& key,
                                      std::uint16_t ip_id);

// Statelessly validates an arbitrary received frame. Total over arbitrary
// bytes: never throws, never over-reads.
ValidationResult validate_response(std::span<const std::uint8_t> frame,
                                   const ValidationKey& key,
                                   const ProbeTemplate& tmpl);

const char* to_string(ResponseClass c);
const char* to_string(RejectReason r);
std::optional<OptionLayout> option_layout_from_string(const std::string& s);

}  // namespace zscan::probes
