#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

// Low-level Ethernet/IPv4/TCP/ICMP encoding and a bounds-checked frame
// parser. Everything here is total: arbitrary input bytes either parse or
// return nullopt, never read out of range.

namespace zscan::wire {

using MacAddress = std::array<std::uint8_t, 6>;

inline constexpr std::size_t kEthernetHeaderLen = 14;
inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kTcpHeaderLen = 20;
inline constexpr std::size_t kIcmpHeaderLen = 8;
inline constexpr std::size_t kMinWireFrameLen = 60;  // before FCS
inline constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
inline constexpr std::uint8_t kProtocolIcmp = 1;
inline constexpr std::uint8_t kProtocolTcp = 6;

inline constexpr std::uint8_t kTcpFlagFin = 0x01;
inline constexpr std::uint8_t kTcpFlagSyn = 0x02;
inline constexpr std::uint8_t kTcpFlagRst = 0x04;
inline constexpr std::uint8_t kTcpFlagAck = 0x10;

std::uint16_t read16(const std::uint8_t* p);
std::uint32_t read32(const std::uint8_t* p);
void write16(std::uint8_t* p, std::uint16_t v);
void write32(std::uint8_t* p, std::uint32_t v);

// One's-complement Internet checksum; odd-length input is padded with a
// zero byte.
std::uint16_t internet_checksum(std::span<const std::uint8_t> data);

struct Ipv4Header {
  std::uint8_t tos = 0;
  std::uint16_t total_length = 0;
  std::uint16_t id = 0;
  std::uint16_t flags_fragment = 0;
  std::uint8_t ttl = 64;
  std::uint8_t protocol = 0;
  std::uint16_t checksum = 0;
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
};

struct TcpHeader {
  std::uint16_t sport = 0;
  std::uint16_t dport = 0;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint8_t data_offset_words = 5;
  std::uint8_t flags = 0;
  std::uint16_t window = 0;
  std::uint16_t checksum = 0;
  std::uint16_t urgent = 0;
};

struct IcmpHeader {
  std::uint8_t type = 0;
  std::uint8_t code = 0;
  std::uint16_t checksum = 0;
  std::uint16_t id = 0;
  std::uint16_t sequence = 0;
};

struct ParsedFrame {
  MacAddress eth_dst{};
  MacAddress eth_src{};
  std::uint16_t ethertype = 0;
  Ipv4Header ip;
  std::optional<TcpHeader> tcp;
  std::span<const std::uint8_t> tcp_options;
  std::optional<IcmpHeader> icmp;
  std::span<const std::uint8_t> icmp_payload;
};

std::optional<ParsedFrame> parse_frame(std::span<const std::uint8_t> frame);

// Builders append to `out`; IPv4 and TCP/ICMP checksums are computed here.
void append_ethernet(std::vector<std::uint8_t>& out, const MacAddress& dst,
                     const MacAddress& src, std::uint16_t ethertype);
void append_ipv4(std::vector<std::uint8_t>& out, const Ipv4Header& header);
void append_tcp(std::vector<std::uint8_t>& out, std::uint32_t src_ip,
                std::uint32_t dst_ip, const TcpHeader& header,
                std::span<const std::uint8_t> options);
void append_icmp(std::vector<std::uint8_t>& out, const IcmpHeader& header,
                 std::span<const std::uint8_t> payload);

// Zero-pads a frame to the 60-byte Ethernet minimum (the medium's job, not
// the probe builder's).
void pad_to_minimum(std::vector<std::uint8_t>& frame);

}  // namespace zscan::wire
