#include "zscan/wire.hpp"

#include <algorithm>
#include <cstring>

namespace zscan::wire {

std::uint16_t read16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t read32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | p[3];
}

void write16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v);
}

void write32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 24);
  p[1] = static_cast<std::uint8_t>(v >> 16);
  p[2] = static_cast<std::uint8_t>(v >> 8);
  p[3] = static_cast<std::uint8_t>(v);
}

std::uint16_t internet_checksum(std::span<const std::uint8_t> data) {
  std::uint64_t sum = 0;
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) sum += read16(&data[i]);
  if (i < data.size()) sum += std::uint16_t{data[i]} << 8;
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

std::optional<ParsedFrame> parse_frame(std::span<const std::uint8_t> frame) {
  if (frame.size() < kEthernetHeaderLen + kIpv4HeaderLen) return std::nullopt;
  ParsedFrame parsed;
  std::memcpy(parsed.eth_dst.data(), frame.data(), 6);
  std::memcpy(parsed.eth_src.data(), frame.data() + 6, 6);
  parsed.ethertype = read16(&frame[12]);
  if (parsed.ethertype != kEtherTypeIpv4) return std::nullopt;

  auto ip = frame.subspan(kEthernetHeaderLen);
  const std::uint8_t version = ip[0] >> 4;
  const std::size_t ihl = std::size_t{ip[0] & 0x0F} * 4;
  if (version != 4 || ihl < kIpv4HeaderLen || ip.size() < ihl)
    return std::nullopt;
  parsed.ip.tos = ip[1];
  parsed.ip.total_length = read16(&ip[2]);
  parsed.ip.id = read16(&ip[4]);
  parsed.ip.flags_fragment = read16(&ip[6]);
  parsed.ip.ttl = ip[8];
  parsed.ip.protocol = ip[9];
  parsed.ip.checksum = read16(&ip[10]);
  parsed.ip.src = read32(&ip[12]);
  parsed.ip.dst = read32(&ip[16]);
  if (parsed.ip.total_length < ihl || parsed.ip.total_length > ip.size())
    return std::nullopt;

  auto payload = ip.subspan(ihl, parsed.ip.total_length - ihl);
  if (parsed.ip.protocol == kProtocolTcp) {
    if (payload.size() < kTcpHeaderLen) return std::nullopt;
    TcpHeader tcp;
    tcp.sport = read16(&payload[0]);
    tcp.dport = read16(&payload[2]);
    tcp.seq = read32(&payload[4]);
    tcp.ack = read32(&payload[8]);
    tcp.data_offset_words = payload[12] >> 4;
    tcp.flags = payload[13];
    tcp.window = read16(&payload[14]);
    tcp.checksum = read16(&payload[16]);
    tcp.urgent = read16(&payload[18]);
    const std::size_t header_len = std::size_t{tcp.data_offset_words} * 4;
    if (header_len < kTcpHeaderLen || header_len > payload.size())
      return std::nullopt;
    parsed.tcp = tcp;
    parsed.tcp_options = payload.subspan(kTcpHeaderLen,
                                         header_len - kTcpHeaderLen);
  } else if (parsed.ip.protocol == kProtocolIcmp) {
    if (payload.size() < kIcmpHeaderLen) return std::nullopt;
    IcmpHeader icmp;
    icmp.type = payload[0];
    icmp.code = payload[1];
    icmp.checksum = read16(&payload[2]);
    icmp.id = read16(&payload[4]);
    icmp.sequence = read16(&payload[6]);
    parsed.icmp = icmp;
    parsed.icmp_payload = payload.subspan(kIcmpHeaderLen);
  }
  return parsed;
}

void append_ethernet(std::vector<std::uint8_t>& out, const MacAddress& dst,
                     const MacAddress& src, std::uint16_t ethertype) {
  out.insert(out.end(), dst.begin(), dst.end());
  out.insert(out.end(), src.begin(), src.end());
  out.resize(out.size() + 2);
  write16(&out[out.size() - 2], ethertype);
}

void append_ipv4(std::vector<std::uint8_t>& out, const Ipv4Header& header) {
  const std::size_t base = out.size();
  out.resize(base + kIpv4HeaderLen);
  std::uint8_t* p = &out[base];
  p[0] = 0x45;  // version 4, IHL 5 (no IP options)
  p[1] = header.tos;
  write16(p + 2, header.total_length);
  write16(p + 4, header.id);
  write16(p + 6, header.flags_fragment);
  p[8] = header.ttl;
  p[9] = header.protocol;
  write16(p + 10, 0);
  write32(p + 12, header.src);
  write32(p + 16, header.dst);
  write16(p + 10, internet_checksum({p, kIpv4HeaderLen}));
}

namespace {

std::uint16_t l4_checksum(std::uint32_t src_ip, std::uint32_t dst_ip,
                          std::uint8_t protocol,
                          std::span<const std::uint8_t> segment) {
  std::vector<std::uint8_t> pseudo(12 + segment.size());
  write32(&pseudo[0], src_ip);
  write32(&pseudo[4], dst_ip);
  pseudo[8] = 0;
  pseudo[9] = protocol;
  write16(&pseudo[10], static_cast<std::uint16_t>(segment.size()));
  std::copy(segment.begin(), segment.end(), pseudo.begin() + 12);
  return internet_checksum(pseudo);
}

}  // namespace

void append_tcp(std::vector<std::uint8_t>& out, std::uint32_t src_ip,
                std::uint32_t dst_ip, const TcpHeader& header,
                std::span<const std::uint8_t> options) {
  const std::size_t base = out.size();
  const std::size_t segment_len = kTcpHeaderLen + options.size();
  out.resize(base + segment_len);
  std::uint8_t* p = &out[base];
  write16(p, header.sport);
  write16(p + 2, header.dport);
  write32(p + 4, header.seq);
  write32(p + 8, header.ack);
  p[12] = static_cast<std::uint8_t>(((kTcpHeaderLen + options.size()) / 4)
                                    << 4);
  p[13] = header.flags;
  write16(p + 14, header.window);
  write16(p + 16, 0);
  write16(p + 18, header.urgent);
  std::copy(options.begin(), options.end(), p + kTcpHeaderLen);
  write16(p + 16, l4_checksum(src_ip, dst_ip, kProtocolTcp,
                              {p, segment_len}));
}

void append_icmp(std::vector<std::uint8_t>& out, const IcmpHeader& header,
                 std::span<const std::uint8_t> payload) {
  const std::size_t base = out.size();
  out.resize(base + kIcmpHeaderLen + payload.size());
  std::uint8_t* p = &out[base];
  p[0] = header.type;
  p[1] = header.code;
  write16(p + 2, 0);
  write16(p + 4, header.id);
  write16(p + 6, header.sequence);
  std::copy(payload.begin(), payload.end(), p + kIcmpHeaderLen);
  write16(p + 2, internet_checksum({p, kIcmpHeaderLen + payload.size()}));
}

void pad_to_minimum(std::vector<std::uint8_t>& frame) {
  if (frame.size() < kMinWireFrameLen) frame.resize(kMinWireFrameLen, 0);
}

}  // namespace zscan::wire
