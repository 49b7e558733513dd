#include "zscan/probes.hpp"

#include <cstring>

namespace zscan::probes {

using namespace zscan::wire;

namespace {

// SipHash-2-4, the keyed PRF behind all self-authenticating probe fields.
class SipHash {
 public:
  static std::uint64_t hash(const std::array<std::uint8_t, 16>& key,
                            std::span<const std::uint8_t> msg) {
    std::uint64_t k0 = le64(&key[0]);
    std::uint64_t k1 = le64(&key[8]);
    std::uint64_t v0 = 0x736f6d6570736575ull ^ k0;
    std::uint64_t v1 = 0x646f72616e646f6dull ^ k1;
    std::uint64_t v2 = 0x6c7967656e657261ull ^ k0;
    std::uint64_t v3 = 0x7465646279746573ull ^ k1;

    const std::size_t end = msg.size() - (msg.size() % 8);
    for (std::size_t i = 0; i < end; i += 8) {
      std::uint64_t m = le64(&msg[i]);
      v3 ^= m;
      round(v0, v1, v2, v3);
      round(v0, v1, v2, v3);
      v0 ^= m;
    }
    std::uint64_t last = std::uint64_t{msg.size() & 0xFF} << 56;
    for (std::size_t i = 0; i < msg.size() - end; ++i)
      last |= std::uint64_t{msg[end + i]} << (8 * i);
    v3 ^= last;
    round(v0, v1, v2, v3);
    round(v0, v1, v2, v3);
    v0 ^= last;
    v2 ^= 0xFF;
    for (int i = 0; i < 4; ++i) round(v0, v1, v2, v3);
    return v0 ^ v1 ^ v2 ^ v3;
  }

 private:
  static std::uint64_t le64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  static std::uint64_t rotl(std::uint64_t x, int b) {
    return (x << b) | (x >> (64 - b));
  }
  static void round(std::uint64_t& v0, std::uint64_t& v1, std::uint64_t& v2,
                    std::uint64_t& v3) {
    v0 += v1;
    v1 = rotl(v1, 13);
    v1 ^= v0;
    v0 = rotl(v0, 32);
    v2 += v3;
    v3 = rotl(v3, 16);
    v3 ^= v2;
    v0 += v3;
    v3 = rotl(v3, 21);
    v3 ^= v0;
    v2 += v1;
    v1 = rotl(v1, 17);
    v1 ^= v2;
    v2 = rotl(v2, 32);
  }
};

enum MacTag : std::uint8_t {
  kTagSequence = 0,
  kTagSourcePort = 1,
  kTagTimestamp = 2,
  kTagIcmpIdSeq = 3,
  kTagIcmpPayload = 4,
};

std::uint64_t mac(const ValidationKey& key, MacTag tag, std::uint32_t src_ip,
                  std::uint32_t dst_ip, std::uint16_t dst_port,
                  ProbeKind kind) {
  std::array<std::uint8_t, 12> msg{};
  wire::write32(&msg[0], src_ip);
  wire::write32(&msg[4], dst_ip);
  wire::write16(&msg[8], dst_port);
  msg[10] = kind == ProbeKind::tcp_syn ? 6 : 1;
  msg[11] = tag;
  return SipHash::hash(key.bytes, msg);
}

constexpr std::uint16_t kMssValue = 1460;
constexpr std::uint8_t kWindowScale = 7;

void push_mss(std::vector<std::uint8_t>& out) {
  out.insert(out.end(), {0x02, 0x04, static_cast<std::uint8_t>(kMssValue >> 8),
                         static_cast<std::uint8_t>(kMssValue & 0xFF)});
}
void push_sack_permitted(std::vector<std::uint8_t>& out) {
  out.insert(out.end(), {0x04, 0x02});
}
void push_timestamp(std::vector<std::uint8_t>& out) {
  // TSval patched per probe; TSecr zero on a SYN.
  out.insert(out.end(), {0x08, 0x0A, 0, 0, 0, 0, 0, 0, 0, 0});
}
void push_nop(std::vector<std::uint8_t>& out) { out.push_back(0x01); }
void push_window_scale(std::vector<std::uint8_t>& out) {
  out.insert(out.end(), {0x03, 0x03, kWindowScale});
}

// Patches TSval into the first Timestamp option, if the layout has one.
void patch_timestamp(std::span<std::uint8_t> options, std::uint32_t tsval) {
  std::size_t i = 0;
  while (i < options.size()) {
    std::uint8_t kind = options[i];
    if (kind == 0x00) return;
    if (kind == 0x01) {
      ++i;
      continue;
    }
    if (i + 1 >= options.size()) return;
    std::uint8_t len = options[i + 1];
    if (len < 2 || i + len > options.size()) return;
    if (kind == 0x08 && len == 10) {
      wire::write32(&options[i + 2], tsval);
      return;
    }
    i += len;
  }
}

struct InnerQuote {
  std::uint8_t protocol = 0;
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint16_t sport = 0;
  std::uint16_t dport = 0;
  std::uint32_t seq_or_idseq = 0;
};

// Parses the quoted IPv4 header + first 8 payload bytes inside an ICMP
// unreachable message.
std::optional<InnerQuote> parse_inner(std::span<const std::uint8_t> quote) {
  if (quote.size() < wire::kIpv4HeaderLen) return std::nullopt;
  if ((quote[0] >> 4) != 4) return std::nullopt;
  const std::size_t ihl = std::size_t{quote[0] & 0x0F} * 4;
  if (ihl < wire::kIpv4HeaderLen || quote.size() < ihl + 8)
    return std::nullopt;
  InnerQuote inner;
  inner.protocol = quote[9];
  inner.src = wire::read32(&quote[12]);
  inner.dst = wire::read32(&quote[16]);
  inner.sport = wire::read16(&quote[ihl]);
  inner.dport = wire::read16(&quote[ihl + 2]);
  inner.seq_or_idseq = wire::read32(&quote[ihl + 4]);
  return inner;
}

}  // namespace

ValidationKey ValidationKey::from_seed(std::uint64_t seed) {
  ValidationKey key;
  std::mt19937_64 rng(seed ^ 0xA5C1D3E5F7091B2Dull);
  for (std::size_t i = 0; i < key.bytes.size(); i += 8) {
    std::uint64_t word = rng();
    std::memcpy(&key.bytes[i], &word, 8);
  }
  return key;
}

std::vector<std::uint8_t> tcp_option_bytes(OptionLayout layout) {
  std::vector<std::uint8_t> out;
  switch (layout) {
    case OptionLayout::none:
      break;
    case OptionLayout::mss_only:
      push_mss(out);
      break;
    case OptionLayout::linux_os:
      push_mss(out);
      push_sack_permitted(out);
      push_timestamp(out);
      push_nop(out);
      push_window_scale(out);
      break;
    case OptionLayout::windows_os:
      push_mss(out);
      push_nop(out);
      push_window_scale(out);
      push_nop(out);
      push_nop(out);
      push_sack_permitted(out);
      break;
    case OptionLayout::bsd_os:
      push_mss(out);
      push_sack_permitted(out);
      push_timestamp(out);
      break;
  }
  return out;
}

std::uint16_t internet_checksum(std::span<const std::uint8_t> data) {
  return wire::internet_checksum(data);
}

std::uint16_t ipid_for_probe(const IpIdPolicy& policy, std::mt19937_64& rng) {
  if (!policy.random_per_probe) return policy.static_value;
  return static_cast<std::uint16_t>(rng());
}

std::uint32_t expected_sequence(const ValidationKey& key, std::uint32_t src_ip,
                                std::uint32_t dst_ip, std::uint16_t dst_port,
                                ProbeKind kind) {
  return static_cast<std::uint32_t>(
      mac(key, kTagSequence, src_ip, dst_ip, dst_port, kind));
}

std::uint16_t expected_source_port(const ProbeTemplate& tmpl,
                                   const ValidationKey& key,
                                   std::uint32_t dst_ip,
                                   std::uint16_t dst_port) {
  const std::uint32_t span = tmpl.source_port_hi - tmpl.source_port_lo + 1;
  const std::uint64_t h =
      mac(key, kTagSourcePort, tmpl.source_ip, dst_ip, dst_port, tmpl.kind);
  return static_cast<std::uint16_t>(tmpl.source_port_lo + h % span);
}

std::vector<std::uint8_t> build_probe(const ProbeTemplate& tmpl,
                                      const targetspace::Target& target,
                                      const ValidationKey& key,
                                      std::uint16_t ip_id) {
  std::vector<std::uint8_t> frame;
  append_ethernet(frame, tmpl.gateway_mac, tmpl.source_mac,
                  wire::kEtherTypeIpv4);

  wire::Ipv4Header ip;
  ip.id = ip_id;
  ip.ttl = 255;
  ip.src = tmpl.source_ip;
  ip.dst = target.ip;

  if (tmpl.kind == ProbeKind::tcp_syn) {
    auto options = tcp_option_bytes(tmpl.options);
    patch_timestamp(options,
                    static_cast<std::uint32_t>(mac(key, kTagTimestamp,
                                                   tmpl.source_ip, target.ip,
                                                   target.port, tmpl.kind)));
    ip.protocol = wire::kProtocolTcp;
    ip.total_length = static_cast<std::uint16_t>(
        wire::kIpv4HeaderLen + wire::kTcpHeaderLen + options.size());
    append_ipv4(frame, ip);

    wire::TcpHeader tcp;
    tcp.sport = expected_source_port(tmpl, key, target.ip, target.port);
    tcp.dport = target.port;
    tcp.seq = expected_sequence(key, tmpl.source_ip, target.ip, target.port,
                                tmpl.kind);
    tcp.ack = 0;
    tcp.flags = wire::kTcpFlagSyn;
    tcp.window = 65535;
    append_tcp(frame, ip.src, ip.dst, tcp, options);
  } else {
    ip.protocol = wire::kProtocolIcmp;
    ip.total_length = wire::kIpv4HeaderLen + wire::kIcmpHeaderLen + 8;
    append_ipv4(frame, ip);

    const std::uint64_t idseq =
        mac(key, kTagIcmpIdSeq, tmpl.source_ip, target.ip, 0, tmpl.kind);
    wire::IcmpHeader icmp;
    icmp.type = 8;  // echo request
    icmp.code = 0;
    icmp.id = static_cast<std::uint16_t>(idseq);
    icmp.sequence = static_cast<std::uint16_t>(idseq >> 16);
    std::array<std::uint8_t, 8> payload{};
    const std::uint64_t body =
        mac(key, kTagIcmpPayload, tmpl.source_ip, target.ip, 0, tmpl.kind);
    std::memcpy(payload.data(), &body, 8);
    append_icmp(frame, icmp, payload);
  }
  return frame;
}

ValidationResult validate_response(std::span<const std::uint8_t> frame,
                                   const ValidationKey& key,
                                   const ProbeTemplate& tmpl) {
  auto parsed = wire::parse_frame(frame);
  if (!parsed) return RejectReason::malformed;
  if (parsed->ip.dst != tmpl.source_ip) return RejectReason::wrong_dest;

  if (parsed->tcp) {
    if (tmpl.kind != ProbeKind::tcp_syn) return RejectReason::unknown_type;
    const auto& tcp = *parsed->tcp;
    // The responder is the target we probed; its (ip, port) reproduces the
    // fields our probe carried.
    const std::uint32_t target_ip = parsed->ip.src;
    const std::uint16_t target_port = tcp.sport;
    if (tcp.dport != expected_source_port(tmpl, key, target_ip, target_port))
      return RejectReason::bad_validation;
    const std::uint32_t seq = expected_sequence(key, tmpl.source_ip, target_ip,
                                                target_port, tmpl.kind);
    const bool synack = (tcp.flags & wire::kTcpFlagSyn) &&
                        (tcp.flags & wire::kTcpFlagAck);
    const bool rst = tcp.flags & wire::kTcpFlagRst;
    if (synack) {
      if (tcp.ack != seq + 1) return RejectReason::bad_validation;
    } else if (rst) {
      if (tcp.ack != seq && tcp.ack != seq + 1)
        return RejectReason::bad_validation;
    } else {
      if (tcp.ack != seq + 1) return RejectReason::bad_validation;
    }
    ResponseRecord record;
    record.responder_ip = target_ip;
    record.responder_port = target_port;
    record.target_ip = target_ip;
    record.target_port = target_port;
    record.classification = synack ? ResponseClass::synack
                            : rst  ? ResponseClass::rst
                                   : ResponseClass::other;
    record.ttl = parsed->ip.ttl;
    return record;
  }

  if (parsed->icmp) {
    const auto& icmp = *parsed->icmp;
    if (icmp.type == 0 && tmpl.kind == ProbeKind::icmp_echo) {
      // Echo reply: id/seq/payload must reproduce the key-derived fields.
      const std::uint32_t target_ip = parsed->ip.src;
      const std::uint64_t idseq =
          mac(key, kTagIcmpIdSeq, tmpl.source_ip, target_ip, 0, tmpl.kind);
      if (icmp.id != static_cast<std::uint16_t>(idseq) ||
          icmp.sequence != static_cast<std::uint16_t>(idseq >> 16))
        return RejectReason::bad_validation;
      std::uint64_t body =
          mac(key, kTagIcmpPayload, tmpl.source_ip, target_ip, 0, tmpl.kind);
      std::array<std::uint8_t, 8> expect{};
      std::memcpy(expect.data(), &body, 8);
      if (parsed->icmp_payload.size() < 8 ||
          !std::equal(expect.begin(), expect.end(),
                      parsed->icmp_payload.begin()))
        return RejectReason::bad_validation;
      ResponseRecord record;
      record.responder_ip = target_ip;
      record.target_ip = target_ip;
      record.classification = ResponseClass::other;
      record.ttl = parsed->ip.ttl;
      return record;
    }
    if (icmp.type == 3) {
      // Destination unreachable: validate the quoted probe header.
      auto inner = parse_inner(parsed->icmp_payload);
      if (!inner) return RejectReason::malformed;
      if (inner->src != tmpl.source_ip) return RejectReason::bad_validation;
      if (tmpl.kind == ProbeKind::tcp_syn) {
        if (inner->protocol != wire::kProtocolTcp)
          return RejectReason::bad_validation;
        if (inner->sport != expected_source_port(tmpl, key, inner->dst,
                                                 inner->dport) ||
            inner->seq_or_idseq !=
                expected_sequence(key, tmpl.source_ip, inner->dst,
                                  inner->dport, tmpl.kind))
          return RejectReason::bad_validation;
      } else {
        if (inner->protocol != wire::kProtocolIcmp)
          return RejectReason::bad_validation;
        const std::uint64_t idseq =
            mac(key, kTagIcmpIdSeq, tmpl.source_ip, inner->dst, 0, tmpl.kind);
        if (inner->seq_or_idseq !=
            ((std::uint32_t{static_cast<std::uint16_t>(idseq)} << 16) |
             static_cast<std::uint16_t>(idseq >> 16)))
          return RejectReason::bad_validation;
      }
      ResponseRecord record;
      record.responder_ip = parsed->ip.src;
      record.target_ip = inner->dst;
      record.target_port =
          tmpl.kind == ProbeKind::tcp_syn ? inner->dport : 0;
      record.classification = ResponseClass::icmp_unreach;
      record.ttl = parsed->ip.ttl;
      return record;
    }
    return RejectReason::unknown_type;
  }
  return RejectReason::unknown_type;
}

const char* to_string(ResponseClass c) {
  switch (c) {
    case ResponseClass::synack: return "synack";
    case ResponseClass::rst: return "rst";
    case ResponseClass::icmp_unreach: return "icmp_unreach";
    case ResponseClass::other: return "other";
  }
  return "other";
}

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::malformed: return "malformed";
    case RejectReason::wrong_dest: return "wrong_dest";
    case RejectReason::bad_validation: return "bad_validation";
    case RejectReason::unknown_type: return "unknown_type";
  }
  return "malformed";
}

std::optional<OptionLayout> option_layout_from_string(const std::string& s) {
  if (s == "none") return OptionLayout::none;
  if (s == "mss") return OptionLayout::mss_only;
  if (s == "linux") return OptionLayout::linux_os;
  if (s == "windows") return OptionLayout::windows_os;
  if (s == "bsd") return OptionLayout::bsd_os;
  return std::nullopt;
}

}  // namespace zscan::probes
