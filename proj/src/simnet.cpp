#include "zscan/simnet.hpp"

#include <fstream>
#include <stdexcept>

#include "zscan/targetspace.hpp"
#include "zscan/wire.hpp"

namespace zscan::simnet {
namespace {

Behavior behavior_from_string(const std::string& name) {
  if (name == "silent") return Behavior::silent;
  if (name == "synack") return Behavior::synack;
  if (name == "rst") return Behavior::rst;
  if (name == "synack_dup") return Behavior::synack_dup;
  if (name == "blowback") return Behavior::blowback;
  throw std::invalid_argument("unknown responder behavior: " + name);
}

// splitmix64: all medium randomness is keyed off (seed, probe identity,
// copy index) so behavior is independent of send interleaving.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint32_t ip, std::uint16_t port,
                     std::uint32_t copy, std::uint32_t domain) {
  std::uint64_t h = mix(seed ^ (std::uint64_t{ip} << 32 | port));
  h = mix(h ^ (std::uint64_t{copy} << 32 | domain));
  return h;
}

double unit_interval(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

MediumProfile MediumProfile::from_json(const nlohmann::json& doc) {
  MediumProfile profile;
  profile.seed = doc.value("seed", 0ull);
  profile.loss_prob = doc.value("loss_prob", 0.0);
  if (profile.loss_prob < 0 || profile.loss_prob > 1)
    throw std::invalid_argument("loss_prob outside [0, 1]");
  if (doc.contains("latency_ms")) {
    const auto& latency = doc["latency_ms"];
    if (latency.is_array()) {
      profile.latency_lo_ms = latency.at(0).get<double>();
      profile.latency_hi_ms = latency.at(1).get<double>();
    } else {
      profile.latency_lo_ms = profile.latency_hi_ms = latency.get<double>();
    }
    if (profile.latency_lo_ms > profile.latency_hi_ms)
      throw std::invalid_argument("latency range is descending");
  }
  for (const auto& entry : doc.value("responders", nlohmann::json::array())) {
    ResponderRule rule;
    auto [prefix, len] =
        targetspace::parse_cidr(entry.at("cidr").get<std::string>());
    rule.prefix = prefix;
    rule.prefix_len = len;
    rule.behavior = behavior_from_string(entry.at("behavior"));
    rule.count = entry.value("count", 0u);
    profile.responders.push_back(rule);
  }
  return profile;
}

MediumProfile MediumProfile::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  return from_json(doc);
}

SimMedium::SimMedium(MediumProfile profile) : profile_(std::move(profile)) {}

const ResponderRule* SimMedium::match(std::uint32_t ip) const {
  const ResponderRule* best = nullptr;
  for (const auto& rule : profile_.responders) {
    std::uint32_t mask =
        rule.prefix_len == 0 ? 0 : ~std::uint32_t{0} << (32 - rule.prefix_len);
    if ((ip & mask) != rule.prefix) continue;
    if (!best || rule.prefix_len >= best->prefix_len) best = &rule;
  }
  return best;
}

void SimMedium::send_frame(std::span<const std::uint8_t> frame) {
  std::lock_guard lock(mutex_);
  ++frames_seen_;
  auto parsed = wire::parse_frame(frame);
  if (!parsed || (!parsed->tcp && !parsed->icmp)) {
    ++malformed_;
    return;
  }
  const bool is_tcp_syn =
      parsed->tcp && (parsed->tcp->flags & wire::kTcpFlagSyn) &&
      !(parsed->tcp->flags & wire::kTcpFlagAck);
  const bool is_echo_request = parsed->icmp && parsed->icmp->type == 8;
  if (!is_tcp_syn && !is_echo_request) {
    ++malformed_;
    return;
  }

  const ResponderRule* rule = match(parsed->ip.dst);
  if (!rule || rule->behavior == Behavior::silent) return;

  std::uint32_t copies = 1;
  if (rule->behavior == Behavior::synack_dup) copies = rule->count + 1;
  if (rule->behavior == Behavior::blowback) copies = rule->count;

  const std::uint16_t probe_port = parsed->tcp ? parsed->tcp->dport : 0;
  for (std::uint32_t copy = 0; copy < copies; ++copy) {
    if (profile_.loss_prob > 0 &&
        unit_interval(derive(profile_.seed, parsed->ip.dst, probe_port, copy,
                             1)) < profile_.loss_prob)
      continue;

    // Response content depends only on (seed, target), so every copy is
    // byte-identical and replays are deterministic.
    std::uint64_t h = derive(profile_.seed, parsed->ip.dst, probe_port, 0, 2);
    std::vector<std::uint8_t> response;
    wire::append_ethernet(response, parsed->eth_src, parsed->eth_dst,
                          wire::kEtherTypeIpv4);
    wire::Ipv4Header ip;
    ip.src = parsed->ip.dst;
    ip.dst = parsed->ip.src;
    ip.id = static_cast<std::uint16_t>(h >> 16);
    ip.ttl = static_cast<std::uint8_t>(32 + (h & 0x7F));

    if (parsed->tcp) {
      wire::TcpHeader tcp;
      tcp.sport = parsed->tcp->dport;
      tcp.dport = parsed->tcp->sport;
      tcp.seq = static_cast<std::uint32_t>(h >> 32);
      tcp.window = 64240;
      if (rule->behavior == Behavior::rst) {
        tcp.flags = wire::kTcpFlagRst | wire::kTcpFlagAck;
        tcp.ack = parsed->tcp->seq;
      } else {
        tcp.flags = wire::kTcpFlagSyn | wire::kTcpFlagAck;
        tcp.ack = parsed->tcp->seq + 1;
      }
      ip.protocol = wire::kProtocolTcp;
      ip.total_length = wire::kIpv4HeaderLen + wire::kTcpHeaderLen;
      wire::append_ipv4(response, ip);
      wire::append_tcp(response, ip.src, ip.dst, tcp, {});
    } else {
      // Echo reply mirrors the request's id/seq/payload. The rst behavior
      // has no ICMP analog and stays silent.
      if (rule->behavior == Behavior::rst) return;
      wire::IcmpHeader icmp;
      icmp.type = 0;
      icmp.code = 0;
      icmp.id = parsed->icmp->id;
      icmp.sequence = parsed->icmp->sequence;
      ip.protocol = wire::kProtocolIcmp;
      ip.total_length = static_cast<std::uint16_t>(
          wire::kIpv4HeaderLen + wire::kIcmpHeaderLen +
          parsed->icmp_payload.size());
      wire::append_ipv4(response, ip);
      wire::append_icmp(response, icmp, parsed->icmp_payload);
    }
    wire::pad_to_minimum(response);

    const double latency_ms =
        profile_.latency_lo_ms +
        unit_interval(derive(profile_.seed, parsed->ip.dst, probe_port, copy,
                             3)) *
            (profile_.latency_hi_ms - profile_.latency_lo_ms);
    queue_.push(Pending{now_s_ + latency_ms / 1000.0, enqueue_order_++,
                        std::move(response)});
  }
}

std::optional<std::vector<std::uint8_t>> SimMedium::recv_frame(
    double timeout_s) {
  std::lock_guard lock(mutex_);
  if (!queue_.empty() && queue_.top().ready_s <= now_s_ + timeout_s) {
    Pending next = queue_.top();
    queue_.pop();
    now_s_ = std::max(now_s_, next.ready_s);
    return std::move(next.frame);
  }
  now_s_ += timeout_s;
  return std::nullopt;
}

double SimMedium::now_s() {
  std::lock_guard lock(mutex_);
  return now_s_;
}

void SimMedium::sleep_s(double seconds) {
  std::lock_guard lock(mutex_);
  now_s_ += seconds;
}

std::uint64_t SimMedium::frames_seen() const {
  std::lock_guard lock(mutex_);
  return frames_seen_;
}

std::uint64_t SimMedium::malformed_frames() const {
  std::lock_guard lock(mutex_);
  return malformed_;
}

}  // namespace zscan::simnet
