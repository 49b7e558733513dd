// Acceptance suite: runs every release criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit status is nonzero if
// any criterion fails. Usage: acceptance <golden-dir>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "zscan/dedup.hpp"
#include "zscan/engine.hpp"
#include "zscan/groupcycle.hpp"
#include "zscan/pacing.hpp"
#include "zscan/probes.hpp"
#include "zscan/sharder.hpp"
#include "zscan/simnet.hpp"
#include "zscan/targetspace.hpp"

using namespace zscan;

namespace {

int g_failures = 0;

void report(int number, const char* name, bool pass,
            const std::string& detail = "") {
  std::printf("criterion %2d [%s] %s%s%s\n", number, pass ? "PASS" : "FAIL",
              name, detail.empty() ? "" : ": ", detail.c_str());
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// ---- 1. Permutation completeness -----------------------------------------

void criterion_1() {
  const auto& group = groupcycle::builtin_groups()[0];  // p = 65537
  bool pass = true;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 20 && pass; ++seed) {
    auto start = std::chrono::steady_clock::now();
    auto perm = groupcycle::Permutation::create(group, seed * 7919);
    std::vector<bool> seen(group.p, false);
    seen[perm.first] = true;
    std::uint64_t count = 1;
    while (auto e = perm.next()) {
      if (seen[*e]) { pass = false; break; }
      seen[*e] = true;
      ++count;
    }
    if (count != group.p - 1) pass = false;
    for (std::uint64_t v = 1; v < group.p; ++v)
      if (!seen[v]) { pass = false; break; }
    worst = std::max(worst, seconds_since(start));
  }
  if (worst >= 1.0) pass = false;
  std::ostringstream detail;
  detail << "20 seeds, worst cycle " << worst << " s";
  report(1, "permutation completeness p=65537", pass, detail.str());
}

// ---- 2. Generator-test oracle equivalence ---------------------------------

void criterion_2() {
  auto start = std::chrono::steady_clock::now();
  const auto& group = groupcycle::builtin_groups()[0];
  const std::uint64_t p = group.p;
  std::uint64_t generators = 0;
  bool pass = true;
  for (std::uint64_t g = 2; g <= 65535; ++g) {
    // Brute-force multiplicative order, independent of the exponent test.
    std::uint64_t x = g, order = 1;
    while (x != 1) {
      x = x * g % p;
      ++order;
    }
    bool oracle_says = order == p - 1;
    if (groupcycle::is_generator(g, group) != oracle_says) {
      pass = false;
      break;
    }
    if (oracle_says) ++generators;
  }
  if (generators != 32768) pass = false;  // phi(65536)
  double elapsed = seconds_since(start);
  if (elapsed >= 30.0) pass = false;
  std::ostringstream detail;
  detail << generators << " generators, " << elapsed << " s";
  report(2, "is_generator equals brute-force order oracle", pass,
         detail.str());
}

// ---- 3. Shard partition ----------------------------------------------------

void criterion_3() {
  bool pass = true;
  for (std::uint64_t p : {7ull, 257ull, 65537ull}) {
    groupcycle::GroupSpec group;
    if (p == 7) group = {7, {{2, 1}, {3, 1}}};
    else if (p == 257) group = {257, {{2, 8}}};
    else group = groupcycle::builtin_groups()[0];
    std::uint64_t g = groupcycle::find_generator(group, 5);
    for (std::uint32_t N : {1u, 2u, 3u, 5u, 8u}) {
      for (std::uint32_t T : {1u, 2u, 4u}) {
        if (std::uint64_t{N} * T > p - 1) continue;
        sharder::ShardPlan plan{group, g, N, T};
        std::set<std::uint64_t> all;
        for (std::uint32_t n = 0; n < N && pass; ++n) {
          std::uint64_t lo = ~0ull, hi = 0;
          for (std::uint32_t t = 0; t < T; ++t) {
            auto cursor = sharder::make_cursor(plan, n, t);
            std::uint64_t size = 0;
            while (auto e = cursor.next()) {
              if (!all.insert(*e).second) pass = false;  // disjoint
              ++size;
            }
            lo = std::min(lo, size);
            hi = std::max(hi, size);
          }
          if (hi - lo > 1) pass = false;  // within-shard spread
        }
        if (all.size() != p - 1) pass = false;  // union = full group
      }
    }
  }
  report(3, "pizza shard partition over (p, N, T) matrix", pass);
}

// ---- 4. Multiport coverage --------------------------------------------------

void criterion_4() {
  auto ports = targetspace::PortSet::parse("80,443,8080");
  bool pass = true;
  std::ostringstream detail;

  auto count_targets = [&](const targetspace::AddressConstraint& constraint,
                           std::uint64_t* blocked_emissions) {
    const auto& group = groupcycle::smallest_group_for(
        constraint.allowed_count() << ports.bit_width);
    auto perm = groupcycle::Permutation::create(group, 4242);
    std::map<std::pair<std::uint32_t, std::uint16_t>, int> hits;
    std::uint64_t element = perm.first;
    for (;;) {
      if (auto t = targetspace::decode_element(element, constraint, ports)) {
        ++hits[{t->ip, t->port}];
        if (blocked_emissions && t->ip >= 0x0A000000 &&
            t->ip < 0x0A000080)
          ++*blocked_emissions;
      }
      auto next = perm.next();
      if (!next) break;
      element = *next;
    }
    std::uint64_t total = 0;
    for (auto& [k, v] : hits) {
      if (v != 1) pass = false;
      total += v;
    }
    return total;
  };

  auto open_constraint =
      targetspace::AddressConstraint::from_lines({"10.0.0.0/22"}, {});
  std::uint64_t full = count_targets(open_constraint, nullptr);
  if (full != 3072) pass = false;

  auto blocked_constraint = targetspace::AddressConstraint::from_lines(
      {"10.0.0.0/22"}, {"10.0.0.0/25"});  // 128 addresses removed
  std::uint64_t blocked_emissions = 0;
  std::uint64_t reduced = count_targets(blocked_constraint,
                                        &blocked_emissions);
  if (reduced != 2688 || blocked_emissions != 0) pass = false;

  detail << "1024x3 -> " << full << " targets; blocklisted -> " << reduced
         << " with " << blocked_emissions << " blocked emissions";
  report(4, "multiport coverage with blocklist", pass, detail.str());
}

// ---- 5. Dedup window curve ---------------------------------------------------

void criterion_5() {
  // Synthetic blowback trace through the simulated medium.
  auto profile = simnet::MediumProfile::from_json(nlohmann::json::parse(R"({
    "seed": 31, "latency_ms": [1.0, 200.0],
    "responders": [
      {"cidr": "10.0.0.0/24", "behavior": "blowback", "count": 30},
      {"cidr": "10.0.1.0/24", "behavior": "synack_dup", "count": 5},
      {"cidr": "10.0.0.0/16", "behavior": "synack"}
    ]
  })"));
  simnet::SimMedium medium(profile);
  probes::ProbeTemplate tmpl;
  tmpl.source_ip = 0xC0000201;
  auto key = probes::ValidationKey::from_seed(8);
  for (std::uint32_t i = 0; i < 1024; ++i) {
    targetspace::Target target{0x0A000000 + i, 80, 0};
    medium.send_frame(probes::build_probe(tmpl, target, key, 0));
  }
  std::vector<std::pair<std::uint32_t, std::uint16_t>> trace;
  while (auto frame = medium.recv_frame(600.0)) {
    auto result = probes::validate_response(*frame, key, tmpl);
    if (auto* rec = std::get_if<probes::ResponseRecord>(&result))
      trace.emplace_back(rec->target_ip, rec->target_port);
  }

  bool pass = trace.size() > 5000;
  std::uint64_t previous = ~0ull;
  std::uint64_t at_million = 0;
  std::ostringstream detail;
  detail << trace.size() << " responses; passed dups:";
  for (std::size_t n :
       {100ul, 1000ul, 10000ul, 100000ul, 1000000ul}) {
    dedup::DedupWindow window(n);
    std::set<std::uint64_t> ever;
    std::uint64_t passed_duplicates = 0;
    for (auto [ip, port] : trace) {
      bool fresh = window.check_and_insert(ip, port);
      std::uint64_t packed = (std::uint64_t{ip} << 16) | port;
      if (fresh && !ever.insert(packed).second) ++passed_duplicates;
    }
    if (passed_duplicates > previous) pass = false;  // monotone
    previous = passed_duplicates;
    if (n == 1000000) at_million = passed_duplicates;
    detail << " " << passed_duplicates;
  }
  if (at_million != 0) pass = false;
  report(5, "dedup duplicate curve monotone, zero at 10^6", pass,
         detail.str());
}

// ---- 6. Line-rate table --------------------------------------------------------

void criterion_6() {
  struct Row { std::size_t frame; std::uint64_t pps; };
  const Row rows[] = {{54, 1488095}, {58, 1488095}, {66, 1388888},
                      {74, 1275510}};
  bool pass = true;
  for (const auto& row : rows) {
    std::uint64_t got = pacing::line_rate_pps(row.frame, 1000000000);
    if (got > row.pps + 1 || got + 1 < row.pps) pass = false;
  }
  report(6, "1 GbE line-rate table 1.488/1.488/1.389/1.276 Mpps", pass);
}

// ---- 7. Packet golden vectors ----------------------------------------------------

std::uint16_t reference_checksum(const std::uint8_t* data, std::size_t len) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < len; i += 2) {
    std::uint16_t word = static_cast<std::uint16_t>(data[i]) << 8;
    if (i + 1 < len) word |= data[i + 1];
    sum += word;
    if (sum > 0xFFFF) sum = (sum & 0xFFFF) + 1;
  }
  return static_cast<std::uint16_t>(~sum & 0xFFFF);
}

void criterion_7(const std::string& golden_dir) {
  probes::ProbeTemplate tmpl;
  tmpl.source_mac = {0x02, 0x00, 0x00, 0x00, 0x00, 0x01};
  tmpl.gateway_mac = {0x02, 0x00, 0x00, 0x00, 0x00, 0x02};
  tmpl.source_ip = 0xC0000201;       // 192.0.2.1
  tmpl.ip_id = {false, 54321};
  auto key = probes::ValidationKey::from_seed(0xF00D);
  targetspace::Target target{0xC6336417, 443, 0};  // 198.51.100.23

  const std::pair<probes::OptionLayout, const char*> layouts[] = {
      {probes::OptionLayout::none, "none"},
      {probes::OptionLayout::mss_only, "mss"},
      {probes::OptionLayout::windows_os, "windows"},
      {probes::OptionLayout::bsd_os, "bsd"},
      {probes::OptionLayout::linux_os, "linux"},
  };
  const std::size_t expected_len[] = {54, 58, 66, 70, 74};

  bool pass = true;
  std::string detail;
  int i = 0;
  for (const auto& [layout, name] : layouts) {
    tmpl.options = layout;
    auto frame = probes::build_probe(tmpl, target, key, 54321);
    if (frame.size() != expected_len[i]) {
      pass = false;
      detail = std::string(name) + " length mismatch";
    }
    ++i;

    std::ifstream in(golden_dir + "/tcp_syn_" + name + ".bin",
                     std::ios::binary);
    if (!in) {
      pass = false;
      detail = std::string("missing golden file for ") + name;
      continue;
    }
    std::vector<std::uint8_t> golden((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (golden != frame) {
      pass = false;
      detail = std::string(name) + " differs from golden bytes";
    }
    // Independent checksum oracle: both sums verify to zero.
    if (reference_checksum(frame.data() + 14, 20) != 0) pass = false;
    std::vector<std::uint8_t> pseudo;
    for (std::size_t b = 26; b < 34; ++b) pseudo.push_back(frame[b]);
    pseudo.push_back(0);
    pseudo.push_back(6);
    std::uint16_t seg = static_cast<std::uint16_t>(frame.size() - 34);
    pseudo.push_back(static_cast<std::uint8_t>(seg >> 8));
    pseudo.push_back(static_cast<std::uint8_t>(seg));
    pseudo.insert(pseudo.end(), frame.begin() + 34, frame.end());
    if (reference_checksum(pseudo.data(), pseudo.size()) != 0) pass = false;
  }
  report(7, "golden packet vectors, checksums, lengths 54/58/66/70/74",
         pass, detail);
}

// ---- 8. Validation robustness ------------------------------------------------------

void criterion_8() {
  probes::ProbeTemplate tmpl;
  tmpl.source_ip = 0xC0000201;
  auto key = probes::ValidationKey::from_seed(77);
  std::mt19937_64 rng(1);

  bool pass = true;
  std::ostringstream detail;

  // 10^6 forged SYN-ACKs with uniformly random seq/ack: zero accepted.
  std::uint64_t accepted = 0;
  std::vector<std::uint8_t> forged;
  for (int i = 0; i < 1000000; ++i) {
    forged.clear();
    wire::MacAddress mac{};
    wire::append_ethernet(forged, mac, mac, wire::kEtherTypeIpv4);
    wire::Ipv4Header ip;
    ip.src = static_cast<std::uint32_t>(rng());
    ip.dst = tmpl.source_ip;
    ip.protocol = wire::kProtocolTcp;
    ip.total_length = 40;
    wire::append_ipv4(forged, ip);
    wire::TcpHeader tcp;
    tcp.sport = static_cast<std::uint16_t>(rng());
    tcp.dport = static_cast<std::uint16_t>(
        tmpl.source_port_lo + rng() % (tmpl.source_port_hi -
                                       tmpl.source_port_lo + 1));
    tcp.seq = static_cast<std::uint32_t>(rng());
    tcp.ack = static_cast<std::uint32_t>(rng());
    tcp.flags = wire::kTcpFlagSyn | wire::kTcpFlagAck;
    wire::append_tcp(forged, ip.src, ip.dst, tcp, {});
    if (std::holds_alternative<probes::ResponseRecord>(
            probes::validate_response(forged, key, tmpl)))
      ++accepted;
  }
  if (accepted != 0) pass = false;
  detail << accepted << " forgeries accepted";

  // 10^6 fuzzed byte strings: crash-free (and nothing validates by luck).
  for (int i = 0; i < 1000000; ++i) {
    std::vector<std::uint8_t> junk(rng() % 128);
    for (auto& b : junk) b = static_cast<std::uint8_t>(rng());
    (void)probes::validate_response(junk, key, tmpl);
  }

  // Every single-bit ack corruption of an honest SYN-ACK is rejected.
  targetspace::Target target{0x0A010203, 443, 0};
  auto probe = probes::build_probe(tmpl, target, key, 0);
  auto parsed = wire::parse_frame(probe);
  std::vector<std::uint8_t> reply;
  wire::append_ethernet(reply, parsed->eth_src, parsed->eth_dst,
                        wire::kEtherTypeIpv4);
  wire::Ipv4Header ip;
  ip.src = target.ip;
  ip.dst = tmpl.source_ip;
  ip.protocol = wire::kProtocolTcp;
  ip.total_length = 40;
  wire::append_ipv4(reply, ip);
  wire::TcpHeader tcp;
  tcp.sport = target.port;
  tcp.dport = parsed->tcp->sport;
  tcp.ack = parsed->tcp->seq + 1;
  tcp.flags = wire::kTcpFlagSyn | wire::kTcpFlagAck;
  wire::append_tcp(reply, ip.src, ip.dst, tcp, {});
  if (!std::holds_alternative<probes::ResponseRecord>(
          probes::validate_response(reply, key, tmpl)))
    pass = false;
  for (int bit = 0; bit < 32; ++bit) {
    auto corrupted = reply;
    corrupted[42 + (3 - bit / 8)] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    if (!std::holds_alternative<probes::RejectReason>(
            probes::validate_response(corrupted, key, tmpl)))
      pass = false;
  }
  report(8, "validation robustness: forgeries, fuzz, ack bit flips", pass,
         detail.str());
}

// ---- 9. End-to-end determinism and bookkeeping -------------------------------------

void criterion_9() {
  // /20 target space, ~5% responders, loss 30%.
  const char* profile_text = R"({
    "seed": 55, "loss_prob": 0.3, "latency_ms": [1.0, 40.0],
    "responders": [
      {"cidr": "10.0.0.0/25", "behavior": "synack"},
      {"cidr": "10.0.4.0/26", "behavior": "synack"},
      {"cidr": "10.0.8.0/29", "behavior": "blowback", "count": 40}
    ]
  })";
  engine::ScanConfig config;
  config.target_ports = "80";
  config.allow_lines = {"10.0.0.0/20"};
  config.seed = 1234;
  config.cooldown_s = 2.0;

  auto run_once = [&] {
    simnet::SimMedium medium(simnet::MediumProfile::from_json(
        nlohmann::json::parse(profile_text)));
    std::ostringstream data, log, metadata;
    engine::ScanIO io{&data, &log, nullptr, &metadata};
    auto meta = engine::run_scan(config, medium, io);
    std::set<std::string> rows;
    std::istringstream in(data.str());
    std::string line;
    while (std::getline(in, line))
      if (line.rfind("saddr,", 0) != 0) rows.insert(line);
    return std::pair{meta, rows};
  };

  auto [meta_a, rows_a] = run_once();
  auto [meta_b, rows_b] = run_once();

  bool pass = true;
  // Rows carry timestamps; compare the (saddr, sport, class, ttl) prefix.
  auto strip_ts = [](const std::set<std::string>& rows) {
    std::set<std::string> out;
    for (const auto& row : rows)
      out.insert(row.substr(0, row.rfind(',')));
    return out;
  };
  if (strip_ts(rows_a) != strip_ts(rows_b)) pass = false;
  if (meta_a.rows_output != meta_b.rows_output) pass = false;

  for (const auto* meta : {&meta_a, &meta_b}) {
    std::uint64_t rejects = 0;
    for (const auto& [reason, count] : meta->validation_rejects)
      rejects += count;
    if (meta->rows_output !=
        meta->responses_received - rejects - meta->duplicates_suppressed)
      pass = false;
  }
  std::ostringstream detail;
  detail << meta_a.rows_output << " rows both runs, "
         << meta_a.duplicates_suppressed << " dups suppressed";
  report(9, "end-to-end determinism and count identity under loss", pass,
         detail.str());
}

// ---- 10. Pacing accuracy --------------------------------------------------------------

void criterion_10() {
  const double target = 10000;
  pacing::RatePlan plan = pacing::RatePlan::from_pps(target, 64);
  double now = 0;
  std::uint64_t sent = 0;
  bool pass = true;
  while (now < 10.0) {
    for (std::uint32_t i = 0; i < plan.batch_size && now < 10.0; ++i) {
      ++sent;
      now += 2e-6;  // per-send cost on the virtual clock
      if (static_cast<double>(sent) > target * now + plan.batch_size)
        pass = false;
    }
    now += pacing::pace_delay(plan, sent, 0.0, now);
  }
  if (sent < 99000 || sent > 101000) pass = false;
  std::ostringstream detail;
  detail << sent << " probes in 10 simulated seconds";
  report(10, "pacing 10^4 pps accuracy and burst bound", pass, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  std::string golden_dir = argc > 1 ? argv[1] : "tests/golden";
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7(golden_dir);
  criterion_8();
  criterion_9();
  criterion_10();
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}
