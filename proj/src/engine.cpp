#include "zscan/engine.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <sys/utsname.h>
#include <unistd.h>

#include "zscan/dedup.hpp"
#include "zscan/groupcycle.hpp"
#include "zscan/pacing.hpp"
#include "zscan/sharder.hpp"
#include "zscan/targetspace.hpp"
#include "zscan/version.hpp"

namespace zscan::engine {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct Resolved {
  targetspace::PortSet ports{{0}, 1};
  targetspace::AddressConstraint constraint;
  groupcycle::GroupSpec group;
  std::uint64_t generator = 0;
  std::uint64_t seed = 0;
  probes::ValidationKey key;
  probes::ProbeTemplate tmpl;
  std::uint64_t total_targets = 0;
  std::uint64_t max_targets = 0;  // 0 = unlimited
  double per_worker_pps = 0;
};

std::uint64_t parse_max_targets(const std::string& text,
                                std::uint64_t total) {
  if (text.empty()) return 0;
  if (!text.empty() && text.back() == '%') {
    double pct = 0;
    std::string num = text.substr(0, text.size() - 1);
    try {
      pct = std::stod(num);
    } catch (const std::exception&) {
      throw std::invalid_argument("invalid max-targets percentage: " + text);
    }
    if (pct <= 0 || pct > 100)
      throw std::invalid_argument("max-targets percentage outside (0, 100]");
    return static_cast<std::uint64_t>(pct / 100.0 *
                                      static_cast<double>(total));
  }
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                   value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0)
    throw std::invalid_argument("invalid max-targets: " + text);
  return value;
}

Resolved resolve(const ScanConfig& config) {
  Resolved r;
  if (config.rate_pps > 0 && config.bandwidth_bps > 0)
    throw std::invalid_argument(
        "--rate and --bandwidth are mutually exclusive");
  if (config.sender_threads == 0)
    throw std::invalid_argument("sender-threads must be >= 1");
  if (config.shards == 0 || config.shard_index >= config.shards)
    throw std::invalid_argument("shard index must be < shard count");
  if (config.source_port_lo > config.source_port_hi ||
      config.source_port_lo < 1024)
    throw std::invalid_argument("source-port range must be within "
                                "[1024, 65535] and ascending");
  if (config.cooldown_s < 0)
    throw std::invalid_argument("cooldown must be non-negative");

  if (config.probe_kind == probes::ProbeKind::tcp_syn) {
    if (config.target_ports.empty())
      throw std::invalid_argument("tcp_syn scans require --target-ports");
    r.ports = targetspace::PortSet::parse(config.target_ports);
  } else {
    r.ports = targetspace::PortSet::from_ports({0});
  }

  if (!config.allowlist_file.empty() || !config.blocklist_file.empty()) {
    r.constraint = targetspace::AddressConstraint::from_files(
        config.allowlist_file, config.blocklist_file);
  } else {
    r.constraint = targetspace::AddressConstraint::from_lines(
        config.allow_lines, config.block_lines);
  }

  const std::uint64_t space =
      r.constraint.allowed_count() << r.ports.bit_width;
  r.group = groupcycle::smallest_group_for(space);
  r.seed = config.seed ? *config.seed : std::random_device{}();
  r.generator = groupcycle::find_generator(r.group, r.seed);
  r.key = probes::ValidationKey::from_seed(r.seed);

  r.tmpl.kind = config.probe_kind;
  r.tmpl.source_mac = config.source_mac;
  r.tmpl.gateway_mac = config.gateway_mac;
  r.tmpl.source_ip = config.source_ip;
  r.tmpl.source_port_lo = config.source_port_lo;
  r.tmpl.source_port_hi = config.source_port_hi;
  r.tmpl.options = config.tcp_options;
  r.tmpl.ip_id = config.ip_id;

  r.total_targets = r.constraint.allowed_count() * r.ports.count();
  r.max_targets = parse_max_targets(config.max_targets, r.total_targets);

  double pps = config.rate_pps;
  if (config.bandwidth_bps > 0) {
    const std::size_t frame_len =
        config.probe_kind == probes::ProbeKind::tcp_syn
            ? wire::kEthernetHeaderLen + wire::kIpv4HeaderLen +
                  wire::kTcpHeaderLen +
                  probes::tcp_option_bytes(config.tcp_options).size()
            : wire::kEthernetHeaderLen + wire::kIpv4HeaderLen +
                  wire::kIcmpHeaderLen + 8;
    pps = static_cast<double>(
        pacing::line_rate_pps(frame_len, config.bandwidth_bps));
  }
  r.per_worker_pps = pps / config.sender_threads;
  return r;
}

nlohmann::json config_echo(const ScanConfig& config, const Resolved& r) {
  nlohmann::json j;
  j["target_ports"] = config.target_ports;
  j["port_count"] = r.ports.count();
  j["port_bit_width"] = r.ports.bit_width;
  j["allowed_count"] = r.constraint.allowed_count();
  j["removed_by_blocklist"] = r.constraint.counts().removed_by_blocklist;
  j["max_targets"] = r.max_targets;
  j["rate_pps"] = config.rate_pps;
  j["bandwidth_bps"] = config.bandwidth_bps;
  j["batch_size"] = config.batch_size;
  j["shards"] = config.shards;
  j["shard_index"] = config.shard_index;
  j["sender_threads"] = config.sender_threads;
  j["probe_kind"] =
      config.probe_kind == probes::ProbeKind::tcp_syn ? "tcp_syn"
                                                      : "icmp_echo";
  j["tcp_options"] = [&] {
    switch (config.tcp_options) {
      case probes::OptionLayout::none: return "none";
      case probes::OptionLayout::mss_only: return "mss";
      case probes::OptionLayout::linux_os: return "linux";
      case probes::OptionLayout::windows_os: return "windows";
      case probes::OptionLayout::bsd_os: return "bsd";
    }
    return "mss";
  }();
  j["ip_id"] = config.ip_id.random_per_probe
                   ? nlohmann::json("random")
                   : nlohmann::json(config.ip_id.static_value);
  j["source_ip"] = targetspace::format_ipv4(config.source_ip);
  j["source_port_range"] = {config.source_port_lo, config.source_port_hi};
  j["mss"] = 1460;
  j["window_scale"] = 7;
  j["dedup_window"] = config.dedup_window;
  j["cooldown_s"] = config.cooldown_s;
  j["dry_run"] = config.dry_run;
  return j;
}

std::string hex_dump(std::span<const std::uint8_t> bytes) {
  std::ostringstream out;
  for (std::size_t i = 0; i < bytes.size(); i += 16) {
    out << "  " << std::hex << std::setw(4) << std::setfill('0') << i << " ";
    for (std::size_t j = i; j < std::min(i + 16, bytes.size()); ++j)
      out << " " << std::setw(2) << static_cast<unsigned>(bytes[j]);
    out << "\n";
  }
  return out.str();
}

void print_dry_run_frame(std::ostream& out,
                         std::span<const std::uint8_t> frame,
                         const targetspace::Target& target) {
  auto parsed = wire::parse_frame(frame);
  out << "probe " << targetspace::format_ipv4(target.ip) << ":" << target.port
      << " element=" << target.element << " len=" << frame.size() << "\n";
  if (parsed) {
    out << "  ip src=" << targetspace::format_ipv4(parsed->ip.src)
        << " dst=" << targetspace::format_ipv4(parsed->ip.dst)
        << " ttl=" << unsigned{parsed->ip.ttl} << " id=" << parsed->ip.id
        << "\n";
    if (parsed->tcp)
      out << "  tcp sport=" << parsed->tcp->sport
          << " dport=" << parsed->tcp->dport << " seq=" << parsed->tcp->seq
          << " flags=0x" << std::hex << unsigned{parsed->tcp->flags}
          << std::dec << " options=" << parsed->tcp_options.size()
          << "B\n";
    if (parsed->icmp)
      out << "  icmp type=" << unsigned{parsed->icmp->type}
          << " id=" << parsed->icmp->id << " seq=" << parsed->icmp->sequence
          << "\n";
  }
  out << hex_dump(frame);
}

std::string hostname() {
  char buf[256] = {0};
  if (gethostname(buf, sizeof(buf) - 1) != 0) return "unknown";
  return buf;
}

std::string os_description() {
  utsname u{};
  if (uname(&u) != 0) return "unknown";
  return std::string(u.sysname) + " " + u.release;
}

}  // namespace

streams::ScanMetadata run_scan(const ScanConfig& config, Medium& medium,
                               const ScanIO& io, ScanHandle* handle_in) {
  Resolved r = resolve(config);

  ScanHandle local_handle;
  ScanHandle& handle = handle_in ? *handle_in : local_handle;

  streams::Logger logger(io.log ? *io.log : std::cerr, io.log_level);

  streams::ScanMetadata meta;
  meta.version = kVersionString;
  meta.config = config_echo(config, r);
  meta.seed = r.seed;
  meta.generator = r.generator;
  meta.group_prime = r.group.p;
  meta.shard = config.shard_index;
  meta.shards = config.shards;
  meta.subshards = config.sender_threads;
  meta.hostname = hostname();
  meta.os = os_description();
  meta.interface = config.interface.empty() ? "simulated" : config.interface;
  meta.start_time = streams::rfc3339_utc_now();

  logger.info("scan starting: p=" + std::to_string(r.group.p) +
              " g=" + std::to_string(r.generator) +
              " seed=" + std::to_string(r.seed) +
              " targets=" + std::to_string(r.total_targets));

  sharder::ShardPlan plan{r.group, r.generator, config.shards,
                          config.sender_threads};

  if (config.dry_run) {
    std::ostream& out = io.data ? *io.data : std::cout;
    for (std::uint32_t t = 0; t < config.sender_threads; ++t) {
      auto cursor = sharder::make_cursor(plan, config.shard_index, t);
      std::mt19937_64 rng(mix(r.seed ^ t));
      while (auto element = cursor.next()) {
        auto target = targetspace::decode_element(*element, r.constraint,
                                                  r.ports);
        if (!target) {
          handle.skipped_elements.fetch_add(1);
          continue;
        }
        std::uint64_t n = handle.targets_emitted.fetch_add(1);
        if (r.max_targets && n >= r.max_targets) {
          handle.targets_emitted.fetch_sub(1);
          break;
        }
        auto frame = probes::build_probe(
            r.tmpl, *target, r.key, probes::ipid_for_probe(r.tmpl.ip_id, rng));
        print_dry_run_frame(out, frame, *target);
      }
    }
    meta.end_time = streams::rfc3339_utc_now();
    meta.targets_emitted = handle.targets_emitted.load();
    meta.skipped_elements = handle.skipped_elements.load();
    if (io.metadata) streams::finalize_metadata(meta, *io.metadata);
    return meta;
  }

  std::atomic<bool> senders_done{false};
  std::atomic<bool> fatal_error{false};
  std::string fatal_message;
  std::mutex fatal_mutex;
  std::map<std::string, std::atomic<std::uint64_t>> reject_counts;
  for (const char* reason :
       {"malformed", "wrong_dest", "bad_validation", "unknown_type"})
    reject_counts[reason] = 0;
  std::atomic<std::uint64_t> duplicates{0};

  const pacing::RatePlan worker_plan =
      pacing::RatePlan::from_pps(r.per_worker_pps, config.batch_size);

  auto send_worker = [&](std::uint32_t t) {
    auto cursor = sharder::make_cursor(plan, config.shard_index, t);
    std::mt19937_64 rng(mix(r.seed ^ t));
    std::uint64_t sent = 0;
    std::uint32_t in_batch = 0;
    const double start = medium.now_s();
    while (auto element = cursor.next()) {
      if (handle.aborted() || fatal_error.load()) break;
      auto target =
          targetspace::decode_element(*element, r.constraint, r.ports);
      if (!target) {
        handle.skipped_elements.fetch_add(1);
        continue;
      }
      std::uint64_t n = handle.targets_emitted.fetch_add(1);
      if (r.max_targets && n >= r.max_targets) {
        handle.targets_emitted.fetch_sub(1);
        break;
      }
      auto frame = probes::build_probe(
          r.tmpl, *target, r.key, probes::ipid_for_probe(r.tmpl.ip_id, rng));
      medium.send_frame(frame);
      handle.probes_sent.fetch_add(1);
      ++sent;
      if (++in_batch >= config.batch_size) {
        in_batch = 0;
        double delay =
            pacing::pace_delay(worker_plan, sent, start, medium.now_s());
        if (delay > 0) medium.sleep_s(delay);
      }
    }
  };

  auto receive_worker = [&] {
    dedup::DedupWindow window(config.dedup_window);
    streams::DataWriter writer(
        io.data ? *io.data : std::cout, config.output_format,
        config.probe_kind == probes::ProbeKind::tcp_syn);
    try {
      for (;;) {
        const bool done = senders_done.load(std::memory_order_acquire);
        auto frame = medium.recv_frame(done ? config.cooldown_s : 0.01);
        if (!frame) {
          if (done) break;
          continue;
        }
        handle.responses_received.fetch_add(1);
        auto result = probes::validate_response(*frame, r.key, r.tmpl);
        if (auto* reason = std::get_if<probes::RejectReason>(&result)) {
          reject_counts[probes::to_string(*reason)].fetch_add(1);
          continue;
        }
        const auto& record = std::get<probes::ResponseRecord>(result);
        if (!window.check_and_insert(record.target_ip, record.target_port)) {
          duplicates.fetch_add(1);
          continue;
        }
        streams::DataRow row;
        row.saddr = targetspace::format_ipv4(record.responder_ip);
        row.sport = record.responder_port;
        row.classification = probes::to_string(record.classification);
        row.ttl = record.ttl;
        row.timestamp = streams::rfc3339_utc_now();
        writer.write(row);
        handle.rows_output.fetch_add(1);
      }
    } catch (const std::exception& e) {
      std::lock_guard lock(fatal_mutex);
      fatal_message = e.what();
      fatal_error.store(true);
      handle.abort();
    }
  };

  std::atomic<bool> monitor_stop{false};
  auto monitor_worker = [&] {
    const auto wall_start = std::chrono::steady_clock::now();
    while (!monitor_stop.load()) {
      std::this_thread::sleep_for(std::chrono::seconds(1));
      if (monitor_stop.load()) break;
      if (!io.status || config.quiet) continue;
      streams::StatusUpdate update;
      update.elapsed_s = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - wall_start)
                             .count();
      update.sent = handle.probes_sent.load();
      update.recv = handle.responses_received.load();
      update.sent_per_s = update.elapsed_s > 0
                              ? update.sent / update.elapsed_s
                              : 0;
      update.recv_per_s = update.elapsed_s > 0
                              ? update.recv / update.elapsed_s
                              : 0;
      update.hitrate_pct =
          update.sent > 0
              ? 100.0 * handle.rows_output.load() / update.sent
              : 0;
      const std::uint64_t emitted = handle.targets_emitted.load();
      const std::uint64_t goal =
          r.max_targets ? std::min(r.max_targets, r.total_targets)
                        : r.total_targets;
      update.targets_remaining = goal > emitted ? goal - emitted : 0;
      update.eta_s = update.sent_per_s > 0
                         ? update.targets_remaining / update.sent_per_s
                         : 0;
      streams::emit_status(*io.status, update);
    }
  };

  std::vector<std::thread> senders;
  std::thread receiver(receive_worker);
  std::thread monitor(monitor_worker);
  senders.reserve(config.sender_threads);
  for (std::uint32_t t = 0; t < config.sender_threads; ++t)
    senders.emplace_back(send_worker, t);
  for (auto& s : senders) s.join();
  senders_done.store(true, std::memory_order_release);
  receiver.join();
  monitor_stop.store(true);
  monitor.join();

  meta.aborted = handle.aborted();
  meta.end_time = streams::rfc3339_utc_now();
  meta.targets_emitted = handle.targets_emitted.load();
  meta.skipped_elements = handle.skipped_elements.load();
  meta.probes_sent = handle.probes_sent.load();
  meta.responses_received = handle.responses_received.load();
  for (const auto& [reason, count] : reject_counts)
    meta.validation_rejects[reason] = count.load();
  meta.duplicates_suppressed = duplicates.load();
  meta.rows_output = handle.rows_output.load();

  if (io.metadata) {
    try {
      streams::finalize_metadata(meta, *io.metadata);
    } catch (const std::exception& e) {
      logger.error(std::string("metadata write failed: ") + e.what());
      if (!fatal_error.load()) throw;
    }
  }

  if (fatal_error.load()) {
    logger.fatal("scan aborted: " + fatal_message);
    throw std::runtime_error(fatal_message);
  }
  logger.info("scan complete: sent=" + std::to_string(meta.probes_sent) +
              " rows=" + std::to_string(meta.rows_output));
  return meta;
}

}  // namespace zscan::engine
