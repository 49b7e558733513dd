#include "doctest.h"

#include <set>
#include <sstream>
#include <thread>

#include "zscan/engine.hpp"

using namespace zscan;
using namespace zscan::engine;

namespace {

struct CapturedRun {
  streams::ScanMetadata meta;
  std::string data, log, status, metadata;
};

CapturedRun run(const ScanConfig& config, const simnet::MediumProfile& profile,
                ScanHandle* handle = nullptr) {
  simnet::SimMedium medium(profile);
  std::ostringstream data, log, status, metadata;
  ScanIO io{&data, &log, &status, &metadata};
  CapturedRun result;
  result.meta = run_scan(config, medium, io, handle);
  result.data = data.str();
  result.log = log.str();
  result.status = status.str();
  result.metadata = metadata.str();
  return result;
}

ScanConfig base_config() {
  ScanConfig config;
  config.target_ports = "80";
  config.allow_lines = {"10.0.0.0/24"};
  config.seed = 42;
  config.cooldown_s = 1.0;
  config.output_format = streams::OutputFormat::csv;
  return config;
}

simnet::MediumProfile profile_from(const char* text) {
  return simnet::MediumProfile::from_json(nlohmann::json::parse(text));
}

std::set<std::string> data_lines(const std::string& text) {
  std::set<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("saddr,", 0) != 0) lines.insert(line);
  return lines;
}

}  // namespace

TEST_CASE("/24 with an exact responder set yields exactly those rows") {
  // 26 of 256 addresses answer: 10.0.0.0/28 (16), 10.0.0.32/29 (8),
  // 10.0.0.64/31 (2).
  auto profile = profile_from(R"({
    "seed": 9,
    "responders": [
      {"cidr": "10.0.0.0/28", "behavior": "synack"},
      {"cidr": "10.0.0.32/29", "behavior": "synack"},
      {"cidr": "10.0.0.64/31", "behavior": "synack"}
    ]
  })");
  auto result = run(base_config(), profile);
  CHECK(result.meta.rows_output == 26);
  CHECK(result.meta.duplicates_suppressed == 0);
  CHECK(result.meta.probes_sent == 256);
  CHECK(result.meta.targets_emitted == 256);
  CHECK(result.meta.responses_received == 26);
  CHECK(data_lines(result.data).size() == 26);
  CHECK_FALSE(result.meta.aborted);
}

TEST_CASE("100% responders gives full coverage rows") {
  auto profile = profile_from(R"({
    "seed": 1,
    "responders": [{"cidr": "10.0.0.0/24", "behavior": "synack"}]
  })");
  auto config = base_config();
  config.target_ports = "80,443";
  auto result = run(config, profile);
  CHECK(result.meta.rows_output == 512);  // allowed_count x port_count
  CHECK(result.meta.targets_emitted == 512);
  // Full cycle accounting: emitted + skipped = p - 1
  CHECK(result.meta.targets_emitted + result.meta.skipped_elements ==
        result.meta.group_prime - 1);
}

TEST_CASE("same seed, same config: identical row sets") {
  auto profile_text = R"({
    "seed": 17, "loss_prob": 0.3, "latency_ms": [1.0, 20.0],
    "responders": [{"cidr": "10.0.0.0/26", "behavior": "synack"}]
  })";
  auto a = run(base_config(), profile_from(profile_text));
  auto b = run(base_config(), profile_from(profile_text));
  CHECK(a.meta.rows_output == b.meta.rows_output);
  // Rows are identical modulo the trailing timestamp column.
  auto strip_ts = [](const std::set<std::string>& rows) {
    std::set<std::string> out;
    for (const auto& row : rows) out.insert(row.substr(0, row.rfind(',')));
    return out;
  };
  CHECK(strip_ts(data_lines(a.data)) == strip_ts(data_lines(b.data)));
}

TEST_CASE("counting identity holds with loss and blowback") {
  auto profile = profile_from(R"({
    "seed": 23, "loss_prob": 0.3,
    "responders": [
      {"cidr": "10.0.0.0/25", "behavior": "synack"},
      {"cidr": "10.0.0.128/26", "behavior": "blowback", "count": 50}
    ]
  })");
  auto result = run(base_config(), profile);
  std::uint64_t rejects = 0;
  for (const auto& [reason, count] : result.meta.validation_rejects)
    rejects += count;
  CHECK(result.meta.rows_output ==
        result.meta.responses_received - rejects -
            result.meta.duplicates_suppressed);
  CHECK(result.meta.duplicates_suppressed > 0);
}

TEST_CASE("multiple sender threads cover the space exactly once") {
  auto profile = profile_from(R"({
    "seed": 1,
    "responders": [{"cidr": "10.0.0.0/24", "behavior": "synack"}]
  })");
  auto config = base_config();
  config.sender_threads = 4;
  auto result = run(config, profile);
  CHECK(result.meta.rows_output == 256);
  CHECK(result.meta.duplicates_suppressed == 0);
}

TEST_CASE("sharded scans partition the work") {
  auto profile_text = R"({
    "seed": 1,
    "responders": [{"cidr": "10.0.0.0/24", "behavior": "synack"}]
  })";
  std::set<std::string> all_rows;
  std::uint64_t total_sent = 0;
  for (std::uint32_t shard = 0; shard < 3; ++shard) {
    auto config = base_config();
    config.shards = 3;
    config.shard_index = shard;
    auto result = run(config, profile_from(profile_text));
    for (const auto& line : data_lines(result.data)) {
      CHECK(all_rows.insert(line).second);  // no overlap across shards
    }
    total_sent += result.meta.probes_sent;
  }
  CHECK(all_rows.size() == 256);
  CHECK(total_sent == 256);
}

TEST_CASE("dry run prints frames and sends nothing") {
  auto config = base_config();
  config.allow_lines = {"10.0.0.0/30"};
  config.dry_run = true;
  auto result = run(config, simnet::MediumProfile{});
  CHECK(result.meta.probes_sent == 0);
  CHECK(result.meta.targets_emitted == 4);
  // One block per probe with a hex dump
  std::size_t probes = 0, pos = 0;
  while ((pos = result.data.find("probe 10.0.0.", pos)) != std::string::npos) {
    ++probes;
    ++pos;
  }
  CHECK(probes == 4);
  CHECK(result.data.find("tcp sport=") != std::string::npos);
}

TEST_CASE("max-targets absolute and percentage") {
  auto profile = profile_from(R"({
    "seed": 1,
    "responders": [{"cidr": "10.0.0.0/24", "behavior": "synack"}]
  })");
  auto config = base_config();
  config.max_targets = "10";
  auto result = run(config, profile);
  CHECK(result.meta.targets_emitted == 10);
  CHECK(result.meta.probes_sent == 10);

  config.max_targets = "12.5%";
  result = run(config, profile);
  CHECK(result.meta.targets_emitted == 32);  // 12.5% of 256
}

TEST_CASE("config validation rejects bad combinations before sending") {
  simnet::SimMedium medium(simnet::MediumProfile{});
  ScanIO io{};
  auto config = base_config();
  config.rate_pps = 100;
  config.bandwidth_bps = 1000000;
  CHECK_THROWS_AS(run_scan(config, medium, io), std::invalid_argument);

  config = base_config();
  config.target_ports = "";
  CHECK_THROWS_AS(run_scan(config, medium, io), std::invalid_argument);

  config = base_config();
  config.shard_index = 5;
  CHECK_THROWS_AS(run_scan(config, medium, io), std::invalid_argument);

  config = base_config();
  config.source_port_lo = 80;  // below 1024
  CHECK_THROWS_AS(run_scan(config, medium, io), std::invalid_argument);

  config = base_config();
  config.max_targets = "150%";
  CHECK_THROWS_AS(run_scan(config, medium, io), std::invalid_argument);
}

TEST_CASE("abort before start stops promptly and flags metadata") {
  auto profile = profile_from(R"({
    "seed": 1,
    "responders": [{"cidr": "10.0.0.0/16", "behavior": "synack"}]
  })");
  auto config = base_config();
  config.allow_lines = {"10.0.0.0/16"};
  ScanHandle handle;
  handle.abort();  // aborted from the very first batch boundary
  auto result = run(config, profile, &handle);
  CHECK(result.meta.aborted);
  CHECK(result.meta.probes_sent <= 1);
  // Second abort is a no-op
  handle.abort();
  CHECK(handle.aborted());
}

TEST_CASE("metadata stream echoes a reproducible configuration") {
  auto profile = profile_from(R"({
    "seed": 1,
    "responders": [{"cidr": "10.0.0.0/24", "behavior": "synack"}]
  })");
  auto result = run(base_config(), profile);
  auto doc = nlohmann::json::parse(result.metadata);
  CHECK(doc["seed"] == 42);
  CHECK(doc["generator"] == result.meta.generator);
  CHECK(doc["group_prime"] == 65537);
  CHECK(doc["aborted"] == false);
  CHECK(doc["config"]["dedup_window"] == 1000000);
  CHECK(doc["counts"]["rows_output"] == 256);
}

TEST_CASE("data stream stays pure") {
  auto profile = profile_from(R"({
    "seed": 1,
    "responders": [{"cidr": "10.0.0.0/24", "behavior": "synack"}]
  })");
  for (auto format : {streams::OutputFormat::text, streams::OutputFormat::csv,
                      streams::OutputFormat::jsonl}) {
    auto config = base_config();
    config.output_format = format;
    auto result = run(config, profile);
    CHECK(result.data.find("status ") == std::string::npos);
    CHECK(result.data.find("[info]") == std::string::npos);
    CHECK(result.data.find("\"counts\"") == std::string::npos);
    CHECK(result.log.find("10.0.0.") == std::string::npos);
  }
}

TEST_CASE("icmp echo scan end to end") {
  auto profile = profile_from(R"({
    "seed": 1,
    "responders": [{"cidr": "10.0.0.0/27", "behavior": "synack"}]
  })");
  auto config = base_config();
  config.probe_kind = probes::ProbeKind::icmp_echo;
  config.target_ports = "";
  config.output_format = streams::OutputFormat::text;
  auto result = run(config, profile);
  CHECK(result.meta.rows_output == 32);
  // Text format for a non-TCP scan prints bare addresses
  CHECK(result.data.find(":") == std::string::npos);
}
