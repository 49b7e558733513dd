#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "zscan/engine.hpp"
#include "zscan/rawsock.hpp"
#include "zscan/targetspace.hpp"
#include "zscan/version.hpp"

namespace zscan::engine {
namespace {

ScanHandle* g_active_handle = nullptr;

void handle_sigint(int) {
  if (g_active_handle) g_active_handle->abort();
}

std::uint64_t parse_bandwidth(const std::string& text) {
  if (text.empty()) return 0;
  std::size_t idx = 0;
  double value = std::stod(text, &idx);
  std::uint64_t scale = 1;
  if (idx < text.size()) {
    switch (text[idx]) {
      case 'K': case 'k': scale = 1000; break;
      case 'M': case 'm': scale = 1000000; break;
      case 'G': case 'g': scale = 1000000000; break;
      default:
        throw CLI::ValidationError("--bandwidth",
                                   "unknown suffix in \"" + text + "\"");
    }
    if (idx + 1 != text.size())
      throw CLI::ValidationError("--bandwidth", "trailing characters");
  }
  if (value <= 0) throw CLI::ValidationError("--bandwidth", "must be > 0");
  return static_cast<std::uint64_t>(value * static_cast<double>(scale));
}

wire::MacAddress parse_mac(const std::string& text) {
  wire::MacAddress mac{};
  unsigned values[6];
  if (std::sscanf(text.c_str(), "%x:%x:%x:%x:%x:%x", &values[0], &values[1],
                  &values[2], &values[3], &values[4], &values[5]) != 6)
    throw CLI::ValidationError("--gateway-mac", "expected aa:bb:cc:dd:ee:ff");
  for (int i = 0; i < 6; ++i) {
    if (values[i] > 0xFF)
      throw CLI::ValidationError("--gateway-mac", "octet out of range");
    mac[i] = static_cast<std::uint8_t>(values[i]);
  }
  return mac;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Stateless Internet-scale scan engine"};
  app.set_version_flag("--version", std::string(kVersionString));

  ScanConfig config;
  std::string probe_module = "tcp_syn";
  std::string tcp_options = "mss";
  std::string ip_id = "random";
  std::string source_port_range;
  std::string source_ip_text;
  std::string gateway_mac_text;
  std::string bandwidth_text;
  std::string simulate_profile;
  std::string output_file, output_module = "csv";
  std::string log_file, log_level_text = "info";
  std::string status_file, metadata_file;
  std::int64_t seed = -1;
  int verbosity = -1;

  app.add_option("-p,--target-ports", config.target_ports,
                 "Ports to scan, e.g. \"80,443,8000-8100\"");
  app.add_option("-w,--allowlist-file", config.allowlist_file,
                 "File of CIDRs to scan (default: all of IPv4)");
  app.add_option("-b,--blocklist-file", config.blocklist_file,
                 "File of CIDRs never to scan (overrides allowlist)");
  app.add_option("-n,--max-targets", config.max_targets,
                 "Cap on decoded targets, absolute or percentage (\"12.5%\")");
  app.add_option("-r,--rate", config.rate_pps, "Send rate in packets/sec");
  app.add_option("-B,--bandwidth", bandwidth_text,
                 "Send rate as bandwidth (suffix K/M/G); excludes --rate");
  app.add_option("--shards", config.shards, "Total number of shards");
  app.add_option("--shard", config.shard_index, "This machine's shard index");
  app.add_option("-T,--sender-threads", config.sender_threads,
                 "Send threads (internal subshards)");
  app.add_option("-M,--probe-module", probe_module,
                 "Probe module: tcp_syn or icmp_echo");
  app.add_option("--tcp-options", tcp_options,
                 "TCP option layout: none|mss|linux|windows|bsd");
  app.add_option("--ip-id", ip_id,
                 "IP ID policy: random or static:<0-65535>");
  app.add_option("-s,--source-port", source_port_range,
                 "Source port or range lo-hi");
  app.add_option("-S,--source-ip", source_ip_text, "Source IPv4 address");
  app.add_option("-G,--gateway-mac", gateway_mac_text,
                 "Gateway MAC address aa:bb:cc:dd:ee:ff");
  app.add_option("-i,--interface", config.interface,
                 "Network interface (raw-socket mode)");
  app.add_option("--simulate", simulate_profile,
                 "Run against a simulated medium profile (JSON file)");
  app.add_option("--seed", seed, "PRNG seed (default: entropy, recorded)");
  app.add_option("--dedup-window", config.dedup_window,
                 "Response dedup window size (0 disables)");
  app.add_option("--cooldown-secs", config.cooldown_s,
                 "Post-send listening period");
  app.add_flag("-d,--dryrun", config.dry_run,
               "Print probes instead of sending them");
  app.add_option("--batch-size", config.batch_size,
                 "Probes between pacing checks");
  app.add_option("-o,--output-file", output_file, "Data stream destination");
  app.add_option("-O,--output-module", output_module,
                 "Data format: text|csv|json");
  app.add_option("--log-file", log_file, "Log stream destination");
  app.add_option("--log-level", log_level_text,
                 "fatal|error|warn|info|debug|trace");
  app.add_option("--status-updates-file", status_file,
                 "Status stream destination");
  app.add_option("--metadata-file", metadata_file,
                 "Metadata document destination");
  app.add_flag("-q,--quiet", config.quiet, "Suppress status updates");
  app.add_option("-v,--verbosity", verbosity,
                 "Log verbosity 0-5 (alternative to --log-level)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    std::cout << app.version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  std::ofstream data_file, log_sink_file, status_sink_file, meta_sink_file;
  streams::LogLevel log_level = streams::LogLevel::info;

  try {
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    config.bandwidth_bps = parse_bandwidth(bandwidth_text);

    if (probe_module == "tcp_syn") {
      config.probe_kind = probes::ProbeKind::tcp_syn;
    } else if (probe_module == "icmp_echo") {
      config.probe_kind = probes::ProbeKind::icmp_echo;
    } else {
      throw CLI::ValidationError("--probe-module",
                                 "unknown module " + probe_module);
    }

    if (auto layout = probes::option_layout_from_string(tcp_options)) {
      config.tcp_options = *layout;
    } else {
      throw CLI::ValidationError("--tcp-options", "unknown layout");
    }

    if (ip_id == "random") {
      config.ip_id.random_per_probe = true;
    } else if (ip_id.rfind("static:", 0) == 0) {
      config.ip_id.random_per_probe = false;
      int value = std::stoi(ip_id.substr(7));
      if (value < 0 || value > 65535)
        throw CLI::ValidationError("--ip-id", "static value out of range");
      config.ip_id.static_value = static_cast<std::uint16_t>(value);
    } else {
      throw CLI::ValidationError("--ip-id", "expected random or static:<n>");
    }

    if (!source_port_range.empty()) {
      auto dash = source_port_range.find('-');
      if (dash == std::string::npos) {
        int port = std::stoi(source_port_range);
        config.source_port_lo = config.source_port_hi =
            static_cast<std::uint16_t>(port);
      } else {
        config.source_port_lo = static_cast<std::uint16_t>(
            std::stoi(source_port_range.substr(0, dash)));
        config.source_port_hi = static_cast<std::uint16_t>(
            std::stoi(source_port_range.substr(dash + 1)));
      }
    }
    if (!source_ip_text.empty())
      config.source_ip = targetspace::parse_ipv4(source_ip_text);
    if (!gateway_mac_text.empty())
      config.gateway_mac = parse_mac(gateway_mac_text);

    if (config.blocklist_file.empty()) {
      if (const char* env = std::getenv("ZSCAN_BLOCKLIST"); env && *env)
        config.blocklist_file = env;
    }

    if (!streams::parse_output_format(output_module, config.output_format))
      throw CLI::ValidationError("--output-module", "unknown format");
    if (verbosity >= 0) {
      log_level = static_cast<streams::LogLevel>(
          std::min(verbosity, 5));
    } else if (!streams::parse_log_level(log_level_text, log_level)) {
      throw CLI::ValidationError("--log-level", "unknown level");
    }

    if (simulate_profile.empty() && config.interface.empty() &&
        !config.dry_run)
      throw CLI::ValidationError(
          "--simulate/--interface",
          "need a medium: --simulate=<profile.json> or -i <interface>");
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  auto open_or_die = [](std::ofstream& stream, const std::string& path) {
    stream.open(path);
    if (!stream) throw std::runtime_error("cannot open " + path);
  };

  try {
    // Stream routing: data to stdout, logs to stderr, status to the log
    // channel, metadata to the log channel - unless files are given.
    ScanIO io;
    io.log_level = log_level;
    if (!output_file.empty()) {
      open_or_die(data_file, output_file);
      io.data = &data_file;
    } else {
      io.data = &std::cout;
    }
    if (!log_file.empty()) {
      open_or_die(log_sink_file, log_file);
      io.log = &log_sink_file;
    } else {
      io.log = &std::cerr;
    }
    if (!status_file.empty()) {
      open_or_die(status_sink_file, status_file);
      io.status = &status_sink_file;
    } else if (!config.quiet) {
      io.status = io.log;
    }
    if (!metadata_file.empty()) {
      open_or_die(meta_sink_file, metadata_file);
      io.metadata = &meta_sink_file;
    } else {
      io.metadata = io.log;
    }

    std::unique_ptr<Medium> medium;
    if (!simulate_profile.empty()) {
      medium = std::make_unique<simnet::SimMedium>(
          simnet::MediumProfile::from_file(simulate_profile));
    } else if (!config.interface.empty()) {
      medium = rawsock::open_interface(config.interface);
    } else {
      // Dry run needs no transport; a zero-responder simulation suffices.
      medium = std::make_unique<simnet::SimMedium>(simnet::MediumProfile{});
    }

    ScanHandle handle;
    g_active_handle = &handle;
    std::signal(SIGINT, handle_sigint);
    auto meta = run_scan(config, *medium, io, &handle);
    std::signal(SIGINT, SIG_DFL);
    g_active_handle = nullptr;
    return meta.aborted ? 130 : 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace zscan::engine
