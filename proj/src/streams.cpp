#include "zscan/streams.hpp"

#include <ctime>
#include <iomanip>
#include <sstream>

namespace zscan::streams {

DataWriter::DataWriter(std::ostream& sink, OutputFormat format,
                       bool with_port)
    : sink_(sink), format_(format), with_port_(with_port) {}

void DataWriter::write(const DataRow& row) {
  switch (format_) {
    case OutputFormat::text:
      if (with_port_)
        sink_ << row.saddr << ":" << row.sport << "\n";
      else
        sink_ << row.saddr << "\n";
      break;
    case OutputFormat::csv:
      if (!header_written_) {
        sink_ << "saddr,sport,classification,ttl,timestamp\n";
        header_written_ = true;
      }
      sink_ << row.saddr << "," << row.sport << "," << row.classification
            << "," << row.ttl << "," << row.timestamp << "\n";
      break;
    case OutputFormat::jsonl: {
      nlohmann::json obj;
      obj["saddr"] = row.saddr;
      obj["sport"] = row.sport;
      obj["classification"] = row.classification;
      obj["ttl"] = row.ttl;
      obj["timestamp"] = row.timestamp;
      sink_ << obj.dump() << "\n";
      break;
    }
  }
  sink_.flush();
  if (!sink_) throw std::runtime_error("data stream write failed");
  ++rows_;
}

void emit_status(std::ostream& channel, const StatusUpdate& u) {
  channel << "status elapsed_s=" << u.elapsed_s << " sent=" << u.sent
          << " sent_per_s=" << u.sent_per_s << " recv=" << u.recv
          << " recv_per_s=" << u.recv_per_s << " drops=" << u.drops
          << " hitrate_pct=" << u.hitrate_pct
          << " targets_remaining=" << u.targets_remaining
          << " eta_s=" << u.eta_s << "\n";
  channel.flush();
}

void Logger::log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(level_)) return;
  (*sink_) << "[" << to_string(level) << "] " << message << "\n";
  sink_->flush();
}

nlohmann::json to_json(const ScanMetadata& meta) {
  nlohmann::json j;
  j["version"] = meta.version;
  j["config"] = meta.config;
  j["seed"] = meta.seed;
  j["generator"] = meta.generator;
  j["group_prime"] = meta.group_prime;
  j["shard"] = {{"index", meta.shard},
                {"shards", meta.shards},
                {"subshards", meta.subshards}};
  j["start_time"] = meta.start_time;
  j["end_time"] = meta.end_time;
  j["aborted"] = meta.aborted;
  j["counts"] = {{"targets_emitted", meta.targets_emitted},
                 {"skipped_elements", meta.skipped_elements},
                 {"probes_sent", meta.probes_sent},
                 {"responses_received", meta.responses_received},
                 {"validation_rejects", meta.validation_rejects},
                 {"duplicates_suppressed", meta.duplicates_suppressed},
                 {"rows_output", meta.rows_output}};
  j["environment"] = {{"hostname", meta.hostname},
                      {"os", meta.os},
                      {"interface", meta.interface}};
  return j;
}

void finalize_metadata(const ScanMetadata& meta, std::ostream& channel) {
  channel << to_json(meta).dump(2) << "\n";
  channel.flush();
  if (!channel) throw std::runtime_error("metadata write failed");
}

std::string rfc3339_utc(std::int64_t unix_seconds) {
  std::time_t t = static_cast<std::time_t>(unix_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string rfc3339_utc_now() {
  return rfc3339_utc(static_cast<std::int64_t>(std::time(nullptr)));
}

const char* to_string(LogLevel level) {
  switch (level) {
    case LogLevel::fatal: return "fatal";
    case LogLevel::error: return "error";
    case LogLevel::warn: return "warn";
    case LogLevel::info: return "info";
    case LogLevel::debug: return "debug";
    case LogLevel::trace: return "trace";
  }
  return "info";
}

bool parse_log_level(const std::string& text, LogLevel& out) {
  for (LogLevel level : {LogLevel::fatal, LogLevel::error, LogLevel::warn,
                         LogLevel::info, LogLevel::debug, LogLevel::trace}) {
    if (text == to_string(level)) {
      out = level;
      return true;
    }
  }
  return false;
}

bool parse_output_format(const std::string& text, OutputFormat& out) {
  if (text == "text") {
    out = OutputFormat::text;
  } else if (text == "csv") {
    out = OutputFormat::csv;
  } else if (text == "json" || text == "jsonl") {
    out = OutputFormat::jsonl;
  } else {
    return false;
  }
  return true;
}

}  // namespace zscan::streams
