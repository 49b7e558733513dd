#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>

#include "json.hpp"

// The four separated output streams: data, logs, real-time status, and
// end-of-scan metadata. Data carries one row per validated, deduplicated
// response with a static schema; nothing else ever goes there.

namespace zscan::streams {

enum class OutputFormat { text, csv, jsonl };

struct DataRow {
  std::string saddr;
  std::uint16_t sport = 0;
  std::string classification;
  int ttl = 0;
  std::string timestamp;  // RFC 3339 UTC
};

// One writer per scan; flushes after every row.
class DataWriter {
 public:
  DataWriter(std::ostream& sink, OutputFormat format, bool with_port);
  void write(const DataRow& row);
  std::uint64_t rows_written() const { return rows_; }

 private:
  std::ostream& sink_;
  OutputFormat format_;
  bool with_port_;
  bool header_written_ = false;
  std::uint64_t rows_ = 0;
};

struct StatusUpdate {
  double elapsed_s = 0;
  std::uint64_t sent = 0;
  double sent_per_s = 0;
  std::uint64_t recv = 0;
  double recv_per_s = 0;
  std::uint64_t drops = 0;
  double hitrate_pct = 0;
  std::uint64_t targets_remaining = 0;
  double eta_s = 0;
};

// Single-line machine-parsable record; the status channel is always
// distinct from the data channel.
void emit_status(std::ostream& channel, const StatusUpdate& update);

enum class LogLevel { fatal, error, warn, info, debug, trace };

class Logger {
 public:
  Logger(std::ostream& sink, LogLevel level) : sink_(&sink), level_(level) {}
  void log(LogLevel level, const std::string& message);
  void fatal(const std::string& m) { log(LogLevel::fatal, m); }
  void error(const std::string& m) { log(LogLevel::error, m); }
  void warn(const std::string& m) { log(LogLevel::warn, m); }
  void info(const std::string& m) { log(LogLevel::info, m); }
  void debug(const std::string& m) { log(LogLevel::debug, m); }

 private:
  std::ostream* sink_;
  LogLevel level_;
};

struct ScanMetadata {
  std::string version;
  nlohmann::json config;  // full resolved configuration echo
  std::uint64_t seed = 0;
  std::uint64_t generator = 0;
  std::uint64_t group_prime = 0;
  std::uint32_t shard = 0;
  std::uint32_t shards = 0;
  std::uint32_t subshards = 0;
  std::string start_time;
  std::string end_time;
  bool aborted = false;
  std::uint64_t targets_emitted = 0;
  std::uint64_t skipped_elements = 0;
  std::uint64_t probes_sent = 0;
  std::uint64_t responses_received = 0;
  std::map<std::string, std::uint64_t> validation_rejects;
  std::uint64_t duplicates_suppressed = 0;
  std::uint64_t rows_output = 0;
  std::string hostname;
  std::string os;
  std::string interface;
};

nlohmann::json to_json(const ScanMetadata& meta);

// Serializes the metadata document exactly once, even on abort.
void finalize_metadata(const ScanMetadata& meta, std::ostream& channel);

std::string rfc3339_utc_now();
std::string rfc3339_utc(std::int64_t unix_seconds);

const char* to_string(LogLevel level);
bool parse_log_level(const std::string& text, LogLevel& out);
bool parse_output_format(const std::string& text, OutputFormat& out);

}  // namespace zscan::streams
