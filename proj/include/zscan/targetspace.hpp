#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Maps group elements to (IP, port) targets via the top/bottom-bit split and
// answers order-statistics queries over the allowed address set.

namespace zscan::targetspace {

// Ordered, duplicate-free set of target ports plus the bit width used for
// the low-bit port index (floor of 1 bit even for a single port).
struct PortSet {
  std::vector<std::uint16_t> ports;
  unsigned bit_width = 1;

  static PortSet from_ports(std::vector<std::uint16_t> ports);
  // Parses "80,443,8000-8100". Throws std::invalid_argument on bad syntax.
  static PortSet parse(std::string_view spec);

  std::size_t count() const { return ports.size(); }
};

// Binary radix tree over IPv4 with per-node allowed-address counts.
// Blocklist entries override allowlist entries. Immutable after load.
class AddressConstraint {
 public:
  struct Counts {
    std::uint64_t allowed = 0;
    std::uint64_t removed_by_blocklist = 0;
  };

  // Empty lists mean: allowlist absent -> default-all; blocklist absent ->
  // block nothing. Lines are CIDR or bare dotted quads; '#' starts a
  // comment. Throws std::invalid_argument with a line diagnostic on parse
  // failure, std::runtime_error if nothing remains allowed.
  static AddressConstraint from_lines(const std::vector<std::string>& allow,
                                      const std::vector<std::string>& block);
  static AddressConstraint from_files(const std::string& allow_path,
                                      const std::string& block_path);

  std::uint64_t allowed_count() const;
  const Counts& counts() const { return counts_; }
  bool allows(std::uint32_t ip) const;

  // The index-th allowed address in ascending numeric order, O(32) via the
  // cached subtree counts. Throws std::out_of_range for index >= allowed.
  std::uint32_t nth_allowed(std::uint64_t index) const;

 private:
  struct Node {
    std::unique_ptr<Node> child[2];
    std::uint64_t count = 0;  // allowed addresses beneath this node
  };

  static void set_range(Node& node, unsigned depth, std::uint32_t prefix,
                        unsigned prefix_len, bool allowed);
  static std::uint64_t subtree_size(unsigned depth);

  std::unique_ptr<Node> root_;
  Counts counts_;
};

// Parses "a.b.c.d" or "a.b.c.d/len" into (network address, prefix length).
// Host bits below the prefix are masked off. Throws std::invalid_argument.
std::pair<std::uint32_t, unsigned> parse_cidr(std::string_view text);

std::uint32_t parse_ipv4(std::string_view text);
std::string format_ipv4(std::uint32_t ip);

struct Target {
  std::uint32_t ip = 0;
  std::uint16_t port = 0;
  std::uint64_t element = 0;  // originating group element
};

// Splits element e into (ip_index, port_index); out-of-range indices are a
// skip (nullopt), a normal outcome counted by the caller.
std::optional<Target> decode_element(std::uint64_t element,
                                     const AddressConstraint& constraint,
                                     const PortSet& ports);

}  // namespace zscan::targetspace
