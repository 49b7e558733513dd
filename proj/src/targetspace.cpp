#include "zscan/targetspace.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <fstream>
#include <stdexcept>

namespace zscan::targetspace {
namespace {

std::uint64_t parse_number(std::string_view text, std::uint64_t max,
                           const char* what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                   value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value > max)
    throw std::invalid_argument(std::string("invalid ") + what + ": \"" +
                                std::string(text) + "\"");
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string strip(std::string line) {
  if (auto hash = line.find('#'); hash != std::string::npos)
    line.erase(hash);
  auto is_space = [](unsigned char c) { return std::isspace(c); };
  while (!line.empty() && is_space(line.back())) line.pop_back();
  std::size_t i = 0;
  while (i < line.size() && is_space(line[i])) ++i;
  return line.substr(i);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

std::uint32_t parse_ipv4(std::string_view text) {
  auto parts = split(text, '.');
  if (parts.size() != 4)
    throw std::invalid_argument("invalid IPv4 address: \"" +
                                std::string(text) + "\"");
  std::uint32_t ip = 0;
  for (auto part : parts)
    ip = (ip << 8) | static_cast<std::uint32_t>(parse_number(part, 255,
                                                             "octet"));
  return ip;
}

std::string format_ipv4(std::uint32_t ip) {
  return std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 0xFF) +
         "." + std::to_string((ip >> 8) & 0xFF) + "." +
         std::to_string(ip & 0xFF);
}

std::pair<std::uint32_t, unsigned> parse_cidr(std::string_view text) {
  unsigned prefix_len = 32;
  auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    prefix_len = static_cast<unsigned>(
        parse_number(text.substr(slash + 1), 32, "prefix length"));
    text = text.substr(0, slash);
  }
  std::uint32_t ip = parse_ipv4(text);
  std::uint32_t mask =
      prefix_len == 0 ? 0 : ~std::uint32_t{0} << (32 - prefix_len);
  return {ip & mask, prefix_len};
}

PortSet PortSet::from_ports(std::vector<std::uint16_t> ports) {
  if (ports.empty()) throw std::invalid_argument("empty port set");
  std::sort(ports.begin(), ports.end());
  ports.erase(std::unique(ports.begin(), ports.end()), ports.end());
  PortSet set;
  set.ports = std::move(ports);
  unsigned width = std::bit_width(set.ports.size() - 1);
  set.bit_width = std::max(1u, width);
  return set;
}

PortSet PortSet::parse(std::string_view spec) {
  std::vector<std::uint16_t> ports;
  for (auto token : split(spec, ',')) {
    if (auto dash = token.find('-'); dash != std::string_view::npos) {
      auto lo = parse_number(token.substr(0, dash), 65535, "port");
      auto hi = parse_number(token.substr(dash + 1), 65535, "port");
      if (lo > hi)
        throw std::invalid_argument("descending port range: \"" +
                                    std::string(token) + "\"");
      for (std::uint64_t port = lo; port <= hi; ++port)
        ports.push_back(static_cast<std::uint16_t>(port));
    } else {
      ports.push_back(
          static_cast<std::uint16_t>(parse_number(token, 65535, "port")));
    }
  }
  return from_ports(std::move(ports));
}

std::uint64_t AddressConstraint::subtree_size(unsigned depth) {
  return std::uint64_t{1} << (32 - depth);
}

void AddressConstraint::set_range(Node& node, unsigned depth,
                                  std::uint32_t prefix, unsigned prefix_len,
                                  bool allowed) {
  if (depth == prefix_len) {
    node.child[0].reset();
    node.child[1].reset();
    node.count = allowed ? subtree_size(depth) : 0;
    return;
  }
  if (!node.child[0]) {
    // Solid node: split into two solid halves before descending.
    std::uint64_t half = node.count / 2;
    node.child[0] = std::make_unique<Node>();
    node.child[1] = std::make_unique<Node>();
    node.child[0]->count = half;
    node.child[1]->count = half;
  }
  unsigned bit = (prefix >> (31 - depth)) & 1;
  set_range(*node.child[bit], depth + 1, prefix, prefix_len, allowed);
  node.count = node.child[0]->count + node.child[1]->count;
}

AddressConstraint AddressConstraint::from_lines(
    const std::vector<std::string>& allow,
    const std::vector<std::string>& block) {
  AddressConstraint constraint;
  constraint.root_ = std::make_unique<Node>();

  auto apply = [&](const std::vector<std::string>& lines, bool allowed,
                   const char* which) {
    std::size_t lineno = 0;
    for (const auto& raw : lines) {
      ++lineno;
      std::string entry = strip(raw);
      if (entry.empty()) continue;
      try {
        auto [prefix, len] = parse_cidr(entry);
        set_range(*constraint.root_, 0, prefix, len, allowed);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string(which) + " line " +
                                    std::to_string(lineno) + ": " + e.what());
      }
    }
  };

  bool have_allowlist = std::any_of(
      allow.begin(), allow.end(),
      [](const std::string& l) { return !strip(l).empty(); });
  constraint.root_->count = have_allowlist ? 0 : subtree_size(0);
  apply(allow, true, "allowlist");
  std::uint64_t before_block = constraint.root_->count;
  apply(block, false, "blocklist");  // deny wins: applied last
  constraint.counts_.allowed = constraint.root_->count;
  constraint.counts_.removed_by_blocklist =
      before_block - constraint.root_->count;
  if (constraint.counts_.allowed == 0)
    throw std::runtime_error("constraints allow zero addresses");
  return constraint;
}

AddressConstraint AddressConstraint::from_files(const std::string& allow_path,
                                                const std::string& block_path) {
  std::vector<std::string> allow, block;
  if (!allow_path.empty()) allow = read_lines(allow_path);
  if (!block_path.empty()) block = read_lines(block_path);
  try {
    return from_lines(allow, block);
  } catch (const std::invalid_argument& e) {
    std::string what = e.what();
    if (what.rfind("allowlist", 0) == 0 && !allow_path.empty())
      throw std::invalid_argument(allow_path + ": " + what);
    if (what.rfind("blocklist", 0) == 0 && !block_path.empty())
      throw std::invalid_argument(block_path + ": " + what);
    throw;
  }
}

std::uint64_t AddressConstraint::allowed_count() const {
  return root_ ? root_->count : 0;
}

bool AddressConstraint::allows(std::uint32_t ip) const {
  const Node* node = root_.get();
  for (unsigned depth = 0; node->child[0]; ++depth)
    node = node->child[(ip >> (31 - depth)) & 1].get();
  return node->count != 0;
}

std::uint32_t AddressConstraint::nth_allowed(std::uint64_t index) const {
  if (index >= allowed_count())
    throw std::out_of_range("allowed-address index out of range");
  const Node* node = root_.get();
  std::uint32_t address = 0;
  unsigned depth = 0;
  while (node->child[0]) {
    if (index < node->child[0]->count) {
      node = node->child[0].get();
    } else {
      index -= node->child[0]->count;
      address |= std::uint32_t{1} << (31 - depth);
      node = node->child[1].get();
    }
    ++depth;
  }
  // Solid allowed subtree: addresses are contiguous from its base.
  return address + static_cast<std::uint32_t>(index);
}

std::optional<Target> decode_element(std::uint64_t element,
                                     const AddressConstraint& constraint,
                                     const PortSet& ports) {
  // Group elements live in [1, p-1]; index 0 would otherwise be unreachable.
  const std::uint64_t index = element - 1;
  const std::uint64_t port_index = index & ((std::uint64_t{1}
                                             << ports.bit_width) - 1);
  const std::uint64_t ip_index = index >> ports.bit_width;
  if (port_index >= ports.count()) return std::nullopt;
  if (ip_index >= constraint.allowed_count()) return std::nullopt;
  return Target{constraint.nth_allowed(ip_index),
                ports.ports[static_cast<std::size_t>(port_index)], element};
}

}  // namespace zscan::targetspace
