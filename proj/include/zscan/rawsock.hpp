#pragma once

#include <memory>
#include <string>

#include "zscan/medium.hpp"

// AF_PACKET backend. Requires CAP_NET_RAW; everything above it is tested
// against the simulated medium, which shares the Medium interface exactly.

namespace zscan::rawsock {

std::unique_ptr<Medium> open_interface(const std::string& interface_name);

}  // namespace zscan::rawsock
