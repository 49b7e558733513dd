#include "zscan/rawsock.hpp"

#include <cstring>
#include <stdexcept>
#include <thread>

#include <arpa/inet.h>
#include <linux/if_packet.h>
#include <net/ethernet.h>
#include <net/if.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace zscan::rawsock {
namespace {

class RawSocketMedium final : public Medium {
 public:
  explicit RawSocketMedium(const std::string& interface_name) {
    fd_ = ::socket(AF_PACKET, SOCK_RAW, htons(ETH_P_IP));
    if (fd_ < 0)
      throw std::runtime_error("raw socket open failed (need CAP_NET_RAW): " +
                               std::string(std::strerror(errno)));
    unsigned index = ::if_nametoindex(interface_name.c_str());
    if (index == 0) {
      ::close(fd_);
      throw std::runtime_error("no such interface: " + interface_name);
    }
    sockaddr_ll addr{};
    addr.sll_family = AF_PACKET;
    addr.sll_protocol = htons(ETH_P_IP);
    addr.sll_ifindex = static_cast<int>(index);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
      ::close(fd_);
      throw std::runtime_error("bind to interface failed: " +
                               std::string(std::strerror(errno)));
    }
    start_ = std::chrono::steady_clock::now();
  }

  ~RawSocketMedium() override { ::close(fd_); }

  void send_frame(std::span<const std::uint8_t> frame) override {
    if (::send(fd_, frame.data(), frame.size(), 0) < 0)
      throw std::runtime_error("send failed: " +
                               std::string(std::strerror(errno)));
  }

  std::optional<std::vector<std::uint8_t>> recv_frame(
      double timeout_s) override {
    pollfd pfd{fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, static_cast<int>(timeout_s * 1000));
    if (ready <= 0) return std::nullopt;
    std::vector<std::uint8_t> buffer(65536);
    ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n <= 0) return std::nullopt;
    buffer.resize(static_cast<std::size_t>(n));
    return buffer;
  }

  double now_s() override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

  void sleep_s(double seconds) override {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

 private:
  int fd_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::unique_ptr<Medium> open_interface(const std::string& interface_name) {
  return std::make_unique<RawSocketMedium>(interface_name);
}

}  // namespace zscan::rawsock
