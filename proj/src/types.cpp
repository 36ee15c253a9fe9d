#include "umesh/types.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <stdexcept>

namespace umesh {

std::string Address::to_string() const {
  in_addr a{};
  a.s_addr = htonl(host);
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &a, buf, sizeof buf);
  return std::string(buf) + ":" + std::to_string(port);
}

Address Address::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("address lacks ':port': " + text);
  const std::string host = text.substr(0, colon);
  in_addr a{};
  if (inet_pton(AF_INET, host.c_str(), &a) != 1) throw std::invalid_argument("bad IPv4 address: " + host);
  unsigned port = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc{} || ptr != last || port > 65535 || first == last)
    throw std::invalid_argument("bad port: " + text);
  return Address{ntohl(a.s_addr), static_cast<std::uint16_t>(port)};
}

NodeId node_id_for(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // All-ones is reserved for broadcast.
  return h == kBroadcastId ? h - 1 : h;
}

}  // namespace umesh
