#ifndef UMESH_TYPES_HPP
#define UMESH_TYPES_HPP

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace umesh {

using Clock = std::chrono::steady_clock;
using TimePoint = Clock::time_point;
using Duration = Clock::duration;

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

using NodeId = std::uint64_t;
inline constexpr NodeId kBroadcastId = ~NodeId{0};

// IPv4 host + port in host byte order. The simulator reuses it with host set
// to the node index.
struct Address {
  std::uint32_t host = 0;
  std::uint16_t port = 0;

  friend bool operator==(const Address&, const Address&) = default;
  friend auto operator<=>(const Address&, const Address&) = default;

  std::string to_string() const;
  static Address parse(const std::string& text);  // "a.b.c.d:port", throws std::invalid_argument
};

// Stable 64-bit identifier derived from a node name (FNV-1a).
NodeId node_id_for(std::string_view name);

inline TimePoint at_seconds(double s) {
  return TimePoint{std::chrono::duration_cast<Duration>(std::chrono::duration<double>(s))};
}
inline Duration seconds(double s) {
  return std::chrono::duration_cast<Duration>(std::chrono::duration<double>(s));
}
inline double to_seconds(Duration d) { return std::chrono::duration<double>(d).count(); }
inline double to_seconds(TimePoint t) { return to_seconds(t.time_since_epoch()); }

}  // namespace umesh

template <>
struct std::hash<umesh::Address> {
  std::size_t operator()(const umesh::Address& a) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{a.host} << 16) | a.port);
  }
};

#endif  // UMESH_TYPES_HPP
