#ifndef UMESH_WIRE_HPP
#define UMESH_WIRE_HPP

#include "umesh/types.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace umesh::wire {

// Datagram layout, network byte order (see WIRE.md):
//
//   off  size  field
//    0    2    magic 0x554D ("UM")
//    2    1    version (1)
//    3    1    kind
//    4    8    source_id
//   12    8    dest_id (all ones = broadcast)
//   20    4    message_id
//   24    2    frag_index
//   26    2    frag_count
//   28    1    priority (0 = highest)
//   29    1    topic_len (non-zero only on fragment 0 of Data/BcastData)
//   30    2    payload_len
//   32    ..   topic bytes, then payload bytes
inline constexpr std::uint16_t kMagic = 0x554D;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 32;
inline constexpr std::size_t kMtu = 1500;
inline constexpr std::size_t kOverheadBudget = 100;
inline constexpr std::size_t kFragmentCapacity = kMtu - kOverheadBudget;  // 1400
inline constexpr std::size_t kMaxTopicLen = 64;
inline constexpr std::size_t kMaxNameLen = 64;

enum class Kind : std::uint8_t { Heartbeat = 0, Data = 1, Ack = 2, BcastData = 3 };

struct Envelope {
  Kind kind = Kind::Data;
  NodeId source_id = 0;
  NodeId dest_id = 0;
  std::uint32_t message_id = 0;
  std::uint16_t frag_index = 0;
  std::uint16_t frag_count = 1;
  std::uint8_t priority = 128;
  std::string topic;
  Bytes payload;

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

enum class EncodeError { OversizeTopic, OversizePayload, InvalidEnvelope };
enum class DecodeError { Truncated, BadMagic, BadVersion, BadKind, InconsistentLength };

const char* to_string(EncodeError e);
const char* to_string(DecodeError e);
const char* to_string(Kind k);

std::variant<Bytes, EncodeError> encode_envelope(const Envelope& env);
std::variant<Envelope, DecodeError> decode_envelope(ByteView bytes);

// Exact encoded size of an envelope; does not validate.
std::size_t encoded_size(const Envelope& env);

// Heartbeat payload is the sender's name behind a one-byte length prefix.
Bytes heartbeat_payload(std::string_view name);
std::string heartbeat_name(const Envelope& env);

struct ByteRange {
  std::size_t offset = 0;
  std::size_t length = 0;
  friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

struct FragmentPlan {
  std::size_t total_len = 0;
  std::size_t frag_count = 1;
  std::vector<ByteRange> ranges;
};

// Capacity of fragment 0 given the topic length; later fragments carry kFragmentCapacity.
constexpr std::size_t first_fragment_capacity(std::size_t topic_len) {
  return kFragmentCapacity - topic_len;
}

// Number of fragments without materialising ranges.
std::size_t fragment_count(std::size_t payload_len, std::size_t topic_len);

// Requires topic_len <= kMaxTopicLen.
FragmentPlan plan_fragments(std::size_t payload_len, std::size_t topic_len);

}  // namespace umesh::wire

#endif  // UMESH_WIRE_HPP
