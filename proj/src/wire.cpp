#include "umesh/wire.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>
#include <stdexcept>

namespace umesh::wire {

namespace {

class Writer {
 public:
  explicit Writer(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }

 private:
  Bytes& out_;
};

class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}

  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() {
    std::uint16_t v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  ByteView take(std::size_t n) {
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  ByteView in_;
  std::size_t pos_ = 0;
};

bool carries_topic(Kind kind, std::uint16_t frag_index) {
  return (kind == Kind::Data || kind == Kind::BcastData) && frag_index == 0;
}

bool valid_heartbeat_payload(ByteView payload) {
  return !payload.empty() && payload[0] <= kMaxNameLen && payload.size() == std::size_t{payload[0]} + 1;
}

}  // namespace

const char* to_string(EncodeError e) {
  switch (e) {
    case EncodeError::OversizeTopic: return "OversizeTopic";
    case EncodeError::OversizePayload: return "OversizePayload";
    case EncodeError::InvalidEnvelope: return "InvalidEnvelope";
  }
  return "?";
}

const char* to_string(DecodeError e) {
  switch (e) {
    case DecodeError::Truncated: return "Truncated";
    case DecodeError::BadMagic: return "BadMagic";
    case DecodeError::BadVersion: return "BadVersion";
    case DecodeError::BadKind: return "BadKind";
    case DecodeError::InconsistentLength: return "InconsistentLength";
  }
  return "?";
}

const char* to_string(Kind k) {
  switch (k) {
    case Kind::Heartbeat: return "Heartbeat";
    case Kind::Data: return "Data";
    case Kind::Ack: return "Ack";
    case Kind::BcastData: return "BcastData";
  }
  return "?";
}

std::size_t encoded_size(const Envelope& env) {
  return kHeaderSize + env.topic.size() + env.payload.size();
}

std::variant<Bytes, EncodeError> encode_envelope(const Envelope& env) {
  if (env.topic.size() > kMaxTopicLen) return EncodeError::OversizeTopic;
  if (encoded_size(env) > kMtu) return EncodeError::OversizePayload;
  if (env.frag_count == 0 || env.frag_index >= env.frag_count) return EncodeError::InvalidEnvelope;
  if (!env.topic.empty() && !carries_topic(env.kind, env.frag_index)) return EncodeError::InvalidEnvelope;
  if (env.kind == Kind::Ack && !env.payload.empty()) return EncodeError::InvalidEnvelope;
  if (env.kind == Kind::Heartbeat && (env.dest_id != kBroadcastId || !valid_heartbeat_payload(env.payload)))
    return EncodeError::InvalidEnvelope;

  Bytes out;
  out.reserve(encoded_size(env));
  Writer w(out);
  w.u16(kMagic);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(env.kind));
  w.u64(env.source_id);
  w.u64(env.dest_id);
  w.u32(env.message_id);
  w.u16(env.frag_index);
  w.u16(env.frag_count);
  w.u8(env.priority);
  w.u8(static_cast<std::uint8_t>(env.topic.size()));
  w.u16(static_cast<std::uint16_t>(env.payload.size()));
  w.raw(env.topic.data(), env.topic.size());
  w.raw(env.payload.data(), env.payload.size());
  return out;
}

std::variant<Envelope, DecodeError> decode_envelope(ByteView bytes) {
  if (bytes.size() < kHeaderSize) return DecodeError::Truncated;
  Reader r(bytes);
  if (r.u16() != kMagic) return DecodeError::BadMagic;
  if (r.u8() != kVersion) return DecodeError::BadVersion;
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(Kind::BcastData)) return DecodeError::BadKind;

  Envelope env;
  env.kind = static_cast<Kind>(kind);
  env.source_id = r.u64();
  env.dest_id = r.u64();
  env.message_id = r.u32();
  env.frag_index = r.u16();
  env.frag_count = r.u16();
  env.priority = r.u8();
  const std::size_t topic_len = r.u8();
  const std::size_t payload_len = r.u16();

  if (bytes.size() < kHeaderSize + topic_len + payload_len) return DecodeError::Truncated;
  if (bytes.size() != kHeaderSize + topic_len + payload_len) return DecodeError::InconsistentLength;
  if (env.frag_count == 0 || env.frag_index >= env.frag_count) return DecodeError::InconsistentLength;
  if (topic_len > kMaxTopicLen) return DecodeError::InconsistentLength;
  if (topic_len != 0 && !carries_topic(env.kind, env.frag_index)) return DecodeError::InconsistentLength;
  if (env.kind == Kind::Ack && payload_len != 0) return DecodeError::InconsistentLength;

  auto topic = r.take(topic_len);
  env.topic.assign(topic.begin(), topic.end());
  auto payload = r.take(payload_len);
  env.payload.assign(payload.begin(), payload.end());

  if (env.kind == Kind::Heartbeat && (env.dest_id != kBroadcastId || !valid_heartbeat_payload(env.payload)))
    return DecodeError::InconsistentLength;
  return env;
}

Bytes heartbeat_payload(std::string_view name) {
  if (name.size() > kMaxNameLen) throw std::invalid_argument("node name longer than 64 bytes");
  Bytes out;
  out.reserve(name.size() + 1);
  out.push_back(static_cast<std::uint8_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  return out;
}

std::string heartbeat_name(const Envelope& env) {
  if (env.payload.empty()) return {};
  const std::size_t n = std::min<std::size_t>(env.payload[0], env.payload.size() - 1);
  return std::string(env.payload.begin() + 1, env.payload.begin() + 1 + static_cast<std::ptrdiff_t>(n));
}

std::size_t fragment_count(std::size_t payload_len, std::size_t topic_len) {
  const std::size_t first = first_fragment_capacity(topic_len);
  if (payload_len <= first) return 1;
  const std::size_t rest = payload_len - first;
  return 1 + (rest + kFragmentCapacity - 1) / kFragmentCapacity;
}

FragmentPlan plan_fragments(std::size_t payload_len, std::size_t topic_len) {
  assert(topic_len <= kMaxTopicLen);
  FragmentPlan plan;
  plan.total_len = payload_len;
  plan.frag_count = fragment_count(payload_len, topic_len);
  plan.ranges.reserve(plan.frag_count);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < plan.frag_count; ++i) {
    const std::size_t cap = i == 0 ? first_fragment_capacity(topic_len) : kFragmentCapacity;
    const std::size_t len = std::min(cap, payload_len - offset);
    plan.ranges.push_back({offset, len});
    offset += len;
  }
  return plan;
}

}  // namespace umesh::wire
