#include "umesh/multipoint.hpp"

#include <stdexcept>

namespace umesh::multipoint {

Broadcaster::Broadcaster(NodeId self, peers::PeerTable& peers, reliable::ReliableEngine& engine, SendBroadcast send)
    : self_(self), peers_(peers), engine_(engine), send_(std::move(send)) {}

BroadcastOutcome Broadcaster::broadcast(const std::string& topic, std::shared_ptr<const Bytes> payload,
                                        std::uint8_t priority, TimePoint now) {
  if (topic.size() > wire::kMaxTopicLen) throw std::invalid_argument("topic longer than 64 bytes");
  BroadcastOutcome out;
  if (wire::fragment_count(payload->size(), topic.size()) == 1) {
    wire::Envelope env;
    env.kind = wire::Kind::BcastData;
    env.source_id = self_;
    env.dest_id = kBroadcastId;
    env.message_id = engine_.allocate_message_id();
    env.priority = priority;
    env.topic = topic;
    env.payload = *payload;
    auto encoded = wire::encode_envelope(env);
    send_(std::get<Bytes>(encoded));
    ++datagrams_sent_;
    out.kind = BroadcastKind::SingleDatagram;
    out.message_ids.push_back(env.message_id);
    return out;
  }

  out.kind = BroadcastKind::FanOut;
  for (NodeId peer : peers_.online_peers()) {
    auto r = engine_.submit(peer, topic, payload, priority, now);
    if (auto* id = std::get_if<std::uint32_t>(&r)) out.message_ids.push_back(*id);
  }
  return out;
}

InboundDelivery Broadcaster::on_broadcast_data(const wire::Envelope& env, TimePoint now) const {
  InboundDelivery d;
  d.source_id = env.source_id;
  if (const auto* rec = peers_.find(env.source_id)) d.source_name = rec->name;
  d.topic = env.topic;
  d.payload = env.payload;
  d.arrival_time = now;
  return d;
}

}  // namespace umesh::multipoint
