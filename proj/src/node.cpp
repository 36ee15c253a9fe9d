#include "umesh/node.hpp"

#include <stdexcept>

namespace umesh {

const char* to_string(PeerTransition t) {
  switch (t) {
    case PeerTransition::Discovered: return "Discovered";
    case PeerTransition::CameOnline: return "CameOnline";
    case PeerTransition::WentOffline: return "WentOffline";
  }
  return "?";
}

Node::Node(NodeConfig config, Medium& medium)
    : config_(std::move(config)),
      id_(node_id_for(config_.name)),
      medium_(medium),
      peers_(config_.liveness),
      engine_(id_, config_.reliable, peers_, scheduler_),
      broadcaster_(id_, peers_, engine_, [this](const Bytes& d) { send_broadcast(d); }),
      router_(scheduler_, engine_, broadcaster_) {
  if (config_.name.empty() || config_.name.size() > wire::kMaxNameLen)
    throw std::invalid_argument("node name must be 1..64 bytes");
  router_.reconfigure(config_.topics);
  engine_.set_next_message_id(config_.first_message_id);
  heartbeat_ = std::get<Bytes>(wire::encode_envelope(peers::make_heartbeat(id_, config_.name)));
}

void Node::start(TimePoint now) {
  started_ = true;
  send_broadcast(heartbeat_);
  ++counters_.heartbeats_sent;
  next_heartbeat_ = now + config_.liveness.heartbeat_period;
}

void Node::send_to(const wire::Envelope& env, const Address& to) {
  auto encoded = wire::encode_envelope(env);
  const Bytes& bytes = std::get<Bytes>(encoded);
  medium_.send_to(bytes, to);
  ++counters_.datagrams_sent;
  counters_.bytes_sent += bytes.size();
}

void Node::send_broadcast(const Bytes& datagram) {
  medium_.send_broadcast(datagram);
  ++counters_.datagrams_sent;
  counters_.bytes_sent += datagram.size();
}

void Node::report(PeerTransition t, NodeId peer, TimePoint now) {
  if (hooks_.on_peer) hooks_.on_peer(peer, t, now);
}

void Node::on_datagram(ByteView datagram, const Address& from, TimePoint now) {
  ++counters_.datagrams_received;
  auto decoded = wire::decode_envelope(datagram);
  if (std::holds_alternative<wire::DecodeError>(decoded)) {
    ++counters_.decode_errors;
    return;
  }
  const wire::Envelope& env = std::get<wire::Envelope>(decoded);
  if (env.source_id == id_) return;  // own broadcast looped back

  switch (env.kind) {
    case wire::Kind::Heartbeat: {
      ++counters_.heartbeats_received;
      if (hooks_.on_heartbeat_received) hooks_.on_heartbeat_received(env, now);
      auto ev = peers_.observe(env, from, now);
      if (auto* e = std::get_if<peers::PeerEvent>(&ev)) {
        if (*e == peers::PeerEvent::Discovered) report(PeerTransition::Discovered, env.source_id, now);
        if (*e == peers::PeerEvent::CameOnline) report(PeerTransition::CameOnline, env.source_id, now);
      }
      break;
    }
    case wire::Kind::Ack:
      if (env.dest_id != id_) {
        ++counters_.misaddressed;
        return;
      }
      if (hooks_.on_ack_received) hooks_.on_ack_received(env, now);
      engine_.on_ack(env, from, now);
      break;
    case wire::Kind::Data: {
      if (env.dest_id != id_) {
        ++counters_.misaddressed;
        return;
      }
      auto result = engine_.on_data(env, now);
      send_to(result.ack, from);
      if (result.delivery) router_.deliver(*result.delivery);
      break;
    }
    case wire::Kind::BcastData:
      ++counters_.broadcasts_received;
      router_.deliver(broadcaster_.on_broadcast_data(env, now));
      break;
  }
  pump(now);
}

void Node::tick(TimePoint now) {
  if (started_) {
    while (now >= next_heartbeat_) {
      send_broadcast(heartbeat_);
      ++counters_.heartbeats_sent;
      next_heartbeat_ += config_.liveness.heartbeat_period;
    }
  }
  for (NodeId id : peers_.sweep(now)) report(PeerTransition::WentOffline, id, now);

  // Reassembly purges can mark peers Offline inside tick(); surface those too.
  std::vector<NodeId> online_before = peers_.online_peers();
  auto actions = engine_.tick(now);
  for (NodeId id : online_before)
    if (!peers_.is_online(id)) report(PeerTransition::WentOffline, id, now);
  if (hooks_.on_action)
    for (const auto& a : actions) hooks_.on_action(a, now);
  pump(now);
}

void Node::pump(TimePoint now) {
  while (auto env = engine_.next_transmission(now)) {
    const peers::PeerRecord* rec = peers_.find(env->dest_id);
    if (rec == nullptr) continue;
    send_to(*env, rec->address);
    if (hooks_.on_fragment_sent) {
      const auto* t = engine_.find_transfer(env->dest_id, env->message_id);
      const TimePoint deadline = t ? t->in_flight.at(env->frag_index) : now;
      hooks_.on_fragment_sent(*env, deadline, now);
    }
  }
  for (const auto& outcome : engine_.take_finished())
    if (hooks_.on_transfer_finished) hooks_.on_transfer_finished(outcome);
}

std::variant<topics::Published, topics::PublishError> Node::publish(const std::string& topic, Bytes payload,
                                                                    TimePoint now, std::optional<std::string> dest) {
  auto r = router_.publish(topic, std::make_shared<const Bytes>(std::move(payload)), now, std::move(dest));
  pump(now);
  return r;
}

std::variant<std::uint32_t, reliable::SubmitError> Node::send(const std::string& dest, const std::string& topic,
                                                              std::shared_ptr<const Bytes> payload, TimePoint now) {
  auto r = engine_.submit(dest, topic, std::move(payload), scheduler_.topic_priority(topic), now);
  pump(now);
  return r;
}

multipoint::BroadcastOutcome Node::broadcast(const std::string& topic, Bytes payload, TimePoint now) {
  auto r = broadcaster_.broadcast(topic, std::make_shared<const Bytes>(std::move(payload)),
                                  scheduler_.topic_priority(topic), now);
  pump(now);
  return r;
}

void Node::set_topic_priority(const std::string& topic, std::uint8_t priority) {
  router_.set_topic_priority(topic, priority);
}

void Node::shutdown(TimePoint now) {
  auto actions = engine_.abort_all(now);
  if (hooks_.on_action)
    for (const auto& a : actions) hooks_.on_action(a, now);
  for (const auto& outcome : engine_.take_finished())
    if (hooks_.on_transfer_finished) hooks_.on_transfer_finished(outcome);
}

std::vector<PeerStatus> Node::status(TimePoint now) const {
  std::vector<PeerStatus> out;
  for (const auto& rec : peers_.snapshot()) {
    PeerStatus s;
    s.name = rec.name;
    s.node_id = rec.node_id;
    s.state = rec.state;
    s.address = rec.address;
    s.last_heard_age = now - rec.last_heard;
    s.bytes_queued = engine_.queued_bytes(rec.node_id);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace umesh
