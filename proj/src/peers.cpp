#include "umesh/peers.hpp"

#include <stdexcept>

namespace umesh::peers {

const char* to_string(PeerState s) { return s == PeerState::Online ? "Online" : "Offline"; }

const char* to_string(PeerEvent e) {
  switch (e) {
    case PeerEvent::Discovered: return "Discovered";
    case PeerEvent::Refreshed: return "Refreshed";
    case PeerEvent::CameOnline: return "CameOnline";
  }
  return "?";
}

void LivenessConfig::validate() const {
  if (heartbeat_period <= Duration::zero()) throw std::invalid_argument("heartbeat_period must be positive");
  if (offline_timeout < 2 * heartbeat_period)
    throw std::invalid_argument("offline_timeout must be at least 2 x heartbeat_period");
}

wire::Envelope make_heartbeat(NodeId self_id, std::string_view self_name) {
  wire::Envelope env;
  env.kind = wire::Kind::Heartbeat;
  env.source_id = self_id;
  env.dest_id = kBroadcastId;
  env.payload = wire::heartbeat_payload(self_name);
  return env;
}

PeerTable::PeerTable(LivenessConfig config) : config_(config) { config_.validate(); }

std::variant<PeerEvent, PeerError> PeerTable::observe(const wire::Envelope& env, const Address& from,
                                                      TimePoint now) {
  if (env.kind != wire::Kind::Heartbeat && env.kind != wire::Kind::Ack) return PeerError::NotLivenessEvidence;

  auto it = records_.find(env.source_id);
  if (it == records_.end()) {
    if (env.kind == wire::Kind::Ack) return PeerError::AckFromUnknownPeer;
    PeerRecord rec;
    rec.node_id = env.source_id;
    rec.name = wire::heartbeat_name(env);
    rec.address = from;
    rec.last_heard = now;
    rec.state = PeerState::Online;
    by_name_[rec.name] = rec.node_id;
    records_.emplace(rec.node_id, std::move(rec));
    return PeerEvent::Discovered;
  }

  PeerRecord& rec = it->second;
  rec.last_heard = now;
  rec.address = from;
  if (env.kind == wire::Kind::Heartbeat && rec.state == PeerState::Offline) {
    rec.state = PeerState::Online;
    return PeerEvent::CameOnline;
  }
  return PeerEvent::Refreshed;
}

std::vector<NodeId> PeerTable::sweep(TimePoint now) {
  std::vector<NodeId> gone;
  for (auto& [id, rec] : records_) {
    if (rec.state == PeerState::Online && now - rec.last_heard > config_.offline_timeout) {
      rec.state = PeerState::Offline;
      gone.push_back(id);
    }
  }
  return gone;
}

bool PeerTable::mark_offline(NodeId id) {
  auto it = records_.find(id);
  if (it == records_.end() || it->second.state == PeerState::Offline) return false;
  it->second.state = PeerState::Offline;
  return true;
}

std::optional<Resolved> PeerTable::resolve(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  const PeerRecord& rec = records_.at(it->second);
  return Resolved{rec.node_id, rec.address};
}

const PeerRecord* PeerTable::find(NodeId id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

bool PeerTable::is_online(NodeId id) const {
  const PeerRecord* rec = find(id);
  return rec != nullptr && rec->state == PeerState::Online;
}

std::vector<NodeId> PeerTable::online_peers() const {
  std::vector<NodeId> out;
  for (const auto& [id, rec] : records_)
    if (rec.state == PeerState::Online) out.push_back(id);
  return out;
}

std::vector<PeerRecord> PeerTable::snapshot() const {
  std::vector<PeerRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, rec] : records_) out.push_back(rec);
  return out;
}

}  // namespace umesh::peers
