#ifndef UMESH_PEERS_HPP
#define UMESH_PEERS_HPP

#include "umesh/types.hpp"
#include "umesh/wire.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace umesh::peers {

enum class PeerState { Online, Offline };
const char* to_string(PeerState s);

struct PeerRecord {
  NodeId node_id = 0;
  std::string name;
  Address address;
  TimePoint last_heard{};
  PeerState state = PeerState::Online;
};

struct LivenessConfig {
  Duration heartbeat_period = std::chrono::seconds(1);
  Duration offline_timeout = std::chrono::seconds(5);

  // Throws std::invalid_argument unless offline_timeout >= 2 * heartbeat_period.
  void validate() const;
};

enum class PeerEvent { Discovered, Refreshed, CameOnline };
enum class PeerError { AckFromUnknownPeer, NotLivenessEvidence };
const char* to_string(PeerEvent e);

struct Resolved {
  NodeId node_id = 0;
  Address address;
};

wire::Envelope make_heartbeat(NodeId self_id, std::string_view self_name);

/// Discovery and liveness table. Records are created by heartbeats and are
/// never removed; they flip between Online and Offline.
///
/// Not thread-safe: owned by the protocol thread. Use snapshot() to hand a
/// copy elsewhere.
class PeerTable {
 public:
  explicit PeerTable(LivenessConfig config = {});

  const LivenessConfig& config() const { return config_; }

  std::variant<PeerEvent, PeerError> observe(const wire::Envelope& env, const Address& from, TimePoint now);

  // Online peers silent for longer than offline_timeout become Offline. Each
  // transition is reported once.
  std::vector<NodeId> sweep(TimePoint now);

  // Forces a peer Offline (reassembly purge). Returns true on a state change.
  bool mark_offline(NodeId id);

  std::optional<Resolved> resolve(std::string_view name) const;
  const PeerRecord* find(NodeId id) const;
  bool is_online(NodeId id) const;
  std::vector<NodeId> online_peers() const;

  std::vector<PeerRecord> snapshot() const;
  std::size_t size() const { return records_.size(); }

 private:
  LivenessConfig config_;
  // Ordered by id so snapshots and fan-out are deterministic.
  std::map<NodeId, PeerRecord> records_;
  std::unordered_map<std::string, NodeId> by_name_;
};

}  // namespace umesh::peers

#endif  // UMESH_PEERS_HPP
