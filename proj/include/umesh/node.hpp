#ifndef UMESH_NODE_HPP
#define UMESH_NODE_HPP

#include "umesh/multipoint.hpp"
#include "umesh/peers.hpp"
#include "umesh/reliable.hpp"
#include "umesh/sched.hpp"
#include "umesh/topics.hpp"
#include "umesh/wire.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace umesh {

// The boundary between protocol code and the datagram medium. The simulator
// and the UDP daemon each provide one.
class Medium {
 public:
  virtual ~Medium() = default;
  virtual void send_to(ByteView datagram, const Address& to) = 0;
  virtual void send_broadcast(ByteView datagram) = 0;
};

struct NodeConfig {
  std::string name;
  peers::LivenessConfig liveness;
  reliable::ReliableConfig reliable;
  std::vector<topics::TopicConfig> topics;
  std::uint32_t first_message_id = 0;
};

enum class PeerTransition { Discovered, CameOnline, WentOffline };
const char* to_string(PeerTransition t);

struct NodeHooks {
  std::function<void(NodeId peer, PeerTransition, TimePoint now)> on_peer;
  std::function<void(const wire::Envelope& fragment, TimePoint deadline, TimePoint now)> on_fragment_sent;
  std::function<void(const wire::Envelope& ack, TimePoint now)> on_ack_received;
  std::function<void(const wire::Envelope& heartbeat, TimePoint now)> on_heartbeat_received;
  std::function<void(const reliable::TransferOutcome&)> on_transfer_finished;
  std::function<void(const reliable::Action&, TimePoint now)> on_action;
};

struct PeerStatus {
  std::string name;
  NodeId node_id = 0;
  peers::PeerState state = peers::PeerState::Offline;
  Address address;
  Duration last_heard_age{};
  std::size_t bytes_queued = 0;
};

struct NodeCounters {
  std::uint64_t datagrams_received = 0;
  std::uint64_t datagrams_sent = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t heartbeats_sent = 0;
  std::uint64_t heartbeats_received = 0;
  std::uint64_t broadcasts_received = 0;
  std::uint64_t misaddressed = 0;
};

/// One protocol instance. Everything is driven by the owner: datagrams,
/// publishes and ticks arrive with an explicit timestamp, and outbound
/// traffic leaves through the Medium. Not thread-safe.
class Node {
 public:
  Node(NodeConfig config, Medium& medium);
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  const std::string& name() const { return config_.name; }
  NodeId id() const { return id_; }

  void set_hooks(NodeHooks hooks) { hooks_ = std::move(hooks); }

  // Sends the first heartbeat; later ones go out from tick().
  void start(TimePoint now);
  void on_datagram(ByteView datagram, const Address& from, TimePoint now);
  void tick(TimePoint now);

  std::variant<topics::Published, topics::PublishError> publish(const std::string& topic, Bytes payload,
                                                                TimePoint now,
                                                                std::optional<std::string> dest = {});
  // Reliable send that bypasses the topic table (bench traffic). Priority
  // still comes from the scheduler's topic map.
  std::variant<std::uint32_t, reliable::SubmitError> send(const std::string& dest, const std::string& topic,
                                                          std::shared_ptr<const Bytes> payload, TimePoint now);
  multipoint::BroadcastOutcome broadcast(const std::string& topic, Bytes payload, TimePoint now);
  void subscribe(const std::string& topic, topics::Sink sink) { router_.subscribe(topic, std::move(sink)); }
  void reconfigure(const std::vector<topics::TopicConfig>& config) { router_.reconfigure(config); }
  void set_topic_priority(const std::string& topic, std::uint8_t priority);

  // Aborts all outbound transfers.
  void shutdown(TimePoint now);

  std::vector<PeerStatus> status(TimePoint now) const;

  const peers::PeerTable& peers() const { return peers_; }
  const sched::Scheduler& scheduler() const { return scheduler_; }
  const reliable::ReliableEngine& engine() const { return engine_; }
  const topics::TopicRouter& router() const { return router_; }
  const NodeCounters& counters() const { return counters_; }
  TimePoint next_heartbeat() const { return next_heartbeat_; }

 private:
  void send_to(const wire::Envelope& env, const Address& to);
  void send_broadcast(const Bytes& datagram);
  void pump(TimePoint now);
  void report(PeerTransition t, NodeId peer, TimePoint now);

  NodeConfig config_;
  NodeId id_;
  Medium& medium_;
  NodeHooks hooks_;
  peers::PeerTable peers_;
  sched::Scheduler scheduler_;
  reliable::ReliableEngine engine_;
  multipoint::Broadcaster broadcaster_;
  topics::TopicRouter router_;
  Bytes heartbeat_;
  TimePoint next_heartbeat_{};
  bool started_ = false;
  NodeCounters counters_;
};

}  // namespace umesh

#endif  // UMESH_NODE_HPP
