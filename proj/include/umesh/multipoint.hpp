#ifndef UMESH_MULTIPOINT_HPP
#define UMESH_MULTIPOINT_HPP

#include "umesh/delivery.hpp"
#include "umesh/peers.hpp"
#include "umesh/reliable.hpp"
#include "umesh/wire.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace umesh::multipoint {

enum class BroadcastKind { SingleDatagram, FanOut };

struct BroadcastOutcome {
  BroadcastKind kind = BroadcastKind::SingleDatagram;
  // Single datagram: the one id used on the wire. Fan-out: one per targeted peer.
  std::vector<std::uint32_t> message_ids;
};

// Point-to-multipoint delivery. A message that fits one datagram goes out as a
// single unacknowledged broadcast; anything larger is sent as one reliable
// transfer per Online peer, sampled at call time.
class Broadcaster {
 public:
  using SendBroadcast = std::function<void(const Bytes&)>;

  Broadcaster(NodeId self, peers::PeerTable& peers, reliable::ReliableEngine& engine, SendBroadcast send);

  BroadcastOutcome broadcast(const std::string& topic, std::shared_ptr<const Bytes> payload, std::uint8_t priority,
                             TimePoint now);

  // Pre: env.kind == BcastData. No ack, no duplicate suppression.
  InboundDelivery on_broadcast_data(const wire::Envelope& env, TimePoint now) const;

  std::uint64_t datagrams_sent() const { return datagrams_sent_; }

 private:
  NodeId self_;
  peers::PeerTable& peers_;
  reliable::ReliableEngine& engine_;
  SendBroadcast send_;
  std::uint64_t datagrams_sent_ = 0;
};

}  // namespace umesh::multipoint

#endif  // UMESH_MULTIPOINT_HPP
