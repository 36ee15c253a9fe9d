#ifndef UMESH_RELIABLE_HPP
#define UMESH_RELIABLE_HPP

#include "umesh/delivery.hpp"
#include "umesh/peers.hpp"
#include "umesh/sched.hpp"
#include "umesh/types.hpp"
#include "umesh/wire.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace umesh::reliable {

struct ReliableConfig {
  std::size_t window = 3;
  Duration retransmit_initial = std::chrono::milliseconds(200);
  Duration retransmit_max = std::chrono::milliseconds(3200);
  Duration reassembly_timeout = std::chrono::seconds(10);

  void validate() const;
  // Cadence at which tick() is expected to run.
  Duration tick_interval() const { return retransmit_initial / 4; }
};

enum class SubmitError { UnknownPeer, PeerOffline, OversizeTopic, PayloadTooLarge };
const char* to_string(SubmitError e);

inline constexpr std::size_t kMaxMessageBytes =
    wire::kFragmentCapacity * 0xFFFFu - wire::kMaxTopicLen;

struct OutboundTransfer {
  NodeId dest = 0;
  std::uint32_t message_id = 0;
  std::uint8_t priority = sched::kDefaultPriority;
  std::string topic;
  std::shared_ptr<const Bytes> payload;
  wire::FragmentPlan plan;
  std::vector<bool> acked;
  std::size_t acked_count = 0;
  std::map<std::uint16_t, TimePoint> in_flight;  // frag_index -> retransmit deadline
  std::vector<std::uint8_t> expiries;            // per-fragment backoff exponent
  std::uint16_t next_unsent = 0;
  std::uint64_t enqueue_seq = 0;  // sequence of fragment 0's first enqueue
  TimePoint submitted_at{};
  std::uint64_t fragments_sent = 0;
  std::uint64_t retransmits = 0;

  bool complete() const { return acked_count == plan.frag_count; }
};

struct ReassemblyBuffer {
  NodeId source_id = 0;
  std::uint32_t message_id = 0;
  std::uint16_t frag_count = 0;
  std::map<std::uint16_t, Bytes> received;
  std::optional<std::string> topic;
  TimePoint last_activity{};

  bool complete() const { return received.size() == frag_count; }
};

enum class TransferEvent { Progress, Complete, Duplicate, UnknownTransfer };

struct TransferOutcome {
  NodeId dest = 0;
  std::uint32_t message_id = 0;
  std::string topic;
  std::size_t bytes = 0;
  bool completed = false;
  std::uint64_t fragments_sent = 0;
  std::uint64_t retransmits = 0;
  Duration duration{};
};

struct DataResult {
  wire::Envelope ack;
  std::optional<InboundDelivery> delivery;
  bool duplicate = false;
};

struct Action {
  enum class Type { Retransmit, PurgeReassembly, AbortTransfer };
  Type type;
  NodeId peer = 0;
  std::uint32_t message_id = 0;
  std::uint16_t frag_index = 0;
};

struct Counters {
  std::uint64_t fragments_sent = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t acks_received = 0;
  std::uint64_t stale_acks = 0;
  std::uint64_t duplicate_fragments = 0;
  std::uint64_t reassembly_purges = 0;
  std::uint64_t transfers_completed = 0;
  std::uint64_t transfers_aborted = 0;
};

/// Guaranteed point-to-point transfer engine for one node.
///
/// Outbound: submit() fragments a message and queues every fragment with the
/// scheduler. next_transmission() pulls the next fragment the window allows.
/// Each fragment stays in flight until its ack arrives or its deadline passes,
/// after which tick() queues it again with a doubled deadline.
///
/// Inbound: on_data() acks every fragment (duplicates included) and
/// reassembles; a message is delivered upward once per (source, message_id).
class ReliableEngine {
 public:
  ReliableEngine(NodeId self, ReliableConfig config, peers::PeerTable& peers, sched::Scheduler& scheduler);

  const ReliableConfig& config() const { return config_; }

  std::variant<std::uint32_t, SubmitError> submit(std::string_view dest_name, std::string topic,
                                                  std::shared_ptr<const Bytes> payload, std::uint8_t priority,
                                                  TimePoint now);
  std::variant<std::uint32_t, SubmitError> submit(NodeId dest, std::string topic,
                                                  std::shared_ptr<const Bytes> payload, std::uint8_t priority,
                                                  TimePoint now);

  // Pre: env.kind == Ack. Liveness is recorded through the peer table.
  TransferEvent on_ack(const wire::Envelope& env, const Address& from, TimePoint now);

  // Pre: env.kind == Data.
  DataResult on_data(const wire::Envelope& env, TimePoint now);

  std::vector<Action> tick(TimePoint now);

  // Next fragment the window and scheduler allow, already marked in flight.
  std::optional<wire::Envelope> next_transmission(TimePoint now);

  // Aborts every outbound transfer (shutdown).
  std::vector<Action> abort_all(TimePoint now);

  std::vector<TransferOutcome> take_finished();

  std::uint32_t allocate_message_id() { return next_message_id_++; }
  void set_next_message_id(std::uint32_t id) { next_message_id_ = id; }

  std::size_t in_flight(NodeId dest) const;
  std::size_t pending_transfers() const { return outbound_.size(); }
  std::size_t pending_reassemblies() const { return inbound_.size(); }
  std::size_t queued_bytes(NodeId dest) const;
  const OutboundTransfer* find_transfer(NodeId dest, std::uint32_t message_id) const;
  const Counters& counters() const { return counters_; }

 private:
  using TransferKey = std::pair<NodeId, std::uint32_t>;

  Duration retransmit_timeout(std::uint8_t expiries) const;
  void finish(std::map<TransferKey, OutboundTransfer>::iterator it, bool completed, TimePoint now);
  void abort_dest(NodeId dest, TimePoint now, std::vector<Action>* actions);
  wire::Envelope fragment_envelope(const OutboundTransfer& t, std::uint16_t frag_index) const;

  NodeId self_;
  ReliableConfig config_;
  peers::PeerTable& peers_;
  sched::Scheduler& scheduler_;
  std::uint32_t next_message_id_ = 0;

  std::map<TransferKey, OutboundTransfer> outbound_;
  std::unordered_map<NodeId, std::size_t> in_flight_per_dest_;
  std::map<TransferKey, ReassemblyBuffer> inbound_;
  // Recently completed inbound messages, for duplicate suppression.
  std::map<TransferKey, TimePoint> delivered_;
  std::vector<TransferOutcome> finished_;
  Counters counters_;
};

}  // namespace umesh::reliable

#endif  // UMESH_RELIABLE_HPP
