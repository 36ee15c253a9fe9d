#ifndef UMESH_SIMNET_HPP
#define UMESH_SIMNET_HPP

#include "umesh/node.hpp"
#include "umesh/types.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace umesh::simnet {

struct LinkWindow {
  TimePoint from{};
  TimePoint to{};
  bool up = false;
};

struct LinkModel {
  double loss_probability = 0.0;
  Duration latency_base{};
  Duration latency_jitter{};  // uniform half-width
  double bandwidth_bps = 10e6;
  std::vector<LinkWindow> schedule;  // intervals override the default "up"

  void validate() const;  // throws std::invalid_argument
  bool is_up(TimePoint t) const;
};

/// Virtual time plus an event queue ordered by (time, insertion order).
class SimClock {
 public:
  using Event = std::function<void()>;

  TimePoint now() const { return now_; }
  void schedule(TimePoint at, Event ev);
  // Runs events with time <= end; leaves now() == end.
  void run_until(TimePoint end);
  bool step();
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t processed() const { return processed_; }

 private:
  struct Entry {
    TimePoint at;
    std::uint64_t seq;
    Event ev;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  TimePoint now_{};
  std::uint64_t seq_ = 0;
  std::uint64_t processed_ = 0;
};

enum class Drop { Lost, LinkDown };
enum class DeliverError { NoLink };
using DeliverOutcome = std::variant<TimePoint, Drop, DeliverError>;

struct NetCounters {
  std::uint64_t datagrams_offered = 0;
  std::uint64_t datagrams_delivered = 0;
  std::uint64_t datagrams_lost = 0;
  std::uint64_t datagrams_link_down = 0;
  std::uint64_t bytes_delivered = 0;
};

/// Instrumented count of transmitted, unacknowledged, unexpired fragments per
/// ordered (source, destination) pair, kept from observed sends/acks.
class WindowProbe {
 public:
  void sent(std::size_t src, NodeId dest, std::uint32_t message_id, std::uint16_t frag, TimePoint deadline,
            TimePoint now);
  void acked(std::size_t src, NodeId dest, std::uint32_t message_id, std::uint16_t frag);
  void finished(std::size_t src, NodeId dest, std::uint32_t message_id);

  std::size_t max_observed() const { return max_observed_; }
  std::uint64_t samples() const { return samples_; }

 private:
  using Key = std::tuple<std::uint32_t, std::uint16_t>;
  std::map<std::pair<std::size_t, NodeId>, std::map<Key, TimePoint>> live_;
  std::size_t max_observed_ = 0;
  std::uint64_t samples_ = 0;
};

/// A single broadcast domain of simulated nodes with per-directed-pair links.
/// Strictly single-threaded; all protocol instances are driven by the clock.
class Network {
 public:
  static constexpr std::uint16_t kPort = 4950;

  explicit Network(std::uint64_t seed);
  ~Network();
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  std::size_t add_node(NodeConfig config);
  Node& node(std::size_t index) { return *nodes_.at(index).node; }
  const Node& node(std::size_t index) const { return *nodes_.at(index).node; }
  std::size_t node_count() const { return nodes_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  static Address address_of(std::size_t index) { return Address{static_cast<std::uint32_t>(index + 1), kPort}; }

  void set_link(std::size_t src, std::size_t dst, LinkModel model);
  void connect(std::size_t a, std::size_t b, const LinkModel& model);
  void connect_all(const LinkModel& model);
  LinkModel* link(std::size_t src, std::size_t dst);

  // Schedules the datagram's arrival (or not). Arrival calls Node::on_datagram.
  DeliverOutcome deliver(ByteView datagram, std::size_t src, std::size_t dst, TimePoint now);
  std::vector<std::pair<std::size_t, DeliverOutcome>> broadcast_deliver(ByteView datagram, std::size_t src,
                                                                        TimePoint now);

  // Starts the node and its tick loop at `at`.
  void start_node(std::size_t index, TimePoint at);
  void start_all(TimePoint at = {});

  SimClock& clock() { return clock_; }
  TimePoint now() const { return clock_.now(); }
  void run_until(TimePoint end) { clock_.run_until(end); }

  std::mt19937_64& rng() { return rng_; }
  const NetCounters& counters() const { return counters_; }
  const WindowProbe& window_probe() const { return probe_; }

  // Observers layered on top of the probe's own hooks.
  std::function<void(std::size_t node, NodeId peer, PeerTransition, TimePoint)> on_peer;
  std::function<void(std::size_t node, const reliable::TransferOutcome&)> on_transfer_finished;

 private:
  class NodeMedium;
  struct LinkState {
    LinkModel model;
    TimePoint busy_until{};
    TimePoint last_arrival{};
  };
  struct Slot {
    std::unique_ptr<NodeMedium> medium;
    std::unique_ptr<Node> node;
  };

  void install_hooks(std::size_t index);
  void schedule_tick(std::size_t index, TimePoint at);

  SimClock clock_;
  std::mt19937_64 rng_;
  std::vector<Slot> nodes_;
  std::map<std::pair<std::size_t, std::size_t>, LinkState> links_;
  NetCounters counters_;
  WindowProbe probe_;
};

}  // namespace umesh::simnet

#endif  // UMESH_SIMNET_HPP
