#include "umesh/simnet.hpp"

#include <algorithm>
#include <stdexcept>

namespace umesh::simnet {

void LinkModel::validate() const {
  if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
    throw std::invalid_argument("loss_probability must be within [0, 1]");
  if (!(bandwidth_bps > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (latency_base < Duration::zero() || latency_jitter < Duration::zero())
    throw std::invalid_argument("latency and jitter must be non-negative");
  auto sorted = schedule;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.from < b.from; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].to < sorted[i].from) throw std::invalid_argument("schedule interval ends before it starts");
    if (i > 0 && sorted[i].from < sorted[i - 1].to) throw std::invalid_argument("schedule intervals overlap");
  }
}

bool LinkModel::is_up(TimePoint t) const {
  for (const auto& w : schedule)
    if (t >= w.from && t < w.to) return w.up;
  return true;
}

void SimClock::schedule(TimePoint at, Event ev) {
  if (at < now_) at = now_;
  queue_.push(Entry{at, seq_++, std::move(ev)});
}

bool SimClock::step() {
  if (queue_.empty()) return false;
  Entry e = queue_.top();
  queue_.pop();
  now_ = e.at;
  ++processed_;
  e.ev();
  return true;
}

void SimClock::run_until(TimePoint end) {
  while (!queue_.empty() && queue_.top().at <= end) step();
  if (now_ < end) now_ = end;
}

void WindowProbe::sent(std::size_t src, NodeId dest, std::uint32_t message_id, std::uint16_t frag, TimePoint deadline,
                       TimePoint now) {
  auto& live = live_[{src, dest}];
  std::erase_if(live, [now](const auto& kv) { return kv.second <= now; });
  live[{message_id, frag}] = deadline;
  ++samples_;
  max_observed_ = std::max(max_observed_, live.size());
}

void WindowProbe::acked(std::size_t src, NodeId dest, std::uint32_t message_id, std::uint16_t frag) {
  auto it = live_.find({src, dest});
  if (it != live_.end()) it->second.erase({message_id, frag});
}

void WindowProbe::finished(std::size_t src, NodeId dest, std::uint32_t message_id) {
  auto it = live_.find({src, dest});
  if (it == live_.end()) return;
  std::erase_if(it->second, [&](const auto& kv) { return std::get<0>(kv.first) == message_id; });
}

class Network::NodeMedium final : public Medium {
 public:
  NodeMedium(Network& net, std::size_t index) : net_(net), index_(index) {}

  void send_to(ByteView datagram, const Address& to) override {
    if (to.host == 0 || to.host > net_.node_count()) return;
    net_.deliver(datagram, index_, to.host - 1, net_.now());
  }
  void send_broadcast(ByteView datagram) override { net_.broadcast_deliver(datagram, index_, net_.now()); }

 private:
  Network& net_;
  std::size_t index_;
};

Network::Network(std::uint64_t seed) : rng_(seed) {}
Network::~Network() = default;

std::size_t Network::add_node(NodeConfig config) {
  const std::size_t index = nodes_.size();
  Slot slot;
  slot.medium = std::make_unique<NodeMedium>(*this, index);
  slot.node = std::make_unique<Node>(std::move(config), *slot.medium);
  for (const auto& other : nodes_)
    if (other.node->id() == slot.node->id())
      throw std::invalid_argument("node id collision between '" + other.node->name() + "' and '" +
                                  slot.node->name() + "'");
  nodes_.push_back(std::move(slot));
  install_hooks(index);
  return index;
}

std::optional<std::size_t> Network::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].node->name() == name) return i;
  return std::nullopt;
}

void Network::install_hooks(std::size_t index) {
  NodeHooks hooks;
  hooks.on_fragment_sent = [this, index](const wire::Envelope& env, TimePoint deadline, TimePoint now) {
    probe_.sent(index, env.dest_id, env.message_id, env.frag_index, deadline, now);
  };
  hooks.on_ack_received = [this, index](const wire::Envelope& ack, TimePoint) {
    probe_.acked(index, ack.source_id, ack.message_id, ack.frag_index);
  };
  hooks.on_transfer_finished = [this, index](const reliable::TransferOutcome& o) {
    probe_.finished(index, o.dest, o.message_id);
    if (on_transfer_finished) on_transfer_finished(index, o);
  };
  hooks.on_peer = [this, index](NodeId peer, PeerTransition t, TimePoint now) {
    if (on_peer) on_peer(index, peer, t, now);
  };
  nodes_[index].node->set_hooks(std::move(hooks));
}

void Network::set_link(std::size_t src, std::size_t dst, LinkModel model) {
  if (src >= nodes_.size() || dst >= nodes_.size() || src == dst) throw std::invalid_argument("bad link endpoints");
  model.validate();
  links_[{src, dst}] = LinkState{std::move(model), {}, {}};
}

void Network::connect(std::size_t a, std::size_t b, const LinkModel& model) {
  set_link(a, b, model);
  set_link(b, a, model);
}

void Network::connect_all(const LinkModel& model) {
  for (std::size_t a = 0; a < nodes_.size(); ++a)
    for (std::size_t b = 0; b < nodes_.size(); ++b)
      if (a != b) set_link(a, b, model);
}

LinkModel* Network::link(std::size_t src, std::size_t dst) {
  auto it = links_.find({src, dst});
  return it == links_.end() ? nullptr : &it->second.model;
}

DeliverOutcome Network::deliver(ByteView datagram, std::size_t src, std::size_t dst, TimePoint now) {
  auto it = links_.find({src, dst});
  if (it == links_.end()) return DeliverError::NoLink;
  LinkState& link = it->second;
  ++counters_.datagrams_offered;
  if (!link.model.is_up(now)) {
    ++counters_.datagrams_link_down;
    return Drop::LinkDown;
  }

  const auto serialization = seconds(static_cast<double>(datagram.size()) * 8.0 / link.model.bandwidth_bps);
  const TimePoint tx_start = std::max(now, link.busy_until);
  link.busy_until = tx_start + serialization;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (link.model.loss_probability > 0.0 && unit(rng_) < link.model.loss_probability) {
    ++counters_.datagrams_lost;
    return Drop::Lost;
  }
  Duration latency = link.model.latency_base;
  if (link.model.latency_jitter > Duration::zero()) {
    const double j = to_seconds(link.model.latency_jitter);
    std::uniform_real_distribution<double> jitter(-j, j);
    latency += seconds(jitter(rng_));
    if (latency < Duration::zero()) latency = Duration::zero();
  }
  const TimePoint arrival = std::max(link.busy_until + latency, link.last_arrival);
  link.last_arrival = arrival;

  ++counters_.datagrams_delivered;
  counters_.bytes_delivered += datagram.size();
  auto bytes = std::make_shared<Bytes>(datagram.begin(), datagram.end());
  clock_.schedule(arrival, [this, bytes, src, dst] { node(dst).on_datagram(*bytes, address_of(src), clock_.now()); });
  return arrival;
}

std::vector<std::pair<std::size_t, DeliverOutcome>> Network::broadcast_deliver(ByteView datagram, std::size_t src,
                                                                               TimePoint now) {
  std::vector<std::pair<std::size_t, DeliverOutcome>> out;
  for (std::size_t dst = 0; dst < nodes_.size(); ++dst) {
    if (dst == src || !links_.contains({src, dst})) continue;
    out.emplace_back(dst, deliver(datagram, src, dst, now));
  }
  return out;
}

void Network::schedule_tick(std::size_t index, TimePoint at) {
  clock_.schedule(at, [this, index, at] {
    Node& n = node(index);
    n.tick(clock_.now());
    schedule_tick(index, at + n.engine().config().tick_interval());
  });
}

void Network::start_node(std::size_t index, TimePoint at) {
  clock_.schedule(at, [this, index, at] {
    node(index).start(clock_.now());
    schedule_tick(index, at + node(index).engine().config().tick_interval());
  });
}

void Network::start_all(TimePoint at) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) start_node(i, at);
}

}  // namespace umesh::simnet
