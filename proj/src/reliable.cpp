#include "umesh/reliable.hpp"

#include <algorithm>
#include <stdexcept>

namespace umesh::reliable {

void ReliableConfig::validate() const {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (retransmit_initial <= Duration::zero()) throw std::invalid_argument("retransmit_initial must be positive");
  if (retransmit_initial > retransmit_max) throw std::invalid_argument("retransmit_initial exceeds retransmit_max");
  if (reassembly_timeout <= Duration::zero()) throw std::invalid_argument("reassembly_timeout must be positive");
}

const char* to_string(SubmitError e) {
  switch (e) {
    case SubmitError::UnknownPeer: return "UnknownPeer";
    case SubmitError::PeerOffline: return "PeerOffline";
    case SubmitError::OversizeTopic: return "OversizeTopic";
    case SubmitError::PayloadTooLarge: return "PayloadTooLarge";
  }
  return "?";
}

ReliableEngine::ReliableEngine(NodeId self, ReliableConfig config, peers::PeerTable& peers,
                               sched::Scheduler& scheduler)
    : self_(self), config_(config), peers_(peers), scheduler_(scheduler) {
  config_.validate();
}

std::variant<std::uint32_t, SubmitError> ReliableEngine::submit(std::string_view dest_name, std::string topic,
                                                                std::shared_ptr<const Bytes> payload,
                                                                std::uint8_t priority, TimePoint now) {
  auto resolved = peers_.resolve(dest_name);
  if (!resolved) return SubmitError::UnknownPeer;
  return submit(resolved->node_id, std::move(topic), std::move(payload), priority, now);
}

std::variant<std::uint32_t, SubmitError> ReliableEngine::submit(NodeId dest, std::string topic,
                                                                std::shared_ptr<const Bytes> payload,
                                                                std::uint8_t priority, TimePoint now) {
  const peers::PeerRecord* rec = peers_.find(dest);
  if (rec == nullptr) return SubmitError::UnknownPeer;
  if (rec->state != peers::PeerState::Online) return SubmitError::PeerOffline;
  if (topic.size() > wire::kMaxTopicLen) return SubmitError::OversizeTopic;
  if (wire::fragment_count(payload->size(), topic.size()) > 0xFFFF) return SubmitError::PayloadTooLarge;

  OutboundTransfer t;
  t.dest = dest;
  t.message_id = allocate_message_id();
  t.priority = priority;
  t.topic = std::move(topic);
  t.plan = wire::plan_fragments(payload->size(), t.topic.size());
  t.payload = std::move(payload);
  t.acked.assign(t.plan.frag_count, false);
  t.expiries.assign(t.plan.frag_count, 0);
  t.submitted_at = now;
  for (std::size_t i = 0; i < t.plan.frag_count; ++i) {
    auto q = scheduler_.enqueue({dest, t.message_id, static_cast<std::uint16_t>(i)}, priority);
    if (i == 0) t.enqueue_seq = q.enqueue_seq;
  }
  const std::uint32_t id = t.message_id;
  outbound_.emplace(TransferKey{dest, id}, std::move(t));
  return id;
}

Duration ReliableEngine::retransmit_timeout(std::uint8_t expiries) const {
  Duration rto = config_.retransmit_initial;
  for (std::uint8_t i = 0; i < expiries && rto < config_.retransmit_max; ++i) rto *= 2;
  return std::min(rto, config_.retransmit_max);
}

wire::Envelope ReliableEngine::fragment_envelope(const OutboundTransfer& t, std::uint16_t frag_index) const {
  wire::Envelope env;
  env.kind = wire::Kind::Data;
  env.source_id = self_;
  env.dest_id = t.dest;
  env.message_id = t.message_id;
  env.frag_index = frag_index;
  env.frag_count = static_cast<std::uint16_t>(t.plan.frag_count);
  env.priority = t.priority;
  if (frag_index == 0) env.topic = t.topic;
  const wire::ByteRange r = t.plan.ranges[frag_index];
  const auto first = t.payload->begin() + static_cast<std::ptrdiff_t>(r.offset);
  env.payload.assign(first, first + static_cast<std::ptrdiff_t>(r.length));
  return env;
}

std::optional<wire::Envelope> ReliableEngine::next_transmission(TimePoint now) {
  auto status = [this](NodeId dest) {
    sched::DestStatus st;
    st.online = peers_.is_online(dest);
    const std::size_t used = in_flight(dest);
    st.free_slots = used >= config_.window ? 0 : config_.window - used;
    return st;
  };

  std::optional<wire::Envelope> out;
  while (auto q = scheduler_.dequeue_eligible(status)) {
    auto it = outbound_.find({q->ref.dest, q->ref.message_id});
    if (it == outbound_.end()) continue;
    OutboundTransfer& t = it->second;
    const std::uint16_t idx = q->ref.frag_index;
    if (t.acked[idx] || t.in_flight.contains(idx)) continue;

    t.in_flight[idx] = now + retransmit_timeout(t.expiries[idx]);
    ++in_flight_per_dest_[t.dest];
    ++t.fragments_sent;
    ++counters_.fragments_sent;
    if (t.expiries[idx] > 0) {
      ++t.retransmits;
      ++counters_.retransmits;
    }
    t.next_unsent = std::max<std::uint16_t>(t.next_unsent, static_cast<std::uint16_t>(idx + 1));
    out = fragment_envelope(t, idx);
    break;
  }
  for (NodeId dest : scheduler_.take_dropped()) abort_dest(dest, now, nullptr);
  return out;
}

TransferEvent ReliableEngine::on_ack(const wire::Envelope& env, const Address& from, TimePoint now) {
  ++counters_.acks_received;
  peers_.observe(env, from, now);

  auto it = outbound_.find({env.source_id, env.message_id});
  if (it == outbound_.end() || env.frag_index >= it->second.plan.frag_count) {
    ++counters_.stale_acks;
    return TransferEvent::UnknownTransfer;
  }
  OutboundTransfer& t = it->second;
  if (t.acked[env.frag_index]) return TransferEvent::Duplicate;

  t.acked[env.frag_index] = true;
  ++t.acked_count;
  if (t.in_flight.erase(env.frag_index) > 0) --in_flight_per_dest_[t.dest];
  if (t.complete()) {
    finish(it, true, now);
    return TransferEvent::Complete;
  }
  return TransferEvent::Progress;
}

DataResult ReliableEngine::on_data(const wire::Envelope& env, TimePoint now) {
  DataResult result;
  result.ack.kind = wire::Kind::Ack;
  result.ack.source_id = self_;
  result.ack.dest_id = env.source_id;
  result.ack.message_id = env.message_id;
  result.ack.frag_index = env.frag_index;
  result.ack.frag_count = env.frag_count;
  result.ack.priority = env.priority;
  ++counters_.acks_sent;

  const TransferKey key{env.source_id, env.message_id};
  if (delivered_.contains(key)) {
    result.duplicate = true;
    ++counters_.duplicate_fragments;
    return result;
  }

  auto [it, inserted] = inbound_.try_emplace(key);
  ReassemblyBuffer& buf = it->second;
  if (inserted) {
    buf.source_id = env.source_id;
    buf.message_id = env.message_id;
    buf.frag_count = env.frag_count;
  } else if (buf.frag_count != env.frag_count) {
    // Conflicting geometry for the same message id; keep the first.
    return result;
  }
  buf.last_activity = now;
  if (!buf.received.try_emplace(env.frag_index, env.payload).second) {
    result.duplicate = true;
    ++counters_.duplicate_fragments;
    return result;
  }
  if (env.frag_index == 0) buf.topic = env.topic;
  if (!buf.complete()) return result;

  InboundDelivery d;
  d.source_id = env.source_id;
  if (const auto* rec = peers_.find(env.source_id)) d.source_name = rec->name;
  d.topic = buf.topic.value_or(std::string{});
  std::size_t total = 0;
  for (const auto& [idx, bytes] : buf.received) total += bytes.size();
  d.payload.reserve(total);
  for (const auto& [idx, bytes] : buf.received) d.payload.insert(d.payload.end(), bytes.begin(), bytes.end());
  d.arrival_time = now;
  result.delivery = std::move(d);

  inbound_.erase(it);
  delivered_[key] = now;
  return result;
}

std::vector<Action> ReliableEngine::tick(TimePoint now) {
  std::vector<Action> actions;

  for (auto& [key, t] : outbound_) {
    for (auto f = t.in_flight.begin(); f != t.in_flight.end();) {
      if (f->second > now) {
        ++f;
        continue;
      }
      const std::uint16_t idx = f->first;
      f = t.in_flight.erase(f);
      --in_flight_per_dest_[t.dest];
      if (t.expiries[idx] < 32) ++t.expiries[idx];
      scheduler_.enqueue({t.dest, t.message_id, idx}, t.priority);
      actions.push_back({Action::Type::Retransmit, t.dest, t.message_id, idx});
    }
  }

  for (auto it = inbound_.begin(); it != inbound_.end();) {
    if (now - it->second.last_activity > config_.reassembly_timeout) {
      actions.push_back({Action::Type::PurgeReassembly, it->second.source_id, it->second.message_id, 0});
      peers_.mark_offline(it->second.source_id);
      ++counters_.reassembly_purges;
      it = inbound_.erase(it);
    } else {
      ++it;
    }
  }

  std::vector<NodeId> offline_dests;
  for (const auto& [key, t] : outbound_)
    if (!peers_.is_online(t.dest) &&
        (offline_dests.empty() || offline_dests.back() != t.dest))
      offline_dests.push_back(t.dest);
  for (NodeId dest : offline_dests) abort_dest(dest, now, &actions);

  const Duration keep = 2 * config_.reassembly_timeout;
  std::erase_if(delivered_, [&](const auto& kv) { return now - kv.second > keep; });
  return actions;
}

std::vector<Action> ReliableEngine::abort_all(TimePoint now) {
  std::vector<Action> actions;
  while (!outbound_.empty()) abort_dest(outbound_.begin()->first.first, now, &actions);
  return actions;
}

void ReliableEngine::abort_dest(NodeId dest, TimePoint now, std::vector<Action>* actions) {
  scheduler_.drop_destination(dest);
  auto it = outbound_.lower_bound({dest, 0});
  while (it != outbound_.end() && it->first.first == dest) {
    if (actions) actions->push_back({Action::Type::AbortTransfer, dest, it->first.second, 0});
    auto next = std::next(it);
    finish(it, false, now);
    it = next;
  }
  in_flight_per_dest_.erase(dest);
}

void ReliableEngine::finish(std::map<TransferKey, OutboundTransfer>::iterator it, bool completed, TimePoint now) {
  OutboundTransfer& t = it->second;
  auto& count = in_flight_per_dest_[t.dest];
  count -= std::min(count, t.in_flight.size());
  TransferOutcome o;
  o.dest = t.dest;
  o.message_id = t.message_id;
  o.topic = t.topic;
  o.bytes = t.plan.total_len;
  o.completed = completed;
  o.fragments_sent = t.fragments_sent;
  o.retransmits = t.retransmits;
  o.duration = now - t.submitted_at;
  finished_.push_back(std::move(o));
  if (completed)
    ++counters_.transfers_completed;
  else
    ++counters_.transfers_aborted;
  outbound_.erase(it);
}

std::vector<TransferOutcome> ReliableEngine::take_finished() {
  std::vector<TransferOutcome> out;
  out.swap(finished_);
  return out;
}

std::size_t ReliableEngine::in_flight(NodeId dest) const {
  auto it = in_flight_per_dest_.find(dest);
  return it == in_flight_per_dest_.end() ? 0 : it->second;
}

std::size_t ReliableEngine::queued_bytes(NodeId dest) const {
  std::size_t total = 0;
  for (auto it = outbound_.lower_bound({dest, 0}); it != outbound_.end() && it->first.first == dest; ++it) {
    const OutboundTransfer& t = it->second;
    for (std::size_t i = 0; i < t.plan.frag_count; ++i)
      if (!t.acked[i]) total += t.plan.ranges[i].length;
  }
  return total;
}

const OutboundTransfer* ReliableEngine::find_transfer(NodeId dest, std::uint32_t message_id) const {
  auto it = outbound_.find({dest, message_id});
  return it == outbound_.end() ? nullptr : &it->second;
}

}  // namespace umesh::reliable
