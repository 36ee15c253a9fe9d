#include "umesh/topics.hpp"

namespace umesh::topics {

const char* to_string(Mode m) { return m == Mode::Reliable ? "reliable" : "broadcast"; }

const char* to_string(PublishError e) {
  switch (e) {
    case PublishError::UnknownTopic: return "UnknownTopic";
    case PublishError::NoDestination: return "NoDestination";
    case PublishError::UnknownPeer: return "UnknownPeer";
    case PublishError::PeerOffline: return "PeerOffline";
    case PublishError::OversizeTopic: return "OversizeTopic";
    case PublishError::PayloadTooLarge: return "PayloadTooLarge";
  }
  return "?";
}

TopicRouter::TopicRouter(sched::Scheduler& scheduler, reliable::ReliableEngine& engine,
                         multipoint::Broadcaster& broadcaster)
    : scheduler_(scheduler), engine_(engine), broadcaster_(broadcaster) {}

void TopicRouter::reconfigure(const std::vector<TopicConfig>& config) {
  std::map<std::string, TopicConfig> next;
  for (const auto& t : config) {
    if (t.name.size() > wire::kMaxTopicLen) throw std::invalid_argument("topic name longer than 64 bytes: " + t.name);
    if (!next.emplace(t.name, t).second) throw DuplicateTopicName(t.name);
  }
  config_ = std::move(next);
  scheduler_.clear_topic_priorities();
  for (const auto& [name, t] : config_) scheduler_.set_topic_priority(name, t.priority);
}

void TopicRouter::set_topic_priority(const std::string& topic, std::uint8_t priority) {
  scheduler_.set_topic_priority(topic, priority);
  if (auto it = config_.find(topic); it != config_.end()) it->second.priority = priority;
}

std::variant<Published, PublishError> TopicRouter::publish(const std::string& topic,
                                                           std::shared_ptr<const Bytes> payload, TimePoint now,
                                                           std::optional<std::string> dest_override) {
  auto it = config_.find(topic);
  if (it == config_.end()) return PublishError::UnknownTopic;
  const TopicConfig& cfg = it->second;
  const std::uint8_t priority = scheduler_.topic_priority(topic);

  Published out;
  out.mode = cfg.mode;
  if (cfg.mode == Mode::Broadcast && !dest_override) {
    auto b = broadcaster_.broadcast(topic, std::move(payload), priority, now);
    out.single_datagram = b.kind == multipoint::BroadcastKind::SingleDatagram;
    out.message_ids = std::move(b.message_ids);
    return out;
  }

  const std::string& dest = dest_override ? *dest_override : cfg.dest;
  if (dest.empty()) return PublishError::NoDestination;
  auto r = engine_.submit(dest, topic, std::move(payload), priority, now);
  if (auto* err = std::get_if<reliable::SubmitError>(&r)) {
    switch (*err) {
      case reliable::SubmitError::UnknownPeer: return PublishError::UnknownPeer;
      case reliable::SubmitError::PeerOffline: return PublishError::PeerOffline;
      case reliable::SubmitError::OversizeTopic: return PublishError::OversizeTopic;
      case reliable::SubmitError::PayloadTooLarge: return PublishError::PayloadTooLarge;
    }
  }
  out.mode = Mode::Reliable;
  out.message_ids.push_back(std::get<std::uint32_t>(r));
  return out;
}

void TopicRouter::subscribe(const std::string& topic, Sink sink) { sinks_[topic].push_back(std::move(sink)); }

std::size_t TopicRouter::deliver(const InboundDelivery& delivery) const {
  auto it = sinks_.find(delivery.topic);
  if (it == sinks_.end()) return 0;
  for (const auto& sink : it->second) sink(delivery);
  return it->second.size();
}

const TopicConfig* TopicRouter::find(const std::string& topic) const {
  auto it = config_.find(topic);
  return it == config_.end() ? nullptr : &it->second;
}

std::vector<TopicConfig> TopicRouter::topics() const {
  std::vector<TopicConfig> out;
  for (const auto& [name, t] : config_) out.push_back(t);
  return out;
}

}  // namespace umesh::topics
