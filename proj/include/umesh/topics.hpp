#ifndef UMESH_TOPICS_HPP
#define UMESH_TOPICS_HPP

#include "umesh/delivery.hpp"
#include "umesh/multipoint.hpp"
#include "umesh/reliable.hpp"
#include "umesh/sched.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace umesh::topics {

enum class Mode { Reliable, Broadcast };
const char* to_string(Mode m);

struct TopicConfig {
  std::string name;
  std::uint8_t priority = sched::kDefaultPriority;
  Mode mode = Mode::Reliable;
  std::string dest;  // Reliable mode only

  friend bool operator==(const TopicConfig&, const TopicConfig&) = default;
};

class DuplicateTopicName : public std::invalid_argument {
 public:
  explicit DuplicateTopicName(const std::string& name) : std::invalid_argument("duplicate topic name: " + name) {}
};

enum class PublishError { UnknownTopic, NoDestination, UnknownPeer, PeerOffline, OversizeTopic, PayloadTooLarge };
const char* to_string(PublishError e);

struct Published {
  Mode mode = Mode::Reliable;
  bool single_datagram = false;
  std::vector<std::uint32_t> message_ids;
};

using Sink = std::function<void(const InboundDelivery&)>;

/// Routes opaque payloads by topic configuration, and hands inbound
/// deliveries to subscribers. Payload bytes are only ever copied.
class TopicRouter {
 public:
  TopicRouter(sched::Scheduler& scheduler, reliable::ReliableEngine& engine, multipoint::Broadcaster& broadcaster);

  // Replaces the topic table. Throws DuplicateTopicName or std::invalid_argument
  // (name too long) and leaves the previous table untouched on error. Queued
  // fragments keep the priority they were enqueued with.
  void reconfigure(const std::vector<TopicConfig>& config);
  void set_topic_priority(const std::string& topic, std::uint8_t priority);

  std::variant<Published, PublishError> publish(const std::string& topic, std::shared_ptr<const Bytes> payload,
                                                TimePoint now, std::optional<std::string> dest_override = {});

  void subscribe(const std::string& topic, Sink sink);
  // Returns the number of sinks invoked.
  std::size_t deliver(const InboundDelivery& delivery) const;

  const TopicConfig* find(const std::string& topic) const;
  std::vector<TopicConfig> topics() const;

 private:
  sched::Scheduler& scheduler_;
  reliable::ReliableEngine& engine_;
  multipoint::Broadcaster& broadcaster_;
  std::map<std::string, TopicConfig> config_;
  std::map<std::string, std::vector<Sink>> sinks_;
};

}  // namespace umesh::topics

#endif  // UMESH_TOPICS_HPP
