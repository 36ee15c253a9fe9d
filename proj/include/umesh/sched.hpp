#ifndef UMESH_SCHED_HPP
#define UMESH_SCHED_HPP

#include "umesh/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace umesh::sched {

inline constexpr std::uint8_t kDefaultPriority = 128;

struct FragmentRef {
  NodeId dest = 0;
  std::uint32_t message_id = 0;
  std::uint16_t frag_index = 0;
  friend bool operator==(const FragmentRef&, const FragmentRef&) = default;
};

struct QueuedFragment {
  FragmentRef ref;
  std::uint8_t priority = kDefaultPriority;  // 0 = highest
  std::uint64_t enqueue_seq = 0;

  // Sort key: (priority, enqueue_seq). enqueue_seq is unique, so this is a
  // strict total order.
  friend bool operator<(const QueuedFragment& a, const QueuedFragment& b) {
    if (a.priority != b.priority) return a.priority < b.priority;
    return a.enqueue_seq < b.enqueue_seq;
  }
};

struct DestStatus {
  bool online = true;
  std::size_t free_slots = 0;
};

using DestStatusFn = std::function<DestStatus(NodeId)>;

/// The node's single prioritised channel. Every pending fragment, across all
/// topics and destinations, waits here until its destination has a free
/// window slot.
class Scheduler {
 public:
  QueuedFragment enqueue(const FragmentRef& ref, std::uint8_t priority);

  // Least-key fragment whose destination is Online with a free slot. Queues
  // for Offline destinations are dropped and reported via take_dropped().
  std::optional<QueuedFragment> dequeue_eligible(const DestStatusFn& status);

  std::vector<NodeId> take_dropped();
  std::size_t drop_destination(NodeId dest);

  void set_topic_priority(const std::string& topic, std::uint8_t priority);
  std::uint8_t topic_priority(const std::string& topic) const;
  void clear_topic_priorities() { topic_priority_.clear(); }

  std::size_t size() const { return size_; }
  std::size_t size_for(NodeId dest) const;
  bool empty() const { return size_ == 0; }

 private:
  std::map<NodeId, std::set<QueuedFragment>> queues_;
  std::unordered_map<std::string, std::uint8_t> topic_priority_;
  std::vector<NodeId> dropped_;
  std::uint64_t next_seq_ = 0;
  std::size_t size_ = 0;
};

}  // namespace umesh::sched

#endif  // UMESH_SCHED_HPP
