#include "umesh/sched.hpp"

namespace umesh::sched {

QueuedFragment Scheduler::enqueue(const FragmentRef& ref, std::uint8_t priority) {
  QueuedFragment q{ref, priority, next_seq_++};
  queues_[ref.dest].insert(q);
  ++size_;
  return q;
}

std::optional<QueuedFragment> Scheduler::dequeue_eligible(const DestStatusFn& status) {
  std::set<QueuedFragment>* best_queue = nullptr;
  for (auto it = queues_.begin(); it != queues_.end();) {
    auto& [dest, queue] = *it;
    if (queue.empty()) {
      it = queues_.erase(it);
      continue;
    }
    const DestStatus st = status(dest);
    if (!st.online) {
      size_ -= queue.size();
      dropped_.push_back(dest);
      it = queues_.erase(it);
      continue;
    }
    if (st.free_slots > 0 && (best_queue == nullptr || *queue.begin() < *best_queue->begin())) best_queue = &queue;
    ++it;
  }
  if (best_queue == nullptr) return std::nullopt;
  QueuedFragment out = *best_queue->begin();
  best_queue->erase(best_queue->begin());
  --size_;
  return out;
}

std::vector<NodeId> Scheduler::take_dropped() {
  std::vector<NodeId> out;
  out.swap(dropped_);
  return out;
}

std::size_t Scheduler::drop_destination(NodeId dest) {
  auto it = queues_.find(dest);
  if (it == queues_.end()) return 0;
  const std::size_t n = it->second.size();
  size_ -= n;
  queues_.erase(it);
  return n;
}

void Scheduler::set_topic_priority(const std::string& topic, std::uint8_t priority) {
  topic_priority_[topic] = priority;
}

std::uint8_t Scheduler::topic_priority(const std::string& topic) const {
  auto it = topic_priority_.find(topic);
  return it == topic_priority_.end() ? kDefaultPriority : it->second;
}

std::size_t Scheduler::size_for(NodeId dest) const {
  auto it = queues_.find(dest);
  return it == queues_.end() ? 0 : it->second.size();
}

}  // namespace umesh::sched
