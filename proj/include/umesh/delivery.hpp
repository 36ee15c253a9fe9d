#ifndef UMESH_DELIVERY_HPP
#define UMESH_DELIVERY_HPP

#include "umesh/types.hpp"

#include <string>

namespace umesh {

// What a subscriber sees. Unicast and broadcast arrivals produce the same record.
struct InboundDelivery {
  NodeId source_id = 0;
  std::string source_name;
  std::string topic;
  Bytes payload;
  TimePoint arrival_time{};

  friend bool operator==(const InboundDelivery&, const InboundDelivery&) = default;
};

}  // namespace umesh

#endif  // UMESH_DELIVERY_HPP
