#include "umesh/topics.hpp"

#include <gtest/gtest.h>

using namespace umesh;
using namespace umesh::topics;

namespace {

const Address kAddr{0x7F000001, 4950};

struct Fixture {
  peers::PeerTable peers;
  sched::Scheduler sched;
  reliable::ReliableEngine engine{1, {}, peers, sched};
  std::vector<Bytes> broadcasts;
  multipoint::Broadcaster bc{1, peers, engine, [this](const Bytes& d) { broadcasts.push_back(d); }};
  TopicRouter router{sched, engine, bc};

  Fixture() { peers.observe(peers::make_heartbeat(2, "base"), kAddr, {}); }
};

std::shared_ptr<const Bytes> filled(std::size_t n) { return std::make_shared<const Bytes>(n, 1); }

const std::vector<TopicConfig> kTable = {
    {"telemetry", 10, Mode::Reliable, "base"},
    {"map-diff", 200, Mode::Reliable, "base"},
    {"estop", 0, Mode::Broadcast, ""},
    {"loose", 50, Mode::Reliable, ""},
};

}  // namespace

TEST(Topics, ReliableRouteUsesTopicPriority) {
  Fixture f;
  f.router.reconfigure(kTable);
  auto r = std::get<Published>(f.router.publish("telemetry", filled(300), {}));
  EXPECT_EQ(r.mode, Mode::Reliable);
  ASSERT_EQ(r.message_ids.size(), 1u);
  EXPECT_EQ(f.engine.find_transfer(2, r.message_ids[0])->priority, 10);
  EXPECT_EQ(f.engine.pending_transfers(), 1u);
}

TEST(Topics, BroadcastRoute) {
  Fixture f;
  f.router.reconfigure(kTable);
  auto r = std::get<Published>(f.router.publish("estop", filled(20), {}));
  EXPECT_EQ(r.mode, Mode::Broadcast);
  EXPECT_TRUE(r.single_datagram);
  EXPECT_EQ(f.broadcasts.size(), 1u);
}

TEST(Topics, Errors) {
  Fixture f;
  EXPECT_EQ(std::get<PublishError>(f.router.publish("telemetry", filled(1), {})), PublishError::UnknownTopic);
  f.router.reconfigure(kTable);
  EXPECT_EQ(std::get<PublishError>(f.router.publish("nope", filled(1), {})), PublishError::UnknownTopic);
  EXPECT_EQ(std::get<PublishError>(f.router.publish("loose", filled(1), {})), PublishError::NoDestination);
  EXPECT_EQ(std::get<PublishError>(f.router.publish("loose", filled(1), {}, "ghost")), PublishError::UnknownPeer);
  f.peers.mark_offline(2);
  EXPECT_EQ(std::get<PublishError>(f.router.publish("telemetry", filled(1), {})), PublishError::PeerOffline);
}

TEST(Topics, DestOverride) {
  Fixture f;
  f.router.reconfigure(kTable);
  auto r = std::get<Published>(f.router.publish("loose", filled(1), {}, "base"));
  EXPECT_NE(f.engine.find_transfer(2, r.message_ids[0]), nullptr);
  // Override on a broadcast topic turns it into a directed reliable send.
  auto b = std::get<Published>(f.router.publish("estop", filled(1), {}, "base"));
  EXPECT_EQ(b.mode, Mode::Reliable);
  EXPECT_TRUE(f.broadcasts.empty());
}

TEST(Topics, ReconfigureValidatesAtomically) {
  Fixture f;
  f.router.reconfigure(kTable);
  std::vector<TopicConfig> dup = {{"a", 1, Mode::Reliable, "base"}, {"a", 2, Mode::Reliable, "base"}};
  EXPECT_THROW(f.router.reconfigure(dup), DuplicateTopicName);
  EXPECT_THROW(f.router.reconfigure({{std::string(65, 'x'), 1, Mode::Reliable, "base"}}), std::invalid_argument);
  EXPECT_NE(f.router.find("telemetry"), nullptr);
  EXPECT_EQ(f.sched.topic_priority("telemetry"), 10);
}

TEST(Topics, RuntimeTopicAdd) {
  Fixture f;
  f.router.reconfigure(kTable);
  auto with_fpv = kTable;
  with_fpv.push_back({"fpv", 250, Mode::Reliable, "base"});
  f.router.reconfigure(with_fpv);
  auto r = std::get<Published>(f.router.publish("fpv", filled(5000), {}));
  EXPECT_EQ(f.engine.find_transfer(2, r.message_ids[0])->priority, 250);
}

TEST(Topics, EmptyConfig) {
  Fixture f;
  f.router.reconfigure({});
  EXPECT_EQ(std::get<PublishError>(f.router.publish("telemetry", filled(1), {})), PublishError::UnknownTopic);
  EXPECT_TRUE(f.router.topics().empty());
}

TEST(Topics, SetPriorityAppliesToNextSubmit) {
  Fixture f;
  f.router.reconfigure(kTable);
  f.router.set_topic_priority("map-diff", 3);
  EXPECT_EQ(f.router.find("map-diff")->priority, 3);
  auto r = std::get<Published>(f.router.publish("map-diff", filled(10), {}));
  EXPECT_EQ(f.engine.find_transfer(2, r.message_ids[0])->priority, 3);
}

TEST(Topics, SubscribersReceive) {
  Fixture f;
  int a = 0, b = 0;
  f.router.subscribe("telemetry", [&](const InboundDelivery&) { ++a; });
  InboundDelivery d;
  d.topic = "telemetry";
  EXPECT_EQ(f.router.deliver(d), 1u);
  EXPECT_EQ(a, 1);
  f.router.subscribe("telemetry", [&](const InboundDelivery&) { ++b; });
  EXPECT_EQ(f.router.deliver(d), 2u);
  EXPECT_EQ(a, 2);
  EXPECT_EQ(b, 1);
  d.topic = "other";
  EXPECT_EQ(f.router.deliver(d), 0u);
}
