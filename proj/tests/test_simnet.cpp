#include "umesh/scenario.hpp"
#include "umesh/simnet.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace umesh;
using namespace umesh::simnet;

namespace {

NodeConfig node_named(const std::string& name, std::vector<topics::TopicConfig> topics = {}) {
  NodeConfig c;
  c.name = name;
  c.topics = std::move(topics);
  return c;
}

LinkModel clean_link(double latency_s = 0.001, double bw = 10e6) {
  LinkModel m;
  m.latency_base = seconds(latency_s);
  m.bandwidth_bps = bw;
  return m;
}

double arrival_s(const DeliverOutcome& o) { return to_seconds(std::get<TimePoint>(o)); }

}  // namespace

TEST(SimLink, ArrivalArithmetic) {
  Network net(1);
  net.add_node(node_named("a"));
  net.add_node(node_named("b"));
  net.connect(0, 1, clean_link());
  const Bytes d(1400, 0);
  const double t = arrival_s(net.deliver(d, 0, 1, at_seconds(2.0)));
  EXPECT_NEAR(t, 2.0 + 0.001 + 1400 * 8 / 1e7, 1e-9);
}

TEST(SimLink, SerializationQueuesBackToBack) {
  Network net(1);
  net.add_node(node_named("a"));
  net.add_node(node_named("b"));
  net.connect(0, 1, clean_link());
  const Bytes d(1400, 0);
  const double first = arrival_s(net.deliver(d, 0, 1, {}));
  const double second = arrival_s(net.deliver(d, 0, 1, {}));
  EXPECT_NEAR(second - first, 0.00112, 1e-9);
}

TEST(SimLink, FifoDespiteJitter) {
  Network net(8);
  net.add_node(node_named("a"));
  net.add_node(node_named("b"));
  LinkModel m = clean_link(0.05, 100e6);
  m.latency_jitter = seconds(0.04);
  net.connect(0, 1, m);
  const Bytes d(100, 0);
  double last = 0;
  for (int i = 0; i < 2000; ++i) {
    const TimePoint now = at_seconds(i * 0.0001);
    const double t = arrival_s(net.deliver(d, 0, 1, now));
    EXPECT_GE(t, to_seconds(now));  // causality
    EXPECT_GE(t, last);             // per-link FIFO
    last = t;
  }
}

TEST(SimLink, TotalLossAndDownLinks) {
  Network net(1);
  net.add_node(node_named("a"));
  net.add_node(node_named("b"));
  net.add_node(node_named("c"));
  LinkModel lossy = clean_link();
  lossy.loss_probability = 1.0;
  net.connect(0, 1, lossy);
  const Bytes d(10, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(std::get<Drop>(net.deliver(d, 0, 1, {})), Drop::Lost);

  LinkModel down = clean_link();
  down.schedule.push_back({at_seconds(5), at_seconds(6), false});
  net.connect(0, 2, down);
  EXPECT_TRUE(std::holds_alternative<TimePoint>(net.deliver(d, 0, 2, at_seconds(4.9))));
  EXPECT_EQ(std::get<Drop>(net.deliver(d, 0, 2, at_seconds(5.5))), Drop::LinkDown);
  EXPECT_TRUE(std::holds_alternative<TimePoint>(net.deliver(d, 0, 2, at_seconds(6.0))));
  EXPECT_EQ(std::get<DeliverError>(net.deliver(d, 1, 2, {})), DeliverError::NoLink);
}

TEST(SimLink, BroadcastFanout) {
  Network net(1);
  for (auto n : {"a", "b", "c", "d"}) net.add_node(node_named(n));
  net.connect_all(clean_link());
  const Bytes d(10, 0);
  auto out = net.broadcast_deliver(d, 0, {});
  ASSERT_EQ(out.size(), 3u);
  for (const auto& [dst, o] : out) EXPECT_TRUE(std::holds_alternative<TimePoint>(o));

  LinkModel cut = clean_link();
  cut.schedule.push_back({at_seconds(0), at_seconds(100), false});
  net.set_link(0, 2, cut);
  std::size_t arrivals = 0;
  for (const auto& [dst, o] : net.broadcast_deliver(d, 0, at_seconds(1))) arrivals += std::holds_alternative<TimePoint>(o);
  EXPECT_EQ(arrivals, 2u);
}

TEST(SimLink, SeededReplay) {
  auto run = [] {
    Network net(77);
    for (auto n : {"a", "b", "c", "d"}) net.add_node(node_named(n));
    LinkModel m = clean_link(0.02);
    m.latency_jitter = seconds(0.01);
    m.loss_probability = 0.3;
    net.connect_all(m);
    std::vector<std::string> trace;
    const Bytes d(500, 0);
    for (int i = 0; i < 200; ++i)
      for (const auto& [dst, o] : net.broadcast_deliver(d, i % 4, at_seconds(i * 0.01))) {
        if (auto* t = std::get_if<TimePoint>(&o)) trace.push_back(std::to_string(t->time_since_epoch().count()));
        else trace.push_back("drop");
      }
    return trace;
  };
  EXPECT_EQ(run(), run());
}

TEST(SimLink, InvalidModels) {
  LinkModel m;
  m.loss_probability = 1.5;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = {};
  m.bandwidth_bps = 0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = {};
  m.schedule = {{at_seconds(0), at_seconds(10), false}, {at_seconds(5), at_seconds(6), true}};
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(SimClockTest, OrderAndTies) {
  SimClock c;
  std::vector<int> seen;
  c.schedule(at_seconds(2), [&] { seen.push_back(2); });
  c.schedule(at_seconds(1), [&] { seen.push_back(1); });
  c.schedule(at_seconds(1), [&] { seen.push_back(11); });
  c.run_until(at_seconds(1.5));
  EXPECT_EQ(seen, (std::vector<int>{1, 11}));
  EXPECT_EQ(c.now(), at_seconds(1.5));
  c.run_until(at_seconds(3));
  EXPECT_EQ(seen.back(), 2);
  EXPECT_EQ(c.processed(), 3u);
}

TEST(SimNodes, DiscoveryWithinOnePeriod) {
  Network net(3);
  net.add_node(node_named("a"));
  net.add_node(node_named("b"));
  net.connect(0, 1, clean_link());
  std::vector<std::pair<std::size_t, TimePoint>> found;
  net.on_peer = [&](std::size_t node, NodeId, PeerTransition t, TimePoint now) {
    if (t == PeerTransition::Discovered) found.emplace_back(node, now);
  };
  net.start_all();
  net.run_until(at_seconds(1.0));
  ASSERT_EQ(found.size(), 2u);
  for (const auto& [n, t] : found) EXPECT_LE(to_seconds(t), 1.0);
}

TEST(SimNodes, ByteIdentityRandomSizes) {
  // Random payloads from 1 B to 5 MB cross a lossy link intact.
  std::mt19937_64 rng(12);
  const std::vector<topics::TopicConfig> table = {{"blob", 100, topics::Mode::Reliable, "rx"}};
  for (int round = 0; round < 8; ++round) {
    Network net(100 + round);
    net.add_node(node_named("tx", table));
    net.add_node(node_named("rx", table));
    LinkModel m = clean_link(0.005, 100e6);
    m.loss_probability = 0.1;
    m.latency_jitter = seconds(0.002);
    net.connect(0, 1, m);
    std::vector<Bytes> got;
    net.node(1).subscribe("blob", [&](const InboundDelivery& d) { got.push_back(d.payload); });
    net.start_all();
    while (!net.node(0).peers().is_online(net.node(1).id()) && net.now() < at_seconds(30))
      net.run_until(net.now() + seconds(0.5));

    const std::size_t size = round == 0 ? 1 : round == 1 ? 5'000'000 : 1 + rng() % 2'000'000;
    const Bytes payload = oracle::random_bytes(rng, size);
    auto pub = net.node(0).publish("blob", payload, net.now());
    ASSERT_TRUE(std::holds_alternative<topics::Published>(pub)) << topics::to_string(std::get<topics::PublishError>(pub));
    net.run_until(net.now() + seconds(120));
    ASSERT_EQ(got.size(), 1u) << "size " << size;
    ASSERT_EQ(got[0], payload);
  }
}

TEST(SimNodes, WindowLimitedThroughput) {
  // Window 3 over a 50 ms round trip: at most three full fragments per RTT.
  const double rtt = 0.05;
  const double oracle_bps = 3 * 1400 * 8 / rtt;  // 672 kbit/s
  const std::vector<topics::TopicConfig> table = {{"bulk", 100, topics::Mode::Reliable, "rx"}};
  Network net(21);
  net.add_node(node_named("tx", table));
  net.add_node(node_named("rx", table));
  net.connect(0, 1, clean_link(rtt / 2, 100e6));
  std::optional<reliable::TransferOutcome> done;
  net.on_transfer_finished = [&](std::size_t, const reliable::TransferOutcome& o) { done = o; };
  net.start_all();
  net.run_until(at_seconds(1.5));
  const std::size_t bytes = 2'000'000;
  net.node(0).publish("bulk", Bytes(bytes, 3), net.now());
  net.run_until(net.now() + seconds(120));
  ASSERT_TRUE(done && done->completed);
  const double bps = static_cast<double>(bytes) * 8 / to_seconds(done->duration);
  EXPECT_NEAR(bps, oracle_bps, 0.2 * oracle_bps);
  EXPECT_EQ(done->retransmits, 0u);
}

TEST(SimNodes, CompletionOrderDelivery) {
  // A short message submitted after a long one on the same topic is delivered
  // as soon as it completes.
  const std::vector<topics::TopicConfig> table = {{"t", 100, topics::Mode::Reliable, "rx"}};
  Network net(5);
  net.add_node(node_named("tx", table));
  net.add_node(node_named("rx", table));
  net.connect(0, 1, clean_link(0.01));
  std::vector<std::size_t> sizes;
  net.node(1).subscribe("t", [&](const InboundDelivery& d) { sizes.push_back(d.payload.size()); });
  net.start_all();
  net.run_until(at_seconds(1.5));
  net.node(0).set_topic_priority("t", 100);
  net.node(0).publish("t", Bytes(100'000, 1), net.now());
  net.node(0).set_topic_priority("t", 5);
  net.node(0).publish("t", Bytes(10, 2), net.now());
  net.run_until(net.now() + seconds(10));
  EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 100'000}));
}

TEST(SimNodes, OfflineCutAndRestore) {
  Network net(4);
  net.add_node(node_named("a"));
  net.add_node(node_named("b"));
  LinkModel m = clean_link(0.01);
  m.schedule.push_back({at_seconds(20), at_seconds(40), false});
  net.connect(0, 1, m);
  std::vector<std::pair<PeerTransition, double>> seen_by_a;
  net.on_peer = [&](std::size_t node, NodeId, PeerTransition t, TimePoint now) {
    if (node == 0) seen_by_a.emplace_back(t, to_seconds(now));
  };
  net.start_all();
  net.run_until(at_seconds(60));
  ASSERT_EQ(seen_by_a.size(), 3u);
  EXPECT_EQ(seen_by_a[1].first, PeerTransition::WentOffline);
  EXPECT_GT(seen_by_a[1].second, 20.0 + 4.0);
  EXPECT_LE(seen_by_a[1].second, 20.0 + 5.0 + 1.0);
  EXPECT_EQ(seen_by_a[2].first, PeerTransition::CameOnline);
  EXPECT_LE(seen_by_a[2].second, 40.0 + 1.0 + 0.011);
}

TEST(SimNodes, NameCollisionRejected) {
  Network net(1);
  net.add_node(node_named("a"));
  EXPECT_THROW(net.add_node(node_named("a")), std::invalid_argument);
}

// --- scenarios ---

TEST(Scenario, EmptyGivesZeroCounters) {
  auto stats = run_scenario(parse_scenario("version: 1\n"));
  for (const auto& [name, v] : stats.counters) EXPECT_EQ(v, 0u) << name;
  EXPECT_TRUE(stats.arrivals.empty());
  EXPECT_TRUE(stats.topics.empty());
}

TEST(Scenario, ParseErrorsNameField) {
  auto expect_field = [](const std::string& yaml, const std::string& field) {
    try {
      parse_scenario(yaml, "s.yaml");
      ADD_FAILURE() << "accepted: " << yaml;
    } catch (const InvalidScenario& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  expect_field("version: 2\n", "version");
  expect_field("nodes: [a, a]\n", "nodes[1]");
  expect_field("nodes: [a, b]\nlinks:\n  - {between: [a, c]}\n", "links[0].endpoints");
  expect_field("nodes: [a, b]\nlinks:\n  - {all: true, loss: 2}\n", "links[0].loss");
  expect_field("nodes: [a]\ntopics:\n  - {name: t, priority: 300}\n", "topics[0].priority");
  expect_field("nodes: [a]\ntopics:\n  - {name: t}\ntraffic:\n  - {node: a, topic: u, rate: 1, size: 3}\n",
               "traffic[0].topic");
  expect_field("nodes: [a]\ntopics:\n  - {name: t}\ntraffic:\n  - {node: a, topic: t, size: 3}\n", "traffic[0].rate");
  expect_field("duration: [1\n", "s.yaml:");
  EXPECT_THROW(load_scenario("/nonexistent/scenario.yaml"), InvalidScenario);
}

namespace {

const char* kSmallScenario = R"(
version: 1
duration: 60
seed: 3
nodes: [robot1, robot2, base]
links:
  - between: [robot2, base]
    loss: 0.1
    latency: 0.02
    bandwidth: 2000000
    schedule:
      - {from: 20, to: 35, state: down}
  - all: true
    loss: 0.1
    latency: 0.02
    jitter: 0.01
    bandwidth: 2000000
topics:
  - {name: telemetry, priority: 10, mode: reliable, dest: base}
  - {name: bulk, priority: 200, mode: reliable, dest: base}
  - {name: alert, priority: 0, mode: broadcast}
traffic:
  - {node: robot1, topic: telemetry, rate: 1, size: 300, start: 2}
  - {node: robot2, topic: telemetry, rate: 1, size: 300, start: 2}
  - {node: robot1, topic: bulk, rate: 2, size: 5000, size_max: 40000, start: 2}
  - {node: base, topic: alert, rate: 0.5, size: 50, size_max: 3000, start: 2}
)";

}  // namespace

TEST(Scenario, DeterministicCsv) {
  const Scenario s = parse_scenario(kSmallScenario);
  EXPECT_EQ(run_scenario(s).csv_files(), run_scenario(s).csv_files());
  EXPECT_NE(run_scenario(s, 4).csv_files(), run_scenario(s, 5).csv_files());
}

TEST(Scenario, Conservation) {
  const auto stats = run_scenario(parse_scenario(kSmallScenario));
  for (const auto& [name, t] : stats.topics) {
    EXPECT_LE(t.bytes_delivered, t.bytes_submitted) << name;
    EXPECT_GT(t.messages_delivered, 0u) << name;
  }
}

TEST(Scenario, ConservationExactWithoutLoss) {
  const char* yaml = R"(
version: 1
duration: 30
nodes: [a, b, c]
links:
  - {all: true, latency: 0.01, bandwidth: 5000000}
topics:
  - {name: data, mode: reliable, dest: c}
  - {name: note, mode: broadcast}
traffic:
  - {node: a, topic: data, rate: 2, size: 100, size_max: 20000, start: 2, stop: 20}
  - {node: b, topic: note, rate: 1, size: 10, size_max: 5000, start: 2, stop: 20}
)";
  const auto stats = run_scenario(parse_scenario(yaml));
  for (const auto& [name, t] : stats.topics) {
    EXPECT_EQ(t.messages_rejected, 0u) << name;
    EXPECT_EQ(t.bytes_delivered, t.bytes_submitted) << name;
  }
}

TEST(Scenario, ConnectivityTracksSchedule) {
  const auto stats = run_scenario(parse_scenario(kSmallScenario));
  // base's view of robot2 must go offline within timeout + period of the cut
  // and come back within period + latency of the restore.
  bool saw_offline = false;
  for (const auto& c : stats.connectivity) {
    if (c.observer != "base" || c.peer != "robot2" || c.online) continue;
    if (c.from < 15) continue;
    saw_offline = true;
    EXPECT_GE(c.from, 20.0);
    EXPECT_LE(c.from, 20.0 + 5.0 + 1.0);
    EXPECT_LE(c.to, 35.0 + 1.0 + 0.03 + 0.05);
  }
  EXPECT_TRUE(saw_offline);
}

TEST(Scenario, CsvShapes) {
  const auto files = run_scenario(parse_scenario(kSmallScenario)).csv_files();
  ASSERT_EQ(files.size(), 4u);
  EXPECT_EQ(files.at("arrivals.csv").rfind("receiver,source,topic,time,interval\n", 0), 0u);
  EXPECT_EQ(files.at("counters.csv").rfind("counter,value\n", 0), 0u);
  EXPECT_EQ(files.at("connectivity.csv").rfind("observer,peer,from,to,state\n", 0), 0u);
  EXPECT_EQ(files.at("topic_bytes.csv").rfind("topic,", 0), 0u);
}

TEST(Scenario, SummaryReportsOneHzStats) {
  const auto summary = run_scenario(parse_scenario(kSmallScenario)).summary();
  EXPECT_NE(summary.find("arrival.base.robot1.telemetry.mean="), std::string::npos);
  EXPECT_NE(summary.find("arrival.base.robot1.telemetry.stddev="), std::string::npos);
  EXPECT_NE(summary.find("reference=N(1.00,0.04)"), std::string::npos);
}

TEST(Scenario, TelemetryOnlyMean) {
  const auto stats = run_scenario(load_scenario(UMESH_SCENARIO_DIR "/telemetry-only.yaml"));
  const auto* s = stats.series("base", "robot1", "telemetry");
  ASSERT_NE(s, nullptr);
  const auto d = describe(s->intervals());
  EXPECT_GT(d.samples, 500u);
  EXPECT_GE(d.mean, 0.95);
  EXPECT_LE(d.mean, 1.05);
}

TEST(Scenario, FinalRunShapeReportsFpvFraction) {
  const auto stats = run_scenario(load_scenario(UMESH_SCENARIO_DIR "/final-run-shape.yaml"));
  const auto summary = stats.summary();
  EXPECT_NE(summary.find("topic.fpv.delivered_fraction="), std::string::npos);
  EXPECT_GT(stats.topics.at("fpv").bytes_delivered, 0u);
  EXPECT_LE(stats.counters.at("max_in_flight_per_pair"), 3u);
}

TEST(Scenario, DescribeUsesSampleStddev) {
  const auto d = describe({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(d.mean, 2.5);
  EXPECT_NEAR(d.stddev, 1.2909944487358056, 1e-12);
}
