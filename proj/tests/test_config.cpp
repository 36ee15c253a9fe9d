#include "umesh/config.hpp"

#include <gtest/gtest.h>

using namespace umesh;

namespace {

std::string error_field(const std::string& yaml) {
  try {
    parse_daemon_config(yaml, "d.yaml");
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST(Config, FullDocument) {
  auto c = parse_daemon_config(R"(
version: 1
node:
  name: robot1
  bind: 0.0.0.0:4950
  broadcast: [10.0.0.255:4950, 10.0.1.7:4950]
  control_socket: /run/umesh/robot1.sock
liveness:
  heartbeat_period: 0.5
  offline_timeout: 2
reliable:
  window: 3
  retransmit_initial: 0.1
  retransmit_max: 1.6
  reassembly_timeout: 8
topics:
  - {name: telemetry, priority: 10, mode: reliable, dest: base}
  - {name: estop, priority: 0, mode: broadcast}
)");
  EXPECT_EQ(c.name, "robot1");
  EXPECT_EQ(c.bind, (Address{0, 4950}));
  ASSERT_EQ(c.broadcast_targets.size(), 2u);
  EXPECT_EQ(c.broadcast_targets[1].to_string(), "10.0.1.7:4950");
  EXPECT_EQ(c.control_socket, "/run/umesh/robot1.sock");
  EXPECT_EQ(c.liveness.heartbeat_period, seconds(0.5));
  EXPECT_EQ(c.reliable.retransmit_max, seconds(1.6));
  ASSERT_EQ(c.topics.size(), 2u);
  EXPECT_EQ(c.topics[1].mode, topics::Mode::Broadcast);
  auto nc = c.node_config();
  EXPECT_EQ(nc.topics, c.topics);
}

TEST(Config, Defaults) {
  auto c = parse_daemon_config("node: {name: base}\n");
  EXPECT_EQ(c.bind.port, kDefaultPort);
  ASSERT_EQ(c.broadcast_targets.size(), 1u);
  EXPECT_EQ(c.broadcast_targets[0], (Address{0xFFFFFFFFu, kDefaultPort}));
  EXPECT_EQ(c.control_socket, "/tmp/udpmeshd-base.sock");
  EXPECT_EQ(c.reliable.window, 3u);
  EXPECT_EQ(c.liveness.offline_timeout, seconds(5));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(error_field("version: 1\n"), "node");
  EXPECT_EQ(error_field("node: {bind: 1.2.3.4:5}\n"), "node.name");
  EXPECT_EQ(error_field("node: {name: a, bind: nonsense}\n"), "node.bind");
  EXPECT_EQ(error_field("node: {name: a, broadcast: [1.2.3.4:1, x]}\n"), "node.broadcast[1]");
  EXPECT_EQ(error_field("node: {name: a}\nreliable: {window: 0}\n"), "reliable.window");
  EXPECT_EQ(error_field("node: {name: a}\nliveness: {heartbeat_period: 3, offline_timeout: 5}\n"),
            "liveness.offline_timeout");
  EXPECT_EQ(error_field("node: {name: a}\ntopics:\n  - {name: t, mode: carrier-pigeon}\n"), "topics[0].mode");
  EXPECT_EQ(error_field("node: {name: a}\ntopics:\n  - {name: t}\n  - {name: t}\n"), "topics[1].name");
  EXPECT_EQ(error_field("version: 7\nnode: {name: a}\n"), "version");
}

TEST(Config, MessageHasPosition) {
  try {
    parse_daemon_config("node:\n  name: a\n  bind: 999.1.1.1:80\n", "d.yaml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("d.yaml:3:"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("node.bind"), std::string::npos) << e.what();
  }
}

TEST(Config, MissingFile) { EXPECT_THROW(load_daemon_config("/nonexistent/udpmeshd.yaml"), ConfigError); }

TEST(Address, ParseAndFormat) {
  auto a = Address::parse("192.168.1.20:4950");
  EXPECT_EQ(a.host, 0xC0A80114u);
  EXPECT_EQ(a.to_string(), "192.168.1.20:4950");
  EXPECT_THROW(Address::parse("1.2.3:4"), std::invalid_argument);
  EXPECT_THROW(Address::parse("1.2.3.4:70000"), std::invalid_argument);
  EXPECT_THROW(Address::parse("1.2.3.4"), std::invalid_argument);
}

TEST(NodeIds, StableAndNeverBroadcast) {
  EXPECT_EQ(node_id_for("base"), node_id_for("base"));
  EXPECT_NE(node_id_for("base"), node_id_for("robot1"));
  // FNV-1a 64 of the empty string is the offset basis.
  EXPECT_EQ(node_id_for(""), 0xcbf29ce484222325ull);
  EXPECT_NE(node_id_for("a"), kBroadcastId);
}
