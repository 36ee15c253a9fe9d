#ifndef UMESH_SRC_YAML_UTIL_HPP
#define UMESH_SRC_YAML_UTIL_HPP

#include "umesh/peers.hpp"
#include "umesh/reliable.hpp"
#include "umesh/topics.hpp"

#include <yaml-cpp/yaml.h>

#include <optional>
#include <stdexcept>
#include <string>

namespace umesh::detail {

// Reads typed values out of a YAML tree and reports faults as
// "<source>:<line>:<col>: <field>: <message>" through the Error exception type.
template <typename Error>
class YamlReader {
 public:
  explicit YamlReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& field, const std::string& msg) const {
    std::string where = source_;
    if (at.IsDefined()) {
      const auto mark = at.Mark();
      if (mark.line >= 0) where += ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
    }
    throw Error(where + ": " + field + ": " + msg, field);
  }

  template <typename T>
  T get(const YAML::Node& parent, const std::string& key, const std::string& path) const {
    const YAML::Node n = parent[key];
    if (!n.IsDefined() || n.IsNull()) fail(parent, path + key, "required field missing");
    return as<T>(n, path + key);
  }

  template <typename T>
  T get_or(const YAML::Node& parent, const std::string& key, T fallback, const std::string& path) const {
    const YAML::Node n = parent[key];
    if (!n.IsDefined() || n.IsNull()) return fallback;
    return as<T>(n, path + key);
  }

  template <typename T>
  T as(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a scalar value");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, field, "cannot parse value '" + n.Scalar() + "'");
    }
  }

  Duration seconds_or(const YAML::Node& parent, const std::string& key, Duration fallback,
                      const std::string& path) const {
    const YAML::Node n = parent[key];
    if (!n.IsDefined() || n.IsNull()) return fallback;
    const double v = as<double>(n, path + key);
    if (v < 0) fail(n, path + key, "must be non-negative");
    return umesh::seconds(v);
  }

  void require_map(const YAML::Node& n, const std::string& field) const {
    if (!n.IsMap()) fail(n, field, "expected a mapping");
  }
  void require_seq(const YAML::Node& n, const std::string& field) const {
    if (!n.IsSequence()) fail(n, field, "expected a list");
  }

  peers::LivenessConfig liveness(const YAML::Node& n, const std::string& path) const {
    peers::LivenessConfig c;
    if (!n.IsDefined() || n.IsNull()) return c;
    require_map(n, path);
    c.heartbeat_period = seconds_or(n, "heartbeat_period", c.heartbeat_period, path + ".");
    c.offline_timeout = seconds_or(n, "offline_timeout", c.offline_timeout, path + ".");
    if (c.heartbeat_period <= Duration::zero()) fail(n["heartbeat_period"], path + ".heartbeat_period", "must be positive");
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      fail(n["offline_timeout"].IsDefined() ? n["offline_timeout"] : n, path + ".offline_timeout", e.what());
    }
    return c;
  }

  reliable::ReliableConfig reliable(const YAML::Node& n, const std::string& path) const {
    reliable::ReliableConfig c;
    if (!n.IsDefined() || n.IsNull()) return c;
    require_map(n, path);
    c.window = get_or<std::size_t>(n, "window", c.window, path + ".");
    c.retransmit_initial = seconds_or(n, "retransmit_initial", c.retransmit_initial, path + ".");
    c.retransmit_max = seconds_or(n, "retransmit_max", c.retransmit_max, path + ".");
    c.reassembly_timeout = seconds_or(n, "reassembly_timeout", c.reassembly_timeout, path + ".");
    if (c.window < 1) fail(n["window"], path + ".window", "must be >= 1");
    if (c.retransmit_initial <= Duration::zero())
      fail(n["retransmit_initial"], path + ".retransmit_initial", "must be positive");
    if (c.retransmit_max < c.retransmit_initial)
      fail(n["retransmit_max"].IsDefined() ? n["retransmit_max"] : n, path + ".retransmit_max",
           "must be >= retransmit_initial");
    if (c.reassembly_timeout <= Duration::zero())
      fail(n["reassembly_timeout"], path + ".reassembly_timeout", "must be positive");
    return c;
  }

  std::vector<topics::TopicConfig> topic_table(const YAML::Node& n, const std::string& path) const {
    std::vector<topics::TopicConfig> out;
    if (!n.IsDefined() || n.IsNull()) return out;
    require_seq(n, path);
    for (std::size_t i = 0; i < n.size(); ++i) {
      const YAML::Node t = n[i];
      const std::string p = path + "[" + std::to_string(i) + "].";
      require_map(t, p);
      topics::TopicConfig c;
      c.name = get<std::string>(t, "name", p);
      if (c.name.empty() || c.name.size() > wire::kMaxTopicLen) fail(t["name"], p + "name", "must be 1..64 bytes");
      const int prio = get_or<int>(t, "priority", sched::kDefaultPriority, p);
      if (prio < 0 || prio > 255) fail(t["priority"], p + "priority", "must be within 0..255");
      c.priority = static_cast<std::uint8_t>(prio);
      const std::string mode = get_or<std::string>(t, "mode", "reliable", p);
      if (mode == "reliable") {
        c.mode = topics::Mode::Reliable;
      } else if (mode == "broadcast") {
        c.mode = topics::Mode::Broadcast;
      } else {
        fail(t["mode"], p + "mode", "expected 'reliable' or 'broadcast'");
      }
      c.dest = get_or<std::string>(t, "dest", "", p);
      for (const auto& prev : out)
        if (prev.name == c.name) fail(t["name"], p + "name", "DuplicateTopicName '" + c.name + "'");
      out.push_back(std::move(c));
    }
    return out;
  }

 private:
  std::string source_;
};

}  // namespace umesh::detail

#endif  // UMESH_SRC_YAML_UTIL_HPP
