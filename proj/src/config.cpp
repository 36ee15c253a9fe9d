#include "umesh/config.hpp"

#include "yaml_util.hpp"

#include <fstream>
#include <sstream>

namespace umesh {

NodeConfig DaemonConfig::node_config() const {
  NodeConfig c;
  c.name = name;
  c.liveness = liveness;
  c.reliable = reliable;
  c.topics = topics;
  return c;
}

DaemonConfig parse_daemon_config(const std::string& yaml_text, const std::string& source) {
  detail::YamlReader<ConfigError> r(source);
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source + ": <root>: expected a mapping", "<root>");

  const int version = r.get_or<int>(root, "version", 1, "");
  if (version != 1) r.fail(root["version"], "version", "unsupported config version");

  DaemonConfig c;
  const YAML::Node node = root["node"];
  if (!node.IsDefined()) r.fail(root, "node", "required section missing");
  r.require_map(node, "node");
  c.name = r.get<std::string>(node, "name", "node.");
  if (c.name.empty() || c.name.size() > wire::kMaxNameLen) r.fail(node["name"], "node.name", "must be 1..64 bytes");

  auto parse_addr = [&](const YAML::Node& n, const std::string& field) {
    try {
      return Address::parse(r.as<std::string>(n, field));
    } catch (const std::invalid_argument& e) {
      r.fail(n, field, e.what());
    }
  };
  if (node["bind"].IsDefined()) c.bind = parse_addr(node["bind"], "node.bind");

  const YAML::Node bc = node["broadcast"];
  if (bc.IsDefined() && !bc.IsNull()) {
    if (bc.IsScalar()) {
      c.broadcast_targets.push_back(parse_addr(bc, "node.broadcast"));
    } else {
      r.require_seq(bc, "node.broadcast");
      for (std::size_t i = 0; i < bc.size(); ++i)
        c.broadcast_targets.push_back(parse_addr(bc[i], "node.broadcast[" + std::to_string(i) + "]"));
    }
  }
  if (c.broadcast_targets.empty()) c.broadcast_targets.push_back(Address{0xFFFFFFFFu, c.bind.port});

  c.control_socket = r.get_or<std::string>(node, "control_socket", "/tmp/udpmeshd-" + c.name + ".sock", "node.");
  c.liveness = r.liveness(root["liveness"], "liveness");
  c.reliable = r.reliable(root["reliable"], "reliable");
  c.topics = r.topic_table(root["topics"], "topics");
  return c;
}

DaemonConfig load_daemon_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file", "path");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_daemon_config(buf.str(), path.string());
}

}  // namespace umesh
