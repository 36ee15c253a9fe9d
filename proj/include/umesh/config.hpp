#ifndef UMESH_CONFIG_HPP
#define UMESH_CONFIG_HPP

#include "umesh/node.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace umesh {

inline constexpr std::uint16_t kDefaultPort = 4950;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string field = {}) : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct DaemonConfig {
  std::string name;
  Address bind{0, kDefaultPort};
  // Heartbeats and single-datagram broadcasts go to every target: a directed
  // broadcast address, explicit peers, or both.
  std::vector<Address> broadcast_targets;
  std::string control_socket;
  peers::LivenessConfig liveness;
  reliable::ReliableConfig reliable;
  std::vector<topics::TopicConfig> topics;

  NodeConfig node_config() const;
};

DaemonConfig parse_daemon_config(const std::string& yaml_text, const std::string& source = "<config>");
DaemonConfig load_daemon_config(const std::filesystem::path& path);

}  // namespace umesh

#endif  // UMESH_CONFIG_HPP
