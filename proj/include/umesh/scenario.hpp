#ifndef UMESH_SCENARIO_HPP
#define UMESH_SCENARIO_HPP

#include "umesh/simnet.hpp"
#include "umesh/topics.hpp"

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace umesh::simnet {

class InvalidScenario : public std::runtime_error {
 public:
  InvalidScenario(const std::string& what, std::string field = {})
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct NodeSpec {
  std::string name;
  double start = 0.0;
};

struct LinkSpec {
  bool all = false;  // every ordered pair not covered by an explicit entry
  std::string a;
  std::string b;
  bool directed = false;
  LinkModel model;
};

struct TrafficSpec {
  std::string node;
  std::string topic;
  double rate = 1.0;  // messages per second
  std::size_t size = 0;
  std::size_t size_max = 0;  // > size: uniform in [size, size_max]
  double start = 0.0;
  double stop = std::numeric_limits<double>::infinity();
  std::optional<std::string> dest;
};

struct Scenario {
  double duration = 0.0;
  std::uint64_t seed = 1;
  bool prioritization = true;
  peers::LivenessConfig liveness;
  reliable::ReliableConfig reliable;
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<topics::TopicConfig> topics;
  std::vector<TrafficSpec> traffic;
};

// Throws InvalidScenario naming the file position and field.
Scenario parse_scenario(const std::string& yaml_text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

struct TopicStats {
  std::uint64_t messages_published = 0;
  std::uint64_t messages_rejected = 0;  // PeerOffline / UnknownPeer at publish time
  std::uint64_t bytes_submitted = 0;    // accepted bytes x intended recipients
  std::uint64_t messages_delivered = 0;
  std::uint64_t bytes_delivered = 0;
};

struct ArrivalSeries {
  std::string receiver;
  std::string source;
  std::string topic;
  std::vector<double> times;

  std::vector<double> intervals() const;
};

struct SeriesStats {
  std::size_t samples = 0;
  double mean = 0.0;
  double stddev = 0.0;
};
SeriesStats describe(const std::vector<double>& xs);

struct ConnectivityInterval {
  std::string observer;
  std::string peer;
  double from = 0.0;
  double to = 0.0;
  bool online = false;
};

struct RunStats {
  double duration = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, TopicStats> topics;
  std::vector<ArrivalSeries> arrivals;
  std::vector<ConnectivityInterval> connectivity;
  std::map<std::string, std::uint64_t> counters;
  std::vector<std::string> one_hz_topics;

  const ArrivalSeries* series(const std::string& receiver, const std::string& source, const std::string& topic) const;

  // File name -> CSV content: arrivals.csv, topic_bytes.csv, connectivity.csv, counters.csv.
  std::map<std::string, std::string> csv_files() const;
  void write_csv(const std::filesystem::path& dir) const;
  // Line-oriented key=value summary.
  std::string summary() const;
};

RunStats run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed_override = {});

}  // namespace umesh::simnet

#endif  // UMESH_SCENARIO_HPP
