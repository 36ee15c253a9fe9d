#include "umesh/scenario.hpp"

#include "yaml_util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace umesh::simnet {

namespace {

using Reader = detail::YamlReader<InvalidScenario>;

LinkModel parse_link_model(const Reader& r, const YAML::Node& n, const std::string& p) {
  LinkModel m;
  m.loss_probability = r.get_or<double>(n, "loss", 0.0, p);
  if (m.loss_probability < 0.0 || m.loss_probability > 1.0) r.fail(n["loss"], p + "loss", "must be within [0, 1]");
  m.latency_base = r.seconds_or(n, "latency", Duration::zero(), p);
  m.latency_jitter = r.seconds_or(n, "jitter", Duration::zero(), p);
  m.bandwidth_bps = r.get_or<double>(n, "bandwidth", 10e6, p);
  if (!(m.bandwidth_bps > 0)) r.fail(n["bandwidth"], p + "bandwidth", "must be positive");
  const YAML::Node sched = n["schedule"];
  if (sched.IsDefined() && !sched.IsNull()) {
    r.require_seq(sched, p + "schedule");
    for (std::size_t i = 0; i < sched.size(); ++i) {
      const std::string sp = p + "schedule[" + std::to_string(i) + "].";
      const YAML::Node w = sched[i];
      r.require_map(w, sp);
      LinkWindow lw;
      lw.from = at_seconds(r.get<double>(w, "from", sp));
      lw.to = at_seconds(r.get<double>(w, "to", sp));
      const std::string state = r.get_or<std::string>(w, "state", "down", sp);
      if (state != "up" && state != "down") r.fail(w["state"], sp + "state", "expected 'up' or 'down'");
      lw.up = state == "up";
      m.schedule.push_back(lw);
    }
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(n, p, e.what());
  }
  return m;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& yaml_text, const std::string& source) {
  Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw InvalidScenario(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": " + e.msg);
  }
  Scenario s;
  if (root.IsNull()) return s;
  r.require_map(root, "<root>");

  const int version = r.get_or<int>(root, "version", 1, "");
  if (version != 1) r.fail(root["version"], "version", "unsupported scenario version");
  s.duration = r.get_or<double>(root, "duration", 0.0, "");
  if (s.duration < 0) r.fail(root["duration"], "duration", "must be non-negative");
  s.seed = r.get_or<std::uint64_t>(root, "seed", 1, "");
  s.prioritization = r.get_or<bool>(root, "prioritization", true, "");
  s.liveness = r.liveness(root["liveness"], "liveness");
  s.reliable = r.reliable(root["reliable"], "reliable");

  std::set<std::string> names;
  const YAML::Node nodes = root["nodes"];
  if (nodes.IsDefined() && !nodes.IsNull()) {
    r.require_seq(nodes, "nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::string p = "nodes[" + std::to_string(i) + "]";
      NodeSpec ns;
      if (nodes[i].IsScalar()) {
        ns.name = nodes[i].Scalar();
      } else {
        r.require_map(nodes[i], p);
        ns.name = r.get<std::string>(nodes[i], "name", p + ".");
        ns.start = r.get_or<double>(nodes[i], "start", 0.0, p + ".");
      }
      if (ns.name.empty() || ns.name.size() > wire::kMaxNameLen) r.fail(nodes[i], p, "name must be 1..64 bytes");
      if (!names.insert(ns.name).second) r.fail(nodes[i], p, "duplicate node name '" + ns.name + "'");
      s.nodes.push_back(ns);
    }
  }

  auto require_node = [&](const YAML::Node& at, const std::string& field, const std::string& name) {
    if (!names.contains(name)) r.fail(at, field, "unknown node '" + name + "'");
  };

  const YAML::Node links = root["links"];
  if (links.IsDefined() && !links.IsNull()) {
    r.require_seq(links, "links");
    for (std::size_t i = 0; i < links.size(); ++i) {
      const std::string p = "links[" + std::to_string(i) + "].";
      const YAML::Node l = links[i];
      r.require_map(l, p);
      LinkSpec ls;
      ls.all = r.get_or<bool>(l, "all", false, p);
      if (!ls.all) {
        if (l["between"].IsDefined()) {
          const YAML::Node b = l["between"];
          if (!b.IsSequence() || b.size() != 2) r.fail(b, p + "between", "expected [a, b]");
          ls.a = r.as<std::string>(b[0], p + "between");
          ls.b = r.as<std::string>(b[1], p + "between");
        } else {
          ls.a = r.get<std::string>(l, "from", p);
          ls.b = r.get<std::string>(l, "to", p);
          ls.directed = true;
        }
        require_node(l, p + "endpoints", ls.a);
        require_node(l, p + "endpoints", ls.b);
        if (ls.a == ls.b) r.fail(l, p + "endpoints", "a link needs two distinct nodes");
      }
      ls.model = parse_link_model(r, l, p);
      s.links.push_back(std::move(ls));
    }
  }

  s.topics = r.topic_table(root["topics"], "topics");
  std::set<std::string> topic_names;
  for (const auto& t : s.topics) topic_names.insert(t.name);
  for (std::size_t i = 0; i < s.topics.size(); ++i)
    if (s.topics[i].mode == topics::Mode::Reliable && !s.topics[i].dest.empty())
      require_node(root["topics"][i], "topics[" + std::to_string(i) + "].dest", s.topics[i].dest);

  const YAML::Node traffic = root["traffic"];
  if (traffic.IsDefined() && !traffic.IsNull()) {
    r.require_seq(traffic, "traffic");
    for (std::size_t i = 0; i < traffic.size(); ++i) {
      const std::string p = "traffic[" + std::to_string(i) + "].";
      const YAML::Node t = traffic[i];
      r.require_map(t, p);
      TrafficSpec ts;
      ts.node = r.get<std::string>(t, "node", p);
      require_node(t["node"], p + "node", ts.node);
      ts.topic = r.get<std::string>(t, "topic", p);
      if (!topic_names.contains(ts.topic)) r.fail(t["topic"], p + "topic", "unknown topic '" + ts.topic + "'");
      ts.rate = r.get<double>(t, "rate", p);
      if (!(ts.rate > 0)) r.fail(t["rate"], p + "rate", "must be positive");
      ts.size = r.get<std::size_t>(t, "size", p);
      ts.size_max = r.get_or<std::size_t>(t, "size_max", 0, p);
      if (ts.size_max != 0 && ts.size_max < ts.size) r.fail(t["size_max"], p + "size_max", "must be >= size");
      ts.start = r.get_or<double>(t, "start", 0.0, p);
      ts.stop = r.get_or<double>(t, "stop", std::numeric_limits<double>::infinity(), p);
      if (t["dest"].IsDefined()) {
        ts.dest = r.get<std::string>(t, "dest", p);
        require_node(t["dest"], p + "dest", *ts.dest);
      }
      s.traffic.push_back(std::move(ts));
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidScenario(path.string() + ": cannot open scenario file", "path");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::vector<double> ArrivalSeries::intervals() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < times.size(); ++i) out.push_back(times[i] - times[i - 1]);
  return out;
}

SeriesStats describe(const std::vector<double>& xs) {
  SeriesStats s;
  s.samples = xs.size();
  if (xs.empty()) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

const ArrivalSeries* RunStats::series(const std::string& receiver, const std::string& source,
                                      const std::string& topic) const {
  for (const auto& a : arrivals)
    if (a.receiver == receiver && a.source == source && a.topic == topic) return &a;
  return nullptr;
}

std::map<std::string, std::string> RunStats::csv_files() const {
  std::map<std::string, std::string> files;

  std::string arr = "receiver,source,topic,time,interval\n";
  for (const auto& a : arrivals) {
    for (std::size_t i = 0; i < a.times.size(); ++i) {
      arr += a.receiver + "," + a.source + "," + a.topic + "," + fmt_double(a.times[i]) + ",";
      if (i > 0) arr += fmt_double(a.times[i] - a.times[i - 1]);
      arr += "\n";
    }
  }
  files["arrivals.csv"] = std::move(arr);

  std::string tb = "topic,messages_published,messages_rejected,bytes_submitted,messages_delivered,bytes_delivered\n";
  for (const auto& [name, t] : topics)
    tb += name + "," + std::to_string(t.messages_published) + "," + std::to_string(t.messages_rejected) + "," +
          std::to_string(t.bytes_submitted) + "," + std::to_string(t.messages_delivered) + "," +
          std::to_string(t.bytes_delivered) + "\n";
  files["topic_bytes.csv"] = std::move(tb);

  std::string conn = "observer,peer,from,to,state\n";
  for (const auto& c : connectivity)
    conn += c.observer + "," + c.peer + "," + fmt_double(c.from) + "," + fmt_double(c.to) + "," +
            (c.online ? "online" : "offline") + "\n";
  files["connectivity.csv"] = std::move(conn);

  std::string ctr = "counter,value\n";
  for (const auto& [k, v] : counters) ctr += k + "," + std::to_string(v) + "\n";
  files["counters.csv"] = std::move(ctr);
  return files;
}

void RunStats::write_csv(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : csv_files()) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
  }
}

std::string RunStats::summary() const {
  std::ostringstream out;
  out << "duration=" << fmt_double(duration) << "\n";
  out << "seed=" << seed << "\n";
  std::uint64_t total_delivered = 0;
  for (const auto& [name, t] : topics) total_delivered += t.bytes_delivered;
  out << "bytes_delivered_total=" << total_delivered << "\n";
  for (const auto& [name, t] : topics) {
    out << "topic." << name << ".bytes_submitted=" << t.bytes_submitted << "\n";
    out << "topic." << name << ".bytes_delivered=" << t.bytes_delivered << "\n";
    out << "topic." << name << ".messages_delivered=" << t.messages_delivered << "\n";
    out << "topic." << name << ".messages_rejected=" << t.messages_rejected << "\n";
    const double frac = total_delivered ? static_cast<double>(t.bytes_delivered) / static_cast<double>(total_delivered) : 0.0;
    out << "topic." << name << ".delivered_fraction=" << fmt_double(frac) << "\n";
  }
  for (const auto& a : arrivals) {
    if (std::find(one_hz_topics.begin(), one_hz_topics.end(), a.topic) == one_hz_topics.end()) continue;
    const SeriesStats st = describe(a.intervals());
    const std::string key = "arrival." + a.receiver + "." + a.source + "." + a.topic;
    out << key << ".samples=" << st.samples << "\n";
    out << key << ".mean=" << fmt_double(st.mean) << "\n";
    out << key << ".stddev=" << fmt_double(st.stddev) << "\n";
    out << key << ".reference=N(1.00,0.04)\n";
    out << key << ".within_5pct=" << (std::abs(st.mean - 1.0) <= 0.05 ? "true" : "false") << "\n";
  }
  for (const auto& [k, v] : counters) out << "counter." << k << "=" << v << "\n";
  return out.str();
}

RunStats run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed_override) {
  const std::uint64_t seed = seed_override.value_or(scenario.seed);
  Network net(seed);

  std::vector<topics::TopicConfig> topic_table = scenario.topics;
  if (!scenario.prioritization)
    for (auto& t : topic_table) t.priority = sched::kDefaultPriority;

  for (const auto& ns : scenario.nodes) {
    NodeConfig cfg;
    cfg.name = ns.name;
    cfg.liveness = scenario.liveness;
    cfg.reliable = scenario.reliable;
    cfg.topics = topic_table;
    try {
      net.add_node(std::move(cfg));
    } catch (const std::invalid_argument& e) {
      throw InvalidScenario(std::string("nodes: ") + e.what(), "nodes");
    }
  }
  const std::size_t n = net.node_count();

  for (const auto& ls : scenario.links) {
    if (ls.all) continue;
    const std::size_t a = *net.index_of(ls.a);
    const std::size_t b = *net.index_of(ls.b);
    if (ls.directed)
      net.set_link(a, b, ls.model);
    else
      net.connect(a, b, ls.model);
  }
  for (const auto& ls : scenario.links) {
    if (!ls.all) continue;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b && net.link(a, b) == nullptr) net.set_link(a, b, ls.model);
  }

  RunStats stats;
  stats.duration = scenario.duration;
  stats.seed = seed;
  for (const auto& t : scenario.topics) stats.topics[t.name];
  for (const auto& g : scenario.traffic)
    if (g.rate == 1.0 && std::find(stats.one_hz_topics.begin(), stats.one_hz_topics.end(), g.topic) ==
                             stats.one_hz_topics.end())
      stats.one_hz_topics.push_back(g.topic);

  // (receiver, source, topic) -> arrival times
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> arrivals;
  // Data can arrive before the source's first heartbeat, so name sources here.
  std::map<NodeId, std::string> name_by_id;
  for (std::size_t i = 0; i < n; ++i) name_by_id[net.node(i).id()] = net.node(i).name();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string receiver = net.node(i).name();
    for (const auto& t : scenario.topics) {
      net.node(i).subscribe(t.name, [&, receiver](const InboundDelivery& d) {
        auto& ts = stats.topics[d.topic];
        ++ts.messages_delivered;
        ts.bytes_delivered += d.payload.size();
        auto named = name_by_id.find(d.source_id);
        const std::string source = named != name_by_id.end() ? named->second : std::to_string(d.source_id);
        arrivals[{receiver, source, d.topic}].push_back(to_seconds(d.arrival_time));
      });
    }
  }

  // Connectivity timelines start Offline (undiscovered) at t=0 for every pair.
  struct Open {
    double since = 0.0;
    bool online = false;
  };
  std::map<std::pair<std::size_t, std::size_t>, Open> open;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) open[{a, b}] = Open{};
  std::map<NodeId, std::size_t> index_by_id;
  for (std::size_t i = 0; i < n; ++i) index_by_id[net.node(i).id()] = i;

  net.on_peer = [&](std::size_t observer, NodeId peer, PeerTransition t, TimePoint now) {
    auto it = index_by_id.find(peer);
    if (it == index_by_id.end()) return;
    Open& o = open[{observer, it->second}];
    const bool online = t != PeerTransition::WentOffline;
    if (o.online == online) return;
    const double at = to_seconds(now);
    stats.connectivity.push_back({net.node(observer).name(), net.node(it->second).name(), o.since, at, o.online});
    o = Open{at, online};
  };

  const TimePoint end = at_seconds(scenario.duration);
  for (std::size_t i = 0; i < n; ++i) net.start_node(i, at_seconds(scenario.nodes[i].start));

  for (const auto& g : scenario.traffic) {
    const std::size_t src = *net.index_of(g.node);
    auto fire = std::make_shared<std::function<void(std::uint64_t)>>();
    *fire = [&, src, fire_weak = std::weak_ptr(fire)](std::uint64_t k) {
      const double t = g.start + static_cast<double>(k) / g.rate;
      if (t >= g.stop || t > scenario.duration) return;
      std::size_t size = g.size;
      if (g.size_max > g.size) size = std::uniform_int_distribution<std::size_t>(g.size, g.size_max)(net.rng());
      Bytes payload(size);
      for (std::size_t i = 0; i < size; i += 8) {
        std::uint64_t w = net.rng()();
        for (std::size_t j = i; j < std::min(size, i + 8); ++j, w >>= 8) payload[j] = static_cast<std::uint8_t>(w);
      }
      auto& ts = stats.topics[g.topic];
      ++ts.messages_published;
      auto r = net.node(src).publish(g.topic, std::move(payload), net.now(), g.dest);
      if (auto* ok = std::get_if<topics::Published>(&r)) {
        std::uint64_t recipients = ok->message_ids.size();
        if (ok->single_datagram) recipients = n - 1;
        ts.bytes_submitted += size * recipients;
      } else {
        ++ts.messages_rejected;
      }
      if (auto self = fire_weak.lock()) {
        const double next = g.start + static_cast<double>(k + 1) / g.rate;
        net.clock().schedule(at_seconds(next), [self, k] { (*self)(k + 1); });
      }
    };
    net.clock().schedule(at_seconds(g.start), [fire] { (*fire)(0); });
  }

  net.run_until(end);

  for (auto& [key, o] : open) {
    stats.connectivity.push_back(
        {net.node(key.first).name(), net.node(key.second).name(), o.since, scenario.duration, o.online});
  }
  std::sort(stats.connectivity.begin(), stats.connectivity.end(), [](const auto& x, const auto& y) {
    return std::tie(x.observer, x.peer, x.from) < std::tie(y.observer, y.peer, y.from);
  });
  for (auto& [key, times] : arrivals)
    stats.arrivals.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::move(times)});

  auto& c = stats.counters;
  c["events_processed"] = net.clock().processed();
  c["datagrams_offered"] = net.counters().datagrams_offered;
  c["datagrams_delivered"] = net.counters().datagrams_delivered;
  c["datagrams_lost"] = net.counters().datagrams_lost;
  c["datagrams_link_down"] = net.counters().datagrams_link_down;
  c["max_in_flight_per_pair"] = net.window_probe().max_observed();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = net.node(i).engine().counters();
    const auto& nc = net.node(i).counters();
    c["fragments_sent"] += e.fragments_sent;
    c["retransmits"] += e.retransmits;
    c["acks_sent"] += e.acks_sent;
    c["stale_acks"] += e.stale_acks;
    c["duplicate_fragments"] += e.duplicate_fragments;
    c["reassembly_purges"] += e.reassembly_purges;
    c["transfers_completed"] += e.transfers_completed;
    c["transfers_aborted"] += e.transfers_aborted;
    c["heartbeats_sent"] += nc.heartbeats_sent;
    c["heartbeats_received"] += nc.heartbeats_received;
    c["decode_errors"] += nc.decode_errors;
  }
  return stats;
}

}  // namespace umesh::simnet
