#include "umesh/daemon.hpp"

#include "umesh/local.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <random>
#include <sstream>

namespace umesh {

namespace {

sockaddr_in to_sockaddr(const Address& a) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(a.host);
  sa.sin_port = htons(a.port);
  return sa;
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string BenchReport::to_text() const {
  std::ostringstream out;
  out << "messages=" << messages << "\n"
      << "payload_bytes=" << payload_bytes << "\n"
      << "delivered_bytes=" << delivered_bytes << "\n"
      << "duration_s=" << fmt(duration_s) << "\n"
      << "throughput_bps=" << fmt(throughput_bps, 1) << "\n"
      << "fragments_sent=" << fragments_sent << "\n"
      << "retransmits=" << retransmits << "\n"
      << "completed=" << completed << "\n"
      << "aborted=" << aborted << "\n"
      << "partial=" << (partial ? "true" : "false") << "\n";
  if (!note.empty()) out << "note=" << note << "\n";
  return out.str();
}

BenchReport BenchReport::from_text(const std::string& text) {
  BenchReport r;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = line.substr(0, eq);
    const std::string v = line.substr(eq + 1);
    if (k == "messages") r.messages = std::stoull(v);
    else if (k == "payload_bytes") r.payload_bytes = std::stoull(v);
    else if (k == "delivered_bytes") r.delivered_bytes = std::stoull(v);
    else if (k == "duration_s") r.duration_s = std::stod(v);
    else if (k == "throughput_bps") r.throughput_bps = std::stod(v);
    else if (k == "fragments_sent") r.fragments_sent = std::stoull(v);
    else if (k == "retransmits") r.retransmits = std::stoull(v);
    else if (k == "completed") r.completed = std::stoull(v);
    else if (k == "aborted") r.aborted = std::stoull(v);
    else if (k == "partial") r.partial = v == "true";
    else if (k == "note") r.note = v;
  }
  return r;
}

class Daemon::UdpMedium final : public Medium {
 public:
  UdpMedium(int fd, std::vector<Address> targets) : fd_(fd), targets_(std::move(targets)) {}

  void send_to(ByteView datagram, const Address& to) override {
    const sockaddr_in sa = to_sockaddr(to);
    // Drops on a full socket buffer are recovered by retransmission.
    (void)::sendto(fd_, datagram.data(), datagram.size(), 0, reinterpret_cast<const sockaddr*>(&sa), sizeof sa);
  }

  void send_broadcast(ByteView datagram) override {
    for (const auto& t : targets_) send_to(datagram, t);
  }

 private:
  int fd_;
  std::vector<Address> targets_;
};

struct Daemon::Bench {
  std::set<std::uint32_t> pending;
  BenchReport report;
  TimePoint started{};
  reliable::Counters counters_at_start;
  NodeId dest = 0;
  std::promise<BenchReport> done;
};

Daemon::Daemon(DaemonConfig config, Logger logger) : config_(std::move(config)), logger_(std::move(logger)) {
  udp_fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (udp_fd_ < 0) throw BindFailure(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(udp_fd_, SOL_SOCKET, SO_BROADCAST, &one, sizeof one);
  int buf = 4 << 20;
  ::setsockopt(udp_fd_, SOL_SOCKET, SO_RCVBUF, &buf, sizeof buf);
  ::setsockopt(udp_fd_, SOL_SOCKET, SO_SNDBUF, &buf, sizeof buf);
  timeval tv{0, 100000};
  ::setsockopt(udp_fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);

  const sockaddr_in sa = to_sockaddr(config_.bind);
  if (::bind(udp_fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
    const int err = errno;
    ::close(udp_fd_);
    throw BindFailure("bind " + config_.bind.to_string() + ": " + std::strerror(err));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(udp_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  local_ = Address{ntohl(bound.sin_addr.s_addr), ntohs(bound.sin_port)};

  try {
    control_fd_ = local::listen_unix(config_.control_socket);
  } catch (const local::IoError& e) {
    ::close(udp_fd_);
    throw BindFailure(e.what());
  }

  NodeConfig nc = config_.node_config();
  // Random start so a restarted node's message ids do not collide with the
  // receiver's recently-delivered set.
  nc.first_message_id = static_cast<std::uint32_t>(std::random_device{}());
  medium_ = std::make_unique<UdpMedium>(udp_fd_, config_.broadcast_targets);
  node_ = std::make_unique<Node>(std::move(nc), *medium_);

  NodeHooks hooks;
  hooks.on_peer = [this](NodeId peer, PeerTransition t, TimePoint) {
    const auto* rec = node_->peers().find(peer);
    log("event=peer peer=" + (rec ? rec->name : std::to_string(peer)) + " transition=" + to_string(t) +
        (rec ? " address=" + rec->address.to_string() : ""));
  };
  hooks.on_transfer_finished = [this](const reliable::TransferOutcome& o) { on_transfer_finished(o); };
  node_->set_hooks(std::move(hooks));
}

Daemon::~Daemon() {
  stop();
  if (udp_fd_ >= 0) ::close(udp_fd_);
  if (control_fd_ >= 0) {
    ::close(control_fd_);
    ::unlink(config_.control_socket.c_str());
  }
}

void Daemon::log(const std::string& line) const {
  if (logger_) {
    logger_(line);
  } else {
    std::cerr << "node=" << config_.name << " " << line << "\n";
  }
}

void Daemon::start() {
  if (running_.exchange(true)) return;
  log("event=start bind=" + local_.to_string() + " control=" + config_.control_socket);
  protocol_thread_ = std::thread([this] { protocol_loop(); });
  reader_thread_ = std::thread([this] { reader_loop(); });
  delivery_thread_ = std::thread([this] { delivery_loop(); });
  control_thread_ = std::thread([this] { control_loop(); });
}

void Daemon::stop() {
  std::lock_guard stop_lock(stop_mu_);
  if (!running_ || stopping_) return;
  stopping_ = true;
  queue_cv_.notify_all();
  delivery_cv_.notify_all();
  if (protocol_thread_.joinable()) protocol_thread_.join();
  if (reader_thread_.joinable()) reader_thread_.join();
  if (control_thread_.joinable()) control_thread_.join();
  {
    std::lock_guard lk(clients_mu_);
    for (auto& t : client_threads_)
      if (t.joinable()) t.join();
    client_threads_.clear();
  }
  if (delivery_thread_.joinable()) delivery_thread_.join();
  log("event=stop");
}

void Daemon::post(std::function<void(TimePoint)> fn) {
  {
    std::lock_guard lk(queue_mu_);
    queue_.push_back(std::move(fn));
  }
  queue_cv_.notify_one();
}

template <typename T>
T Daemon::call(std::function<T(TimePoint)> fn) {
  if (!running_ || stopping_) throw std::runtime_error("daemon is not running");
  auto promise = std::make_shared<std::promise<T>>();
  auto future = promise->get_future();
  post([promise, fn = std::move(fn)](TimePoint now) {
    try {
      promise->set_value(fn(now));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  });
  return future.get();
}

void Daemon::protocol_loop() {
  const Duration interval = config_.reliable.tick_interval();
  node_->start(Clock::now());
  TimePoint next_tick = Clock::now() + interval;
  std::deque<std::function<void(TimePoint)>> work;
  while (!stopping_) {
    {
      std::unique_lock lk(queue_mu_);
      queue_cv_.wait_until(lk, next_tick, [&] { return !queue_.empty() || stopping_.load(); });
      work.swap(queue_);
    }
    for (auto& fn : work) fn(Clock::now());
    work.clear();
    const TimePoint now = Clock::now();
    if (now >= next_tick) {
      node_->tick(now);
      next_tick += interval;
      if (next_tick <= now) next_tick = now + interval;
    }
  }
  node_->shutdown(Clock::now());
  // Serve calls that raced with shutdown so no caller is left waiting.
  std::lock_guard lk(queue_mu_);
  for (auto& fn : queue_) fn(Clock::now());
  queue_.clear();
}

void Daemon::reader_loop() {
  std::uint8_t buf[2048];
  while (!stopping_) {
    sockaddr_in from{};
    socklen_t len = sizeof from;
    const ssize_t n = ::recvfrom(udp_fd_, buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&from), &len);
    if (n < 0) continue;  // timeout or EINTR
    auto bytes = std::make_shared<Bytes>(buf, buf + n);
    const Address addr{ntohl(from.sin_addr.s_addr), ntohs(from.sin_port)};
    post([this, bytes, addr](TimePoint now) { node_->on_datagram(*bytes, addr, now); });
  }
}

void Daemon::ensure_node_subscription(const std::string& topic) {
  post([this, topic](TimePoint) {
    if (!node_subscriptions_.insert(topic).second) return;
    node_->subscribe(topic, [this](const InboundDelivery& d) {
      {
        std::lock_guard lk(delivery_mu_);
        deliveries_.push_back(d);
      }
      delivery_cv_.notify_one();
    });
  });
}

void Daemon::subscribe(const std::string& topic, topics::Sink sink) {
  {
    std::lock_guard lk(delivery_mu_);
    sinks_[topic].push_back(std::move(sink));
  }
  ensure_node_subscription(topic);
}

void Daemon::delivery_loop() {
  for (;;) {
    InboundDelivery d;
    std::vector<topics::Sink> sinks;
    std::vector<int> fds;
    {
      std::unique_lock lk(delivery_mu_);
      delivery_cv_.wait(lk, [&] { return !deliveries_.empty() || stopping_.load(); });
      if (deliveries_.empty()) return;
      d = std::move(deliveries_.front());
      deliveries_.pop_front();
      if (auto it = sinks_.find(d.topic); it != sinks_.end()) sinks = it->second;
      for (const auto& s : subscribers_)
        if (s.topic == d.topic) fds.push_back(s.fd);
    }
    for (const auto& sink : sinks) sink(d);
    if (fds.empty()) continue;
    const Bytes frame = local::encode(local::DeliveryFrame{d.source_name, d.topic, d.payload});
    for (int fd : fds) {
      try {
        local::write_all(fd, frame);
      } catch (const local::IoError&) {
        std::lock_guard lk(delivery_mu_);
        std::erase_if(subscribers_, [fd](const Subscriber& s) { return s.fd == fd; });
      }
    }
  }
}

std::variant<topics::Published, topics::PublishError> Daemon::publish(const std::string& topic, Bytes payload,
                                                                      std::optional<std::string> dest) {
  using R = std::variant<topics::Published, topics::PublishError>;
  auto shared = std::make_shared<Bytes>(std::move(payload));
  return call<R>([this, topic, shared, dest](TimePoint now) { return node_->publish(topic, std::move(*shared), now, dest); });
}

std::vector<PeerStatus> Daemon::status() {
  return call<std::vector<PeerStatus>>([this](TimePoint now) { return node_->status(now); });
}

void Daemon::set_topic_priority(const std::string& topic, std::uint8_t priority) {
  call<int>([this, topic, priority](TimePoint) {
    node_->set_topic_priority(topic, priority);
    return 0;
  });
  log("event=set-priority topic=" + topic + " priority=" + std::to_string(priority));
}

BenchReport Daemon::bench(const std::string& dest, std::uint64_t total_bytes, std::size_t payload_bytes) {
  auto bench = std::make_shared<Bench>();
  auto future = bench->done.get_future();
  bench->report.payload_bytes = total_bytes;
  if (total_bytes == 0) {
    bench->report.note = "no data requested";
    return bench->report;
  }
  if (payload_bytes == 0) throw std::invalid_argument("payload size must be positive");

  post([this, bench, dest, total_bytes, payload_bytes](TimePoint now) {
    BenchReport& r = bench->report;
    auto resolved = node_->peers().resolve(dest);
    if (!resolved) {
      r.partial = true;
      r.note = "UnknownPeer";
      bench->done.set_value(r);
      return;
    }
    bench->dest = resolved->node_id;
    bench->started = now;
    bench->counters_at_start = node_->engine().counters();

    std::mt19937_64 rng(0x5eed);
    auto make_payload = [&](std::size_t n) {
      auto p = std::make_shared<Bytes>(n);
      for (auto& b : *p) b = static_cast<std::uint8_t>(rng());
      return std::shared_ptr<const Bytes>(std::move(p));
    };
    const auto full = make_payload(payload_bytes);
    benches_.push_back(bench);
    std::uint64_t remaining = total_bytes;
    while (remaining > 0) {
      const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, payload_bytes));
      auto payload = n == payload_bytes ? full : make_payload(n);
      auto res = node_->send(dest, "bench", payload, now);
      if (auto* id = std::get_if<std::uint32_t>(&res)) {
        bench->pending.insert(*id);
        ++r.messages;
      } else {
        r.partial = true;
        r.note = reliable::to_string(std::get<reliable::SubmitError>(res));
        break;
      }
      remaining -= n;
    }
    if (bench->pending.empty()) {
      std::erase(benches_, bench);
      bench->done.set_value(r);
    }
  });
  return future.get();
}

void Daemon::on_transfer_finished(const reliable::TransferOutcome& o) {
  if (o.topic != "bench") {
    const auto* rec = node_->peers().find(o.dest);
    log(std::string("event=transfer dest=") + (rec ? rec->name : std::to_string(o.dest)) + " message_id=" + std::to_string(o.message_id) +
        " topic=" + o.topic + " bytes=" + std::to_string(o.bytes) + " outcome=" + (o.completed ? "complete" : "aborted") +
        " fragments=" + std::to_string(o.fragments_sent) + " retransmits=" + std::to_string(o.retransmits) +
        " duration_s=" + fmt(to_seconds(o.duration)));
  }

  for (auto it = benches_.begin(); it != benches_.end(); ++it) {
    Bench& b = **it;
    if (b.dest != o.dest || b.pending.erase(o.message_id) == 0) continue;
    if (o.completed) {
      ++b.report.completed;
      b.report.delivered_bytes += o.bytes;
    } else {
      ++b.report.aborted;
      b.report.partial = true;
      if (b.report.note.empty()) b.report.note = "PeerOffline";
    }
    if (b.pending.empty()) {
      const TimePoint now = Clock::now();
      const auto& c = node_->engine().counters();
      b.report.duration_s = to_seconds(now - b.started);
      b.report.fragments_sent = c.fragments_sent - b.counters_at_start.fragments_sent;
      b.report.retransmits = c.retransmits - b.counters_at_start.retransmits;
      b.report.throughput_bps =
          b.report.duration_s > 0 ? static_cast<double>(b.report.delivered_bytes) * 8.0 / b.report.duration_s : 0.0;
      b.done.set_value(b.report);
      benches_.erase(it);
    }
    return;
  }
}

void Daemon::control_loop() {
  while (!stopping_) {
    pollfd p{control_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept4(control_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard lk(clients_mu_);
    client_threads_.emplace_back([this, fd] {
      try {
        handle_client(fd);
      } catch (const std::exception& e) {
        log(std::string("event=client-error what=\"") + e.what() + "\"");
      }
      ::close(fd);
    });
  }
}

void Daemon::handle_client(int fd) {
  // Wait for the command line without blocking shutdown.
  for (;;) {
    if (stopping_) return;
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, 100) > 0) break;
  }
  auto line = local::read_line(fd);
  if (!line) return;
  std::istringstream in(*line);
  std::string cmd;
  in >> cmd;

  if (cmd == "status") {
    for (const auto& s : status()) {
      local::write_line(fd, "peer name=" + s.name + " state=" + peers::to_string(s.state) +
                                " last_heard_age=" + fmt(to_seconds(s.last_heard_age), 3) +
                                " bytes_queued=" + std::to_string(s.bytes_queued) +
                                " address=" + s.address.to_string());
    }
    local::write_line(fd, "ok");
  } else if (cmd == "set-priority") {
    std::string topic;
    int prio = -1;
    in >> topic >> prio;
    if (topic.empty() || prio < 0 || prio > 255) {
      local::write_line(fd, "error usage: set-priority <topic> <0..255>");
      return;
    }
    set_topic_priority(topic, static_cast<std::uint8_t>(prio));
    local::write_line(fd, "ok");
  } else if (cmd == "bench") {
    std::string dest;
    std::uint64_t total = 0;
    std::size_t payload = 0;
    in >> dest >> total >> payload;
    if (dest.empty() || (total > 0 && payload == 0)) {
      local::write_line(fd, "error usage: bench <dest> <bytes> <payload>");
      return;
    }
    const std::string text = bench(dest, total, payload).to_text();
    local::write_all(fd, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    local::write_line(fd, "ok");
  } else if (cmd == "pub") {
    std::string dest;
    in >> dest;
    std::optional<std::string> override_dest;
    if (!dest.empty()) override_dest = dest;
    while (auto frame = local::read_publish_frame(fd)) {
      auto r = publish(frame->topic, std::move(frame->payload), override_dest);
      if (auto* ok = std::get_if<topics::Published>(&r)) {
        std::string ids;
        for (auto id : ok->message_ids) ids += (ids.empty() ? "" : ",") + std::to_string(id);
        local::write_line(fd, std::string("ok mode=") + topics::to_string(ok->mode) + " message_ids=" + ids);
      } else {
        local::write_line(fd, std::string("error ") + topics::to_string(std::get<topics::PublishError>(r)));
      }
    }
  } else if (cmd == "sub") {
    std::string topic;
    in >> topic;
    if (topic.empty()) {
      local::write_line(fd, "error usage: sub <topic>");
      return;
    }
    {
      std::lock_guard lk(delivery_mu_);
      subscribers_.push_back({fd, topic});
    }
    ensure_node_subscription(topic);
    local::write_line(fd, "ok");
    // Hold the connection until the client hangs up or the daemon stops.
    while (!stopping_) {
      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      char c;
      if (::read(fd, &c, 1) <= 0) break;
    }
    std::lock_guard lk(delivery_mu_);
    std::erase_if(subscribers_, [fd](const Subscriber& s) { return s.fd == fd; });
  } else {
    local::write_line(fd, "error unknown command '" + cmd + "'");
  }
}

}  // namespace umesh
