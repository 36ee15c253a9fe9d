#ifndef UMESH_DAEMON_HPP
#define UMESH_DAEMON_HPP

#include "umesh/config.hpp"
#include "umesh/node.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace umesh {

class BindFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchReport {
  std::size_t messages = 0;
  std::uint64_t payload_bytes = 0;    // requested
  std::uint64_t delivered_bytes = 0;  // bytes of completed transfers
  double duration_s = 0.0;
  double throughput_bps = 0.0;  // payload bits per second over completed transfers
  std::uint64_t fragments_sent = 0;
  std::uint64_t retransmits = 0;
  std::size_t completed = 0;
  std::size_t aborted = 0;
  bool partial = false;
  std::string note;

  // key=value lines
  std::string to_text() const;
  static BenchReport from_text(const std::string& text);
};

/// The node daemon: one Node on a real UDP socket plus the local control and
/// pub/sub socket.
///
/// Threads: a socket reader, the protocol thread (sole owner of the Node), a
/// delivery thread for subscribers, and the control acceptor with one handler
/// per connection. Everything reaches the Node through a serialized queue.
class Daemon {
 public:
  using Logger = std::function<void(const std::string&)>;

  // Binds the UDP socket and control socket. Throws BindFailure.
  explicit Daemon(DaemonConfig config, Logger logger = {});
  ~Daemon();
  Daemon(const Daemon&) = delete;
  Daemon& operator=(const Daemon&) = delete;

  void start();
  // Aborts in-flight transfers and joins all threads. Idempotent.
  void stop();

  const DaemonConfig& config() const { return config_; }
  Address local_address() const { return local_; }

  // Thread-safe; each runs on the protocol thread and waits for the result.
  std::variant<topics::Published, topics::PublishError> publish(const std::string& topic, Bytes payload,
                                                                std::optional<std::string> dest = {});
  std::vector<PeerStatus> status();
  void set_topic_priority(const std::string& topic, std::uint8_t priority);
  BenchReport bench(const std::string& dest, std::uint64_t total_bytes, std::size_t payload_bytes);

  // Sinks run on the delivery thread.
  void subscribe(const std::string& topic, topics::Sink sink);

 private:
  class UdpMedium;
  struct Bench;
  struct Subscriber {
    int fd = -1;
    std::string topic;
  };

  void post(std::function<void(TimePoint)> fn);
  template <typename T>
  T call(std::function<T(TimePoint)> fn);

  void protocol_loop();
  void reader_loop();
  void delivery_loop();
  void control_loop();
  void handle_client(int fd);
  void ensure_node_subscription(const std::string& topic);
  void on_transfer_finished(const reliable::TransferOutcome& o);
  void log(const std::string& line) const;

  DaemonConfig config_;
  Logger logger_;
  int udp_fd_ = -1;
  int control_fd_ = -1;
  Address local_;
  std::unique_ptr<UdpMedium> medium_;
  std::unique_ptr<Node> node_;

  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  std::mutex stop_mu_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<std::function<void(TimePoint)>> queue_;

  std::mutex delivery_mu_;
  std::condition_variable delivery_cv_;
  std::deque<InboundDelivery> deliveries_;
  std::map<std::string, std::vector<topics::Sink>> sinks_;  // guarded by delivery_mu_
  std::vector<Subscriber> subscribers_;                      // guarded by delivery_mu_

  // Protocol-thread state.
  std::set<std::string> node_subscriptions_;
  std::vector<std::shared_ptr<Bench>> benches_;

  std::thread protocol_thread_;
  std::thread reader_thread_;
  std::thread delivery_thread_;
  std::thread control_thread_;
  std::mutex clients_mu_;
  std::vector<std::thread> client_threads_;
};

}  // namespace umesh

#endif  // UMESH_DAEMON_HPP
