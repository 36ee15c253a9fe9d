// umesh: control client for udpmeshd, plus the offline simulator.

#include "umesh/daemon.hpp"
#include "umesh/local.hpp"
#include "umesh/scenario.hpp"

#include <CLI11.hpp>

#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>

namespace {

using umesh::local::IoError;

struct Connection {
  int fd;
  explicit Connection(const std::string& path) : fd(umesh::local::connect_unix(path)) {}
  ~Connection() { ::close(fd); }
};

umesh::Bytes read_all(std::istream& in) {
  return umesh::Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Copies reply lines to stdout until "ok" or "error ...". Returns the exit code.
int relay_reply(int fd) {
  while (auto line = umesh::local::read_line(fd)) {
    if (*line == "ok") return 0;
    if (line->rfind("error", 0) == 0) {
      std::cerr << *line << "\n";
      return 1;
    }
    std::cout << *line << "\n";
  }
  std::cerr << "error daemon closed the connection\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"umesh - mesh node control and simulation"};
  app.require_subcommand(1);
  std::string socket_path;
  if (const char* env = std::getenv("UMESH_SOCKET")) socket_path = env;
  app.add_option("--socket", socket_path, "daemon control socket (default: $UMESH_SOCKET)");

  std::string topic, file, dest;
  auto* pub = app.add_subcommand("pub", "publish one message (payload from --file or stdin)");
  pub->add_option("topic", topic)->required();
  pub->add_option("--file", file, "payload file");
  pub->add_option("--dest", dest, "override the topic's destination");

  std::size_t count = 0;
  bool raw = false;
  auto* sub = app.add_subcommand("sub", "stream deliveries for a topic");
  sub->add_option("topic", topic)->required();
  sub->add_option("--count", count, "exit after this many deliveries");
  sub->add_flag("--raw", raw, "write payload bytes only");

  auto* status = app.add_subcommand("status", "list peers");

  int priority = 0;
  auto* setp = app.add_subcommand("set-priority", "change a topic's priority (0 is most urgent)");
  setp->add_option("topic", topic)->required();
  setp->add_option("n", priority)->required()->check(CLI::Range(0, 255));

  std::uint64_t bytes = 0;
  std::size_t payload = 0;
  auto* bench = app.add_subcommand("bench", "measure reliable throughput to a peer");
  bench->add_option("--dest", dest)->required();
  bench->add_option("--bytes", bytes)->required();
  bench->add_option("--payload", payload)->required();

  std::string scenario_path, out_dir;
  std::uint64_t seed = 0;
  auto* sim = app.add_subcommand("sim", "run a scenario on the simulated network");
  sim->add_option("--scenario", scenario_path)->required();
  auto* seed_opt = sim->add_option("--seed", seed);
  sim->add_option("--out", out_dir, "directory for CSV output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      auto scenario = umesh::simnet::load_scenario(scenario_path);
      std::optional<std::uint64_t> s;
      if (seed_opt->count()) s = seed;
      auto stats = umesh::simnet::run_scenario(scenario, s);
      if (!out_dir.empty()) stats.write_csv(out_dir);
      std::cout << stats.summary();
      return 0;
    }

    if (socket_path.empty()) {
      std::cerr << "error no control socket; pass --socket or set UMESH_SOCKET\n";
      return 2;
    }
    Connection c(socket_path);

    if (status->parsed()) {
      umesh::local::write_line(c.fd, "status");
      return relay_reply(c.fd);
    }
    if (setp->parsed()) {
      umesh::local::write_line(c.fd, "set-priority " + topic + " " + std::to_string(priority));
      return relay_reply(c.fd);
    }
    if (bench->parsed()) {
      umesh::local::write_line(c.fd, "bench " + dest + " " + std::to_string(bytes) + " " + std::to_string(payload));
      return relay_reply(c.fd);
    }
    if (pub->parsed()) {
      umesh::Bytes data;
      if (!file.empty()) {
        std::ifstream in(file, std::ios::binary);
        if (!in) {
          std::cerr << "error cannot open " << file << "\n";
          return 1;
        }
        data = read_all(in);
      } else {
        data = read_all(std::cin);
      }
      umesh::local::write_line(c.fd, dest.empty() ? "pub" : "pub " + dest);
      umesh::local::write_all(c.fd, umesh::local::encode(umesh::local::PublishFrame{topic, std::move(data)}));
      ::shutdown(c.fd, SHUT_WR);
      auto line = umesh::local::read_line(c.fd);
      if (!line) {
        std::cerr << "error daemon closed the connection\n";
        return 1;
      }
      if (line->rfind("ok", 0) == 0) {
        std::cout << *line << "\n";
        return 0;
      }
      std::cerr << *line << "\n";
      return 1;
    }
    if (sub->parsed()) {
      umesh::local::write_line(c.fd, "sub " + topic);
      auto ack = umesh::local::read_line(c.fd);
      if (!ack || *ack != "ok") {
        std::cerr << (ack ? *ack : "error daemon closed the connection") << "\n";
        return 1;
      }
      std::size_t seen = 0;
      while (auto f = umesh::local::read_delivery_frame(c.fd)) {
        if (raw) {
          std::cout.write(reinterpret_cast<const char*>(f->payload.data()), static_cast<std::streamsize>(f->payload.size()));
        } else {
          std::cout << "source=" << f->source << " topic=" << f->topic << " bytes=" << f->payload.size() << "\n";
        }
        std::cout.flush();
        if (count && ++seen >= count) break;
      }
      return 0;
    }
  } catch (const umesh::simnet::InvalidScenario& e) {
    std::cerr << "InvalidScenario: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error " << e.what() << "\n";
    return 1;
  }
  return 0;
}
