// udpmeshd: one mesh node on a UDP socket, controlled through a Unix socket.

#include "umesh/config.hpp"
#include "umesh/daemon.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"udpmeshd - UDP mesh node daemon"};
  std::string config_path;
  app.add_option("--config", config_path, "daemon configuration file (YAML)")->required();
  CLI11_PARSE(app, argc, argv);

  // Block before any thread exists so the workers inherit the mask and only
  // sigwait() below sees the signal.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGINT);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  try {
    umesh::Daemon daemon(umesh::load_daemon_config(config_path));
    daemon.start();
    int sig = 0;
    sigwait(&set, &sig);
    daemon.stop();
  } catch (const umesh::ConfigError& e) {
    std::cerr << "ConfigError: " << e.what() << "\n";
    return 2;
  } catch (const umesh::BindFailure& e) {
    std::cerr << "BindFailure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
