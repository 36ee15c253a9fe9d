#ifndef UMESH_LOCAL_HPP
#define UMESH_LOCAL_HPP

#include "umesh/types.hpp"

#include <optional>
#include <stdexcept>
#include <string>

// Local (Unix stream socket) surface of the daemon. Each connection opens with
// one command line terminated by '\n':
//
//   status
//   set-priority <topic> <n>
//   bench <dest> <total_bytes> <payload_bytes>
//   pub [<dest>]        then any number of publish frames, one reply line each
//   sub <topic>         then the daemon streams delivery frames
//
// Publish frame:  u16 topic_len | topic | u32 payload_len | payload
// Delivery frame: u16 source_len | source | u16 topic_len | topic | u32 payload_len | payload
// All integers big-endian.
namespace umesh::local {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PublishFrame {
  std::string topic;
  Bytes payload;
};

struct DeliveryFrame {
  std::string source;
  std::string topic;
  Bytes payload;
};

Bytes encode(const PublishFrame& f);
Bytes encode(const DeliveryFrame& f);

// Blocking helpers over a connected stream socket. Reads return nullopt on a
// clean EOF before the first byte; a short read mid-frame throws IoError.
void write_all(int fd, ByteView data);
void write_line(int fd, const std::string& line);
std::optional<std::string> read_line(int fd);
std::optional<PublishFrame> read_publish_frame(int fd);
std::optional<DeliveryFrame> read_delivery_frame(int fd);

// Connects to a daemon's control socket; throws IoError.
int connect_unix(const std::string& path);
// Binds and listens; removes a stale socket file first. Throws IoError.
int listen_unix(const std::string& path);

}  // namespace umesh::local

#endif  // UMESH_LOCAL_HPP
