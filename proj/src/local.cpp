#include "umesh/local.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace umesh::local {

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_str16(Bytes& out, const std::string& s) {
  if (s.size() > 0xFFFF) throw IoError("string too long for frame");
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_bytes32(Bytes& out, const Bytes& b) {
  if (b.size() > 0xFFFFFFFFu) throw IoError("payload too long for frame");
  put_u32(out, static_cast<std::uint32_t>(b.size()));
  out.insert(out.end(), b.begin(), b.end());
}

// Returns false on EOF before any byte when allow_eof is set.
bool read_exact(int fd, void* buf, std::size_t n, bool allow_eof) {
  auto* p = static_cast<std::uint8_t*>(buf);
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::read(fd, p + got, n - got);
    if (r == 0) {
      if (got == 0 && allow_eof) return false;
      throw IoError("unexpected end of stream");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("read: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

std::optional<std::uint16_t> read_u16(int fd, bool allow_eof) {
  std::uint8_t b[2];
  if (!read_exact(fd, b, 2, allow_eof)) return std::nullopt;
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t read_u32(int fd) {
  std::uint8_t b[4];
  read_exact(fd, b, 4, false);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::string read_str(int fd, std::size_t n) {
  std::string s(n, '\0');
  if (n) read_exact(fd, s.data(), n, false);
  return s;
}

Bytes read_payload(int fd) {
  const std::uint32_t n = read_u32(fd);
  Bytes b(n);
  if (n) read_exact(fd, b.data(), n, false);
  return b;
}

sockaddr_un unix_address(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof addr.sun_path) throw IoError("socket path too long: " + path);
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  return addr;
}

}  // namespace

Bytes encode(const PublishFrame& f) {
  Bytes out;
  put_str16(out, f.topic);
  put_bytes32(out, f.payload);
  return out;
}

Bytes encode(const DeliveryFrame& f) {
  Bytes out;
  put_str16(out, f.source);
  put_str16(out, f.topic);
  put_bytes32(out, f.payload);
  return out;
}

void write_all(int fd, ByteView data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t w = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("write: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(w);
  }
}

void write_line(int fd, const std::string& line) {
  const std::string with_nl = line + "\n";
  write_all(fd, ByteView(reinterpret_cast<const std::uint8_t*>(with_nl.data()), with_nl.size()));
}

std::optional<std::string> read_line(int fd) {
  std::string line;
  char c = 0;
  for (;;) {
    if (!read_exact(fd, &c, 1, line.empty())) return std::nullopt;
    if (c == '\n') return line;
    line.push_back(c);
    if (line.size() > 4096) throw IoError("line too long");
  }
}

std::optional<PublishFrame> read_publish_frame(int fd) {
  auto topic_len = read_u16(fd, true);
  if (!topic_len) return std::nullopt;
  PublishFrame f;
  f.topic = read_str(fd, *topic_len);
  f.payload = read_payload(fd);
  return f;
}

std::optional<DeliveryFrame> read_delivery_frame(int fd) {
  auto source_len = read_u16(fd, true);
  if (!source_len) return std::nullopt;
  DeliveryFrame f;
  f.source = read_str(fd, *source_len);
  f.topic = read_str(fd, *read_u16(fd, false));
  f.payload = read_payload(fd);
  return f;
}

int connect_unix(const std::string& path) {
  const sockaddr_un addr = unix_address(path);
  const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const int err = errno;
    ::close(fd);
    throw IoError("connect " + path + ": " + std::strerror(err));
  }
  return fd;
}

int listen_unix(const std::string& path) {
  const sockaddr_un addr = unix_address(path);
  ::unlink(path.c_str());
  const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 16) != 0) {
    const int err = errno;
    ::close(fd);
    throw IoError("listen " + path + ": " + std::strerror(err));
  }
  return fd;
}

}  // namespace umesh::local
