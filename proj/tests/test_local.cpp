#include "umesh/daemon.hpp"
#include "umesh/local.hpp"

#include <gtest/gtest.h>

#include <sys/socket.h>
#include <unistd.h>

using namespace umesh;
using namespace umesh::local;

namespace {

struct Pair {
  int fd[2];
  Pair() { EXPECT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, fd), 0); }
  ~Pair() {
    ::close(fd[0]);
    ::close(fd[1]);
  }
};

}  // namespace

TEST(LocalFrames, PublishLayout) {
  const Bytes b = encode(PublishFrame{"ab", {9, 8, 7}});
  const Bytes expect = {0x00, 0x02, 'a', 'b', 0x00, 0x00, 0x00, 0x03, 9, 8, 7};
  EXPECT_EQ(b, expect);
}

TEST(LocalFrames, DeliveryLayout) {
  const Bytes b = encode(DeliveryFrame{"s", "t", {}});
  const Bytes expect = {0x00, 0x01, 's', 0x00, 0x01, 't', 0, 0, 0, 0};
  EXPECT_EQ(b, expect);
}

TEST(LocalFrames, RoundTripOverSocket) {
  Pair p;
  Bytes big(300'000);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<std::uint8_t>(i * 31);
  std::thread writer([&] {
    write_line(p.fd[0], "pub base");
    write_all(p.fd[0], encode(PublishFrame{"map", big}));
    write_all(p.fd[0], encode(DeliveryFrame{"robot1", "telemetry", {1, 2}}));
    ::shutdown(p.fd[0], SHUT_WR);
  });
  EXPECT_EQ(read_line(p.fd[1]), "pub base");
  auto f = read_publish_frame(p.fd[1]);
  ASSERT_TRUE(f);
  EXPECT_EQ(f->topic, "map");
  EXPECT_EQ(f->payload, big);
  auto d = read_delivery_frame(p.fd[1]);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->source, "robot1");
  EXPECT_EQ(d->payload, (Bytes{1, 2}));
  EXPECT_FALSE(read_publish_frame(p.fd[1]));  // clean EOF
  writer.join();
}

TEST(LocalFrames, TruncatedFrameThrows) {
  Pair p;
  const Bytes full = encode(PublishFrame{"t", {1, 2, 3, 4}});
  write_all(p.fd[0], ByteView(full).first(full.size() - 2));
  ::shutdown(p.fd[0], SHUT_WR);
  EXPECT_THROW(read_publish_frame(p.fd[1]), IoError);
}

TEST(LocalFrames, ConnectFailure) { EXPECT_THROW(connect_unix("/nonexistent/dir/x.sock"), IoError); }

TEST(BenchReportText, RoundTrip) {
  BenchReport r;
  r.messages = 3;
  r.payload_bytes = 100;
  r.delivered_bytes = 90;
  r.duration_s = 1.5;
  r.throughput_bps = 480.0;
  r.retransmits = 4;
  r.completed = 2;
  r.aborted = 1;
  r.partial = true;
  r.note = "PeerOffline";
  const auto back = BenchReport::from_text(r.to_text());
  EXPECT_EQ(back.messages, 3u);
  EXPECT_EQ(back.delivered_bytes, 90u);
  EXPECT_DOUBLE_EQ(back.duration_s, 1.5);
  EXPECT_DOUBLE_EQ(back.throughput_bps, 480.0);
  EXPECT_TRUE(back.partial);
  EXPECT_EQ(back.note, "PeerOffline");
  EXPECT_EQ(r.to_text().find("throughput_bps=480.0\n") != std::string::npos, true);
}
