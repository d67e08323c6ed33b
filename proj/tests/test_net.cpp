// Copyright 2026 The kerbpk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <thread>

#include "kerbpk/net.hpp"
#include "kerbpk/services.hpp"
#include "support.hpp"

namespace kerbpk::testing {
namespace {

using net::Fault;

// Replies with the payload reversed; "close" closes after replying.
class Mirror final : public net::Session {
 public:
  net::SessionOutput on_frame(const Bytes& payload) override {
    Bytes r(payload.rbegin(), payload.rend());
    return {{r}, payload == to_bytes("close")};
  }
};

net::SessionFactory mirror() {
  return [](const std::string&) { return std::make_unique<Mirror>(); };
}

Bytes reversed(const std::string& s) {
  Bytes b = to_bytes(s);
  return Bytes(b.rbegin(), b.rend());
}

TEST(Frames, PrefixIsBigEndianLength) {
  Bytes f = net::encode_frame(to_bytes("abc"));
  EXPECT_EQ(f, (Bytes{0, 0, 0, 3, 'a', 'b', 'c'}));
  EXPECT_EQ(net::decode_frame(f), to_bytes("abc"));
  EXPECT_EQ(net::decode_frame(net::encode_frame(Bytes{})), Bytes{});
}

TEST(Frames, Errors) {
  EXPECT_KERB_ERROR(net::decode_frame(Bytes{0, 0, 1}), ErrorCode::Truncated);
  EXPECT_KERB_ERROR(net::decode_frame(Bytes{0, 0, 0, 2, 1}), ErrorCode::Truncated);
  EXPECT_KERB_ERROR(net::decode_frame(Bytes{0, 0, 0, 1, 1, 2}), ErrorCode::TrailingGarbage);
  EXPECT_KERB_ERROR(net::decode_frame(Bytes{0, 0x10, 0, 1}), ErrorCode::FrameTooLarge);
  EXPECT_NO_THROW(net::encode_frame(Bytes(net::kMaxFrame)));
  EXPECT_KERB_ERROR(net::encode_frame(Bytes(net::kMaxFrame + 1)), ErrorCode::FrameTooLarge);
}

TEST(Frames, RoundTripRandomPayloads) {
  std::mt19937_64 g(12);
  for (int i = 0; i < 1000; ++i) {
    Bytes p = random_bytes(g, 300);
    ASSERT_EQ(net::decode_frame(net::encode_frame(p)), p);
  }
}

TEST(Faults, ParseEveryDirective) {
  EXPECT_EQ(net::parse_fault("DropNth(3)"), (Fault{Fault::Kind::Drop, 3}));
  EXPECT_EQ(net::parse_fault("DuplicateNth(2)"), (Fault{Fault::Kind::Duplicate, 2}));
  EXPECT_EQ(net::parse_fault("SwapNth(1,2)"), (Fault{Fault::Kind::Swap, 1, 2}));
  EXPECT_EQ(net::parse_fault("FlipBit(1,10,3)"), (Fault{Fault::Kind::FlipBit, 1, 0, 10, 3}));
  EXPECT_EQ(net::parse_fault("DelayNth(4,5)"), (Fault{Fault::Kind::Delay, 4, 0, 0, 0, 5}));
  for (const char* s : {"DropNth(3)", "DuplicateNth(2)", "SwapNth(1,2)", "FlipBit(1,10,3)",
                        "DelayNth(4,5)"}) {
    EXPECT_EQ(net::parse_fault(s).to_string(), s);
  }
}

TEST(Faults, RejectMalformed) {
  for (const char* s : {"", "DropNth", "DropNth()", "DropNth(0)", "DropNth(x)", "Drop(1)",
                        "SwapNth(1)", "FlipBit(1,2,8)", "FlipBit(1,2)", "DelayNth(1)",
                        "DropNth(1", "DropNth(1,2)"}) {
    EXPECT_KERB_ERROR(net::parse_fault(s), ErrorCode::ScenarioParseError) << s;
  }
}

TEST(SimNetwork, DeliversAndRecordsTranscript) {
  net::SimNetwork sim;
  sim.listen({"mirror", net::Role::AppServer}, mirror());
  auto c = sim.connect("mirror", "client");
  c->send(to_bytes("hello"));
  EXPECT_EQ(c->recv(4), reversed("hello"));
  auto t = sim.transcript().entries();
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].index, 1u);
  EXPECT_EQ(t[1].index, 2u);
  EXPECT_EQ(t[0].to, "mirror");
  EXPECT_EQ(t[1].from, "mirror");
  EXPECT_EQ(t[0].payload, to_bytes("hello"));
  EXPECT_FALSE(t[0].internal);
}

TEST(SimNetwork, UnknownAddressIsConnectionClosed) {
  net::SimNetwork sim;
  EXPECT_KERB_ERROR(sim.connect("nowhere", "client"), ErrorCode::ConnectionClosed);
}

TEST(SimNetwork, ClosedByServer) {
  net::SimNetwork sim;
  sim.listen({"mirror", net::Role::AppServer}, mirror());
  auto c = sim.connect("mirror", "client");
  c->send(to_bytes("close"));
  EXPECT_EQ(c->recv(4), reversed("close"));
  EXPECT_KERB_ERROR(c->recv(4), ErrorCode::ConnectionClosed);
  EXPECT_KERB_ERROR(c->send(to_bytes("x")), ErrorCode::ConnectionClosed);
}

TEST(SimNetwork, DropTimesOut) {
  net::SimNetwork sim({net::parse_fault("DropNth(1)")});
  sim.listen({"mirror", net::Role::AppServer}, mirror());
  auto c = sim.connect("mirror", "client");
  c->send(to_bytes("lost"));
  EXPECT_KERB_ERROR(c->recv(5), ErrorCode::Timeout);
  EXPECT_EQ(sim.ticks(), 5u);
  EXPECT_TRUE(sim.transcript().entries()[0].dropped);
}

TEST(SimNetwork, DuplicateDeliversTwice) {
  net::SimNetwork sim({net::parse_fault("DuplicateNth(1)")});
  sim.listen({"mirror", net::Role::AppServer}, mirror());
  auto c = sim.connect("mirror", "client");
  c->send(to_bytes("ab"));
  EXPECT_EQ(c->recv(1), reversed("ab"));
  EXPECT_EQ(c->recv(1), reversed("ab"));
}

TEST(SimNetwork, SwapReordersDelivery) {
  // Frame 1 is held until frame 3 (the second request) is delivered.
  net::SimNetwork sim({net::parse_fault("SwapNth(1,3)")});
  sim.listen({"mirror", net::Role::AppServer}, mirror());
  auto c = sim.connect("mirror", "client");
  c->send(to_bytes("first"));
  c->send(to_bytes("second"));
  EXPECT_EQ(c->recv(1), reversed("second"));
  EXPECT_EQ(c->recv(1), reversed("first"));
}

TEST(SimNetwork, DelayReleasesAfterTicks) {
  net::SimNetwork sim({net::parse_fault("DelayNth(1,3)")});
  sim.listen({"mirror", net::Role::AppServer}, mirror());
  auto c = sim.connect("mirror", "client");
  c->send(to_bytes("slow"));
  EXPECT_KERB_ERROR(c->recv(2), ErrorCode::Timeout);
  EXPECT_EQ(c->recv(5), reversed("slow"));
}

TEST(SimNetwork, FlipBitAltersTheNamedBit) {
  net::SimNetwork sim({net::parse_fault("FlipBit(1,1,0)")});
  sim.listen({"mirror", net::Role::AppServer}, mirror());
  auto c = sim.connect("mirror", "client");
  c->send(to_bytes("aaa"));
  EXPECT_EQ(c->recv(1), to_bytes("a`a"));
  EXPECT_EQ(sim.transcript().entries()[0].payload, to_bytes("a`a"));
}

TEST(SimNetwork, BackendLinksAreInternal) {
  net::SimNetwork sim;
  sim.listen({"store", net::Role::Backend}, mirror());
  auto c = sim.connect("store", "gateway");
  c->send(to_bytes("x"));
  c->recv(1);
  for (const auto& e : sim.transcript().entries()) EXPECT_TRUE(e.internal);
}

// A flipped bit in the AS request reaches the KDC as an integrity or decode
// error, never a ticket.
TEST(SimNetwork, FlippedAsRequestFailsThroughTheStack) {
  Realm realm("toy");
  auto id = realm.add_user("alice", "pw");
  net::SimNetwork sim({net::parse_fault("FlipBit(1,10,3)")});
  sim.listen({"kdc-as", net::Role::KdcAs},
             svc::make_kdc_as_service(realm.kdc, [] { return kNow; }));
  client::ClientAgent agent(id.principal, *realm.provider, realm.rng);
  ErrorCode e = error_of([&] { agent.kinit(id, svc::make_kdc_exchange(sim, "kdc-as", "client"), kNow); });
  EXPECT_NE(e, ErrorCode::Ok);
  EXPECT_FALSE(agent.cache().tgt);
  EXPECT_EQ(realm.kdc.tickets_issued(), 0u);
}

TEST(HostPort, Split) {
  EXPECT_EQ(net::split_host_port("127.0.0.1:8801"), (std::pair<std::string, std::uint16_t>{"127.0.0.1", 8801}));
  EXPECT_KERB_ERROR(net::split_host_port("localhost"), ErrorCode::UsageError);
  EXPECT_KERB_ERROR(net::split_host_port("h:99999"), ErrorCode::UsageError);
  EXPECT_KERB_ERROR(net::split_host_port("h:"), ErrorCode::UsageError);
}

TEST(TcpNetwork, RoundTripOnLoopback) {
  net::TcpNetwork tcp;
  std::string addr = tcp.listen({"127.0.0.1:0", net::Role::AppServer}, mirror());
  EXPECT_NE(net::split_host_port(addr).second, 0);
  auto c = tcp.connect(addr, "client");
  c->send(to_bytes("over tcp"));
  EXPECT_EQ(c->recv(2000), reversed("over tcp"));
  c->send(to_bytes("close"));
  EXPECT_EQ(c->recv(2000), reversed("close"));
  EXPECT_KERB_ERROR(c->recv(2000), ErrorCode::ConnectionClosed);
  EXPECT_GE(tcp.transcript().size(), 4u);
  tcp.stop();
}

TEST(TcpNetwork, ConnectionRefused) {
  net::TcpNetwork tcp;
  std::string addr = tcp.listen({"127.0.0.1:0", net::Role::AppServer}, mirror());
  tcp.stop();
  EXPECT_KERB_ERROR(tcp.connect(addr, "client"), ErrorCode::ConnectionClosed);
}

TEST(TcpNetwork, ConcurrentClients) {
  net::TcpNetwork tcp;
  std::string addr = tcp.listen({"127.0.0.1:0", net::Role::AppServer}, mirror());
  std::atomic<int> good{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      auto c = tcp.connect(addr, "client" + std::to_string(t));
      for (int i = 0; i < 20; ++i) {
        std::string m = std::to_string(t) + ":" + std::to_string(i);
        c->send(to_bytes(m));
        if (c->recv(5000) == reversed(m)) ++good;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(good.load(), 160);
  tcp.stop();
}

}  // namespace
}  // namespace kerbpk::testing
