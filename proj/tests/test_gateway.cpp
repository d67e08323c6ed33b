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

#include "kerbpk/gateway.hpp"
#include "kerbpk/services.hpp"
#include "support.hpp"

namespace kerbpk::testing {
namespace {

using gateway::PolicyAction;
using svc::AppRequest;
using svc::AppResponse;
using svc::ServedFrom;

TEST(Policy, ParseAndFirstMatchWins) {
  auto p = gateway::parse_policy(
      "# comment\n"
      "bypass /public/\n"
      "protect /public/admin  # shadowed\n"
      "\n"
      "cache on 32\n");
  ASSERT_EQ(p.rules.size(), 2u);
  EXPECT_EQ(p.match("/public/admin/x"), PolicyAction::Bypass);
  EXPECT_EQ(p.match("/secure/x"), PolicyAction::Protect);
  EXPECT_EQ(p.match(""), PolicyAction::Protect);
  EXPECT_TRUE(p.cache_enabled);
  EXPECT_EQ(p.cache_capacity, 32u);
  EXPECT_FALSE(gateway::parse_policy("cache off").cache_enabled);
  EXPECT_EQ(gateway::parse_policy("").cache_capacity, 128u);
}

TEST(Policy, Errors) {
  for (const char* bad : {"allow /", "protect", "protect a b", "cache", "cache maybe",
                          "cache on x", "cache on 0", "cache on 1 2"}) {
    EXPECT_KERB_ERROR(gateway::parse_policy(bad), ErrorCode::PolicyParseError) << bad;
  }
  EXPECT_KERB_ERROR(gateway::load_policy("/nonexistent/policy"), ErrorCode::IoError);
}

TEST(Backends, ParseAndLookup) {
  auto t = gateway::parse_backends("/secure/ 127.0.0.1:9000\n/ web  # default\n");
  EXPECT_EQ(t.lookup("/secure/a"), "127.0.0.1:9000");
  EXPECT_EQ(t.lookup("/other"), "web");
  EXPECT_EQ(gateway::parse_backends("").lookup("/x"), std::nullopt);
  EXPECT_KERB_ERROR(gateway::parse_backends("/only-prefix"), ErrorCode::PolicyParseError);
}

AppResponse body_response(const std::string& s) {
  AppResponse r;
  r.body = to_bytes(s);
  return r;
}

TEST(ResponseCache, LeastRecentlyUsedIsEvicted) {
  gateway::ResponseCache c(2);
  c.put("/a", body_response("a"));
  c.put("/b", body_response("b"));
  ASSERT_TRUE(c.get("/a"));
  c.put("/c", body_response("c"));
  EXPECT_TRUE(c.get("/a"));
  EXPECT_FALSE(c.get("/b"));
  EXPECT_TRUE(c.get("/c"));
  EXPECT_EQ(c.size(), 2u);
  c.put("/a", body_response("a2"));
  EXPECT_EQ(c.get("/a")->body, to_bytes("a2"));
  EXPECT_EQ(c.size(), 2u);
}

// Random operation sequences against a list-based reference LRU.
TEST(ResponseCache, MatchesReferenceModel) {
  std::mt19937_64 g(17);
  for (int round = 0; round < 100; ++round) {
    std::size_t cap = 1 + g() % 5;
    gateway::ResponseCache c(cap);
    std::vector<std::pair<std::string, std::string>> model;  // front = most recent
    for (int op = 0; op < 200; ++op) {
      std::string key = "/" + std::to_string(g() % 8);
      auto it = std::find_if(model.begin(), model.end(), [&](auto& e) { return e.first == key; });
      if (g() % 2) {
        std::string value = std::to_string(op);
        c.put(key, body_response(value));
        if (it != model.end()) model.erase(it);
        model.insert(model.begin(), {key, value});
        if (model.size() > cap) model.pop_back();
      } else {
        auto got = c.get(key);
        ASSERT_EQ(got.has_value(), it != model.end());
        if (got) {
          ASSERT_EQ(got->body, to_bytes(it->second));
          auto e = *it;
          model.erase(it);
          model.insert(model.begin(), e);
        }
      }
      ASSERT_EQ(c.size(), model.size());
    }
  }
}

struct BackendFixture {
  net::SimNetwork sim;
  std::shared_ptr<std::atomic<std::uint64_t>> hits = std::make_shared<std::atomic<std::uint64_t>>(0);
  BackendFixture() {
    sim.listen({"store", net::Role::Backend}, svc::make_backend_service(svc::echo_handler(), hits));
  }
};

TEST(Gateway, CachesIdenticalGets) {
  BackendFixture f;
  gateway::Gateway gw(gateway::parse_policy("protect /\ncache on 16"),
                      gateway::parse_backends("/ store"), f.sim);
  for (int i = 0; i < 10; ++i) {
    auto r = gw.handle({"GET", "/secure/report", {}});
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.body, to_bytes("GET /secure/report"));
    EXPECT_EQ(r.served_from, i == 0 ? ServedFrom::Backend : ServedFrom::Cache);
  }
  EXPECT_EQ(gw.backend_hits(), 1u);
  EXPECT_EQ(gw.cache_hits(), 9u);
  EXPECT_EQ(f.hits->load(), 1u);
}

TEST(Gateway, NoCacheForwardsEverything) {
  BackendFixture f;
  gateway::Gateway gw(gateway::parse_policy("protect /\ncache off"),
                      gateway::parse_backends("/ store"), f.sim);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(gw.handle({"GET", "/x", {}}).served_from, ServedFrom::Backend);
  EXPECT_EQ(gw.backend_hits(), 10u);
  EXPECT_EQ(gw.cache_hits(), 0u);
}

TEST(Gateway, OnlyGetIsCached) {
  BackendFixture f;
  gateway::Gateway gw(gateway::parse_policy("protect /"), gateway::parse_backends("/ store"), f.sim);
  gw.handle({"POST", "/x", to_bytes("1")});
  gw.handle({"POST", "/x", to_bytes("1")});
  EXPECT_EQ(gw.backend_hits(), 2u);
}

TEST(Gateway, UnroutableAndUnreachableAre502) {
  BackendFixture f;
  gateway::Gateway gw(gateway::parse_policy("protect /"),
                      gateway::parse_backends("/dead/ nowhere\n/live/ store"), f.sim);
  auto r = gw.handle({"GET", "/dead/x", {}});
  EXPECT_EQ(r.status, 502);
  EXPECT_TRUE(contains_subsequence(r.body, to_bytes("BackendUnreachable")));
  EXPECT_EQ(gw.handle({"GET", "/unrouted", {}}).status, 502);
  EXPECT_EQ(gw.unreachable(), 2u);
  // Failures are not cached.
  EXPECT_EQ(gw.handle({"GET", "/dead/x", {}}).status, 502);
  EXPECT_EQ(gw.cache_hits(), 0u);
}

TEST(Gateway, PlainRequestsOnlyReachBypass) {
  BackendFixture f;
  gateway::Gateway gw(gateway::parse_policy("bypass /public/\nprotect /"),
                      gateway::parse_backends("/ store"), f.sim);
  auto r = gw.handle_plain({"GET", "/public/page", {}});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_KERB_ERROR(gw.handle_plain({"GET", "/secure/page", {}}), ErrorCode::AccessDenied);
  EXPECT_EQ(f.hits->load(), 1u);
}

// A realm, a gateway behind a protected service, and KDC endpoints, all on
// one network.
struct Deployment {
  explicit Deployment(net::Network& net, const std::string& provider, Timestamp now)
      : network(net), realm(provider), now(now) {
    gw_record = realm.add_service("http/gw.example");
    backend_hits = std::make_shared<std::atomic<std::uint64_t>>(0);
    backend_addr = network.listen({listen_addr("store"), net::Role::Backend},
                                  svc::make_backend_service(svc::echo_handler(), backend_hits));
    gw = std::make_unique<gateway::Gateway>(gateway::parse_policy("bypass /public/\nprotect /"),
                                            gateway::parse_backends("/ " + backend_addr), network);
    auto clock = [this] { return this->now; };
    tgs_addr = network.listen({listen_addr("kdc-tgs"), net::Role::KdcTgs},
                              svc::make_kdc_tgs_service(realm.kdc, clock));
    auto cfg = std::make_shared<svc::ProtectedServiceConfig>(svc::ProtectedServiceConfig{
        "gateway", *realm.provider,
        gss::acquire_credential(host_service("http@gw.example"), gss::CredUsage::Accept,
                                gw_record.long_term_key),
        server_rng, clock, 300, false, {}, {}, nullptr});
    gw_addr = network.listen({listen_addr("gateway"), net::Role::Gateway},
                             gateway::make_gateway_service(*gw, cfg));
  }

  std::string listen_addr(const std::string& name) const {
    return dynamic_cast<net::TcpNetwork*>(&network) ? "127.0.0.1:0" : name;
  }

  net::Network& network;
  Realm realm;
  Timestamp now;
  crypto::SharedRng server_rng{std::make_unique<crypto::SystemRng>()};
  kdc::PrincipalRecord gw_record;
  std::shared_ptr<std::atomic<std::uint64_t>> backend_hits;
  std::unique_ptr<gateway::Gateway> gw;
  std::string backend_addr, tgs_addr, gw_addr;
};

TEST(ProtectedGateway, FetchThroughTheSecureChannel) {
  net::SimNetwork sim;
  Deployment d(sim, "toy", kNow);
  auto id = d.realm.add_user("alice", "pw");
  client::ClientAgent agent(id.principal, *d.realm.provider, d.realm.rng);
  agent.kinit(id, d.realm.as_endpoint(), kNow);
  svc::ServiceClient sc(agent, sim, *d.realm.provider, d.realm.rng, host_service("http@gw.example"),
                        {d.tgs_addr, d.gw_addr});
  for (int i = 0; i < 3; ++i) {
    auto r = sc.fetch({"GET", "/secure/doc", {}}, kNow);
    EXPECT_EQ(r.body, to_bytes("GET /secure/doc"));
    EXPECT_EQ(r.served_from, i == 0 ? ServedFrom::Backend : ServedFrom::Cache);
  }
  EXPECT_EQ(sc.handshakes(), 1u);
  EXPECT_EQ(sc.handshake_legs(), 2u);
  EXPECT_EQ(agent.kdc_requests(), 2u);
  // Plaintext on the gateway port.
  EXPECT_EQ(svc::plain_fetch(sim, d.gw_addr, "anon", {"GET", "/public/x", {}}).status, 200);
  EXPECT_KERB_ERROR(svc::plain_fetch(sim, d.gw_addr, "anon", {"GET", "/secure/doc", {}}),
                    ErrorCode::AccessDenied);
}

TEST(ProtectedGateway, UnexpectedFirstFrameIsADecodeError) {
  net::SimNetwork sim;
  Deployment d(sim, "toy", kNow);
  auto conn = sim.connect(d.gw_addr, "anon");
  conn->send(Bytes{0xee, 0, 0, 0, 0});
  EXPECT_KERB_ERROR(decode_reply<gss::ContextToken>(conn->recv(4)), ErrorCode::SchemaMismatch);
  EXPECT_KERB_ERROR(conn->recv(4), ErrorCode::ConnectionClosed);
}

TEST(ProtectedGateway, ConcurrentClientsOverTcp) {
  net::TcpNetwork tcp;
  Deployment d(tcp, "standard", svc::system_now());
  constexpr int kClients = 6;
  std::vector<client::ClientIdentity> ids;
  for (int i = 0; i < kClients; ++i) ids.push_back(d.realm.add_user("user" + std::to_string(i), "pw"));
  std::vector<std::unique_ptr<client::ClientAgent>> agents;
  std::vector<std::unique_ptr<crypto::SeededRng>> rngs;
  for (int i = 0; i < kClients; ++i) {
    rngs.push_back(std::make_unique<crypto::SeededRng>(100 + i));
    agents.push_back(std::make_unique<client::ClientAgent>(ids[i].principal, *d.realm.provider, *rngs[i]));
    agents[i]->kinit(ids[i], d.realm.as_endpoint(d.now), d.now);
  }
  std::atomic<int> good{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < kClients; ++i) {
    threads.emplace_back([&, i] {
      svc::ServiceClient sc(*agents[i], tcp, *d.realm.provider, *rngs[i],
                            host_service("http@gw.example"), {d.tgs_addr, d.gw_addr});
      for (int k = 0; k < 5; ++k) {
        std::string res = "/secure/" + std::to_string(i) + "/" + std::to_string(k % 2);
        if (sc.fetch({"GET", res, {}}, d.now).body == to_bytes("GET " + res)) ++good;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(good.load(), kClients * 5);
  EXPECT_EQ(d.gw->backend_hits(), static_cast<std::uint64_t>(kClients * 2));
  EXPECT_EQ(d.gw->cache_hits(), static_cast<std::uint64_t>(kClients * 3));
  tcp.stop();
}

}  // namespace
}  // namespace kerbpk::testing
