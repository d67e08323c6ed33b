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

#pragma once

// Server sessions for every endpoint role, and the client side of a
// protected application connection.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kerbpk/client.hpp"
#include "kerbpk/kdc.hpp"
#include "kerbpk/net.hpp"
#include "kerbpk/secure_context.hpp"

namespace kerbpk::svc {

using Clock = std::function<Timestamp()>;

// Wall-clock seconds.
Timestamp system_now();

// Server-side detections, in the order they happened. Internally
// synchronized.
class EventSink {
 public:
  void record(std::string event);
  std::vector<std::string> events() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> events_;
};

struct AppRequest {
  static constexpr auto kSchema = codec::SchemaId::AppRequest;
  std::string method = "GET";
  std::string resource;
  Bytes body;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.method);
    a(2, s.resource);
    a(3, s.body);
  }
  friend bool operator==(const AppRequest&, const AppRequest&) = default;
};

enum class ServedFrom : std::uint8_t { Backend = 1, Cache = 2 };

struct AppResponse {
  static constexpr auto kSchema = codec::SchemaId::AppResponse;
  std::uint16_t status = 200;
  Bytes body;
  ServedFrom served_from = ServedFrom::Backend;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.status);
    a(2, s.body);
    a(3, s.served_from);
  }
  friend bool operator==(const AppResponse&, const AppResponse&) = default;
};

const char* served_from_name(ServedFrom s);

using AppHandler = std::function<AppResponse(const AppRequest&)>;
// Answers a request that arrived outside any security context. Throwing an
// Error sends it as an ErrorReply and closes the connection; nullopt closes
// without a reply.
using PlainHandler = std::function<std::optional<AppResponse>(const AppRequest&)>;

// 200 with "<method> <resource>" followed by the request body.
AppHandler echo_handler();

net::SessionFactory make_kdc_as_service(kdc::Kdc& kdc, Clock clock, EventSink* events = nullptr);
net::SessionFactory make_kdc_tgs_service(kdc::Kdc& kdc, Clock clock, EventSink* events = nullptr);
// AS and TGS behind one listener, dispatched on the request schema.
net::SessionFactory make_kdc_service(kdc::Kdc& kdc, Clock clock, EventSink* events = nullptr);

struct ProtectedServiceConfig {
  std::string name;  // label used in events
  const crypto::CryptoProvider& provider;
  gss::ContextCredential credential;
  crypto::Rng& rng;  // shared by every session; must tolerate concurrent use
  Clock clock;
  std::uint64_t clock_skew = 300;
  bool enforce_address = false;
  AppHandler handler;
  PlainHandler plain;  // unset: plaintext requests close the connection
  EventSink* events = nullptr;
};

// Per connection: accept the handshake, then loop unwrap -> handler ->
// wrap. Any handshake or channel error sends an ErrorReply and closes.
// Sessions share one authenticator replay cache.
net::SessionFactory make_protected_service(std::shared_ptr<ProtectedServiceConfig> config);

// Plaintext Frame+AppRequest server for internal backends.
net::SessionFactory make_backend_service(AppHandler handler,
                                         std::shared_ptr<std::atomic<std::uint64_t>> hits = {});

// One connection per exchange against a KDC endpoint.
client::KdcExchange make_kdc_exchange(net::Network& network, std::string address,
                                      std::string from);

// Sends one plaintext request and waits for the response.
AppResponse plain_fetch(net::Network& network, const std::string& address,
                        const std::string& from, const AppRequest& request);

struct ServiceClientConfig {
  std::string tgs_address;
  std::string server_address;
  std::string from = "client";
};

// Client end of a protected connection. Keeps one context per server and
// reuses it across fetches until the service ticket expires.
class ServiceClient {
 public:
  ServiceClient(client::ClientAgent& agent, net::Network& network,
                const crypto::CryptoProvider& provider, crypto::Rng& rng,
                gss::MechanismName target, ServiceClientConfig config);

  // Ticket (if needed), handshake, wrapped request, unwrapped response.
  // Errors carry the failing stage: TGS, handshake, or channel.
  AppResponse fetch(const AppRequest& request, Timestamp now);

  // Establishes a fresh context, discarding any existing one. Without
  // `refresh_ticket` the cached service ticket is presented as is, expired
  // or not.
  void establish(Timestamp now, bool refresh_ticket = true);
  bool live(Timestamp now) const;
  void reset();

  std::uint64_t handshake_legs() const { return legs_; }
  std::uint64_t handshakes() const { return handshakes_; }
  gss::SecurityContext* context() { return ctx_.get(); }
  net::Connection* connection() { return conn_.get(); }

  // Most recent tokens this client put on the wire.
  const Bytes& last_leg1() const { return last_leg1_; }
  const Bytes& last_wrap() const { return last_wrap_; }

  // Sends a raw payload on the current connection and returns the reply.
  Bytes send_raw(const Bytes& payload);

 private:
  client::ClientAgent& agent_;
  net::Network& network_;
  const crypto::CryptoProvider& provider_;
  crypto::Rng& rng_;
  gss::MechanismName target_;
  ServiceClientConfig config_;

  std::unique_ptr<gss::SecurityContext> ctx_;
  std::unique_ptr<net::Connection> conn_;
  Timestamp ticket_till_ = 0;
  std::uint64_t legs_ = 0;
  std::uint64_t handshakes_ = 0;
  Bytes last_leg1_;
  Bytes last_wrap_;
};

}  // namespace kerbpk::svc
