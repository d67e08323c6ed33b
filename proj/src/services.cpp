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

#include "kerbpk/services.hpp"

#include <chrono>

namespace kerbpk::svc {

Timestamp system_now() {
  return static_cast<Timestamp>(std::chrono::duration_cast<std::chrono::seconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count());
}

void EventSink::record(std::string event) {
  std::lock_guard lock(mu_);
  events_.push_back(std::move(event));
}

std::vector<std::string> EventSink::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::size_t EventSink::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

const char* served_from_name(ServedFrom s) {
  return s == ServedFrom::Cache ? "cache" : "backend";
}

AppHandler echo_handler() {
  return [](const AppRequest& req) {
    AppResponse resp;
    resp.status = 200;
    resp.body = to_bytes(req.method + " " + req.resource);
    if (!req.body.empty()) {
      resp.body.push_back('\n');
      resp.body.insert(resp.body.end(), req.body.begin(), req.body.end());
    }
    return resp;
  };
}

namespace {

std::optional<std::uint8_t> try_peek(const Bytes& payload) {
  try {
    return codec::peek_schema(payload);
  } catch (const Error&) {
    return std::nullopt;
  }
}

void note(EventSink* events, const std::string& who, const Error& e) {
  if (events) events->record(who + " " + std::string(e.name()));
}

enum class KdcMode { As, Tgs, Both };

class KdcSession final : public net::Session {
 public:
  KdcSession(kdc::Kdc& kdc, Clock clock, std::string peer, EventSink* events, KdcMode mode)
      : kdc_(kdc), clock_(std::move(clock)), peer_(std::move(peer)), events_(events),
        mode_(mode) {}

  net::SessionOutput on_frame(const Bytes& payload) override {
    bool as = mode_ == KdcMode::As;
    if (mode_ == KdcMode::Both) {
      as = try_peek(payload) == static_cast<std::uint8_t>(codec::SchemaId::AsRequest);
    }
    std::optional<Error> err;
    Bytes reply = as ? kdc_.serve_as(payload, clock_(), host_of(peer_), &err)
                     : kdc_.serve_tgs(payload, clock_(), host_of(peer_), &err);
    if (err) note(events_, as ? "kdc-as" : "kdc-tgs", *err);
    return {{std::move(reply)}, false};
  }

 private:
  static std::string host_of(const std::string& peer) { return peer.substr(0, peer.rfind(':')); }

  kdc::Kdc& kdc_;
  Clock clock_;
  std::string peer_;
  EventSink* events_;
  KdcMode mode_;
};

struct ProtectedShared {
  ProtectedShared(std::shared_ptr<ProtectedServiceConfig> c, std::uint64_t window)
      : config(std::move(c)), replay_cache(window) {}
  std::shared_ptr<ProtectedServiceConfig> config;
  AuthenticatorReplayCache replay_cache;
};

class ProtectedSession final : public net::Session {
 public:
  ProtectedSession(std::shared_ptr<ProtectedShared> shared, std::string peer)
      : shared_(std::move(shared)), peer_(std::move(peer)), ctx_(shared_->config->provider) {}

  net::SessionOutput on_frame(const Bytes& payload) override {
    const auto& cfg = *shared_->config;
    if (ctx_.state == gss::ContextState::Complete) return on_wrapped(payload);

    auto refuse = [&](const Error& e) -> net::SessionOutput {
      note(cfg.events, cfg.name, e);
      return {{encode_error(e)}, true};
    };
    auto schema = try_peek(payload);
    if (schema == static_cast<std::uint8_t>(codec::SchemaId::AppRequest)) {
      try {
        auto req = codec::decode<AppRequest>(payload);
        // A well-formed plaintext request without a plain handler: close silently.
        if (!cfg.plain) return {{}, true};
        auto resp = cfg.plain(req);
        if (!resp) return {{}, true};
        return {{codec::encode(*resp)}, false};
      } catch (const Error& e) {
        return refuse(e);
      }
    }
    if (schema != static_cast<std::uint8_t>(codec::SchemaId::ContextToken)) {
      return refuse(Error(ErrorCode::SchemaMismatch, "expected a context token or request"));
    }
    if (ctx_.state != gss::ContextState::Initial) return {{}, true};
    try {
      gss::AcceptConfig accept{cfg.clock_skew, cfg.enforce_address,
                               peer_.substr(0, peer_.rfind(':'))};
      auto step = gss::accept_security_context(ctx_, cfg.credential, payload, cfg.clock(),
                                               cfg.rng, shared_->replay_cache, accept);
      net::SessionOutput out;
      if (step.output_token) out.replies.push_back(std::move(*step.output_token));
      return out;
    } catch (const Error& e) {
      note(cfg.events, cfg.name, e);
      return {{encode_error(e)}, true};
    }
  }

 private:
  net::SessionOutput on_wrapped(const Bytes& payload) {
    const auto& cfg = *shared_->config;
    try {
      Bytes plain;
      try {
        plain = gss::unwrap(ctx_, codec::decode<gss::WrapToken>(payload));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::WrapIntegrityError || e.code() == ErrorCode::ReplayDetected ||
            e.code() == ErrorCode::OutOfSequence || e.code() == ErrorCode::WrongDirection) {
          throw;
        }
        fail(ErrorCode::WrapIntegrityError, e.what());
      }
      AppRequest req = codec::decode<AppRequest>(plain);
      AppResponse resp = cfg.handler(req);
      return {{codec::encode(gss::wrap(ctx_, codec::encode(resp)))}, false};
    } catch (const Error& e) {
      note(cfg.events, cfg.name, e);
      return {{encode_error(e)}, true};
    }
  }

  std::shared_ptr<ProtectedShared> shared_;
  std::string peer_;
  gss::SecurityContext ctx_;
};

class BackendSession final : public net::Session {
 public:
  BackendSession(AppHandler handler, std::shared_ptr<std::atomic<std::uint64_t>> hits)
      : handler_(std::move(handler)), hits_(std::move(hits)) {}

  net::SessionOutput on_frame(const Bytes& payload) override {
    try {
      auto req = codec::decode<AppRequest>(payload);
      if (hits_) ++*hits_;
      return {{codec::encode(handler_(req))}, false};
    } catch (const Error& e) {
      return {{encode_error(e)}, true};
    }
  }

 private:
  AppHandler handler_;
  std::shared_ptr<std::atomic<std::uint64_t>> hits_;
};

}  // namespace

net::SessionFactory make_kdc_as_service(kdc::Kdc& kdc, Clock clock, EventSink* events) {
  return [&kdc, clock, events](const std::string& peer) {
    return std::make_unique<KdcSession>(kdc, clock, peer, events, KdcMode::As);
  };
}

net::SessionFactory make_kdc_tgs_service(kdc::Kdc& kdc, Clock clock, EventSink* events) {
  return [&kdc, clock, events](const std::string& peer) {
    return std::make_unique<KdcSession>(kdc, clock, peer, events, KdcMode::Tgs);
  };
}

net::SessionFactory make_kdc_service(kdc::Kdc& kdc, Clock clock, EventSink* events) {
  return [&kdc, clock, events](const std::string& peer) {
    return std::make_unique<KdcSession>(kdc, clock, peer, events, KdcMode::Both);
  };
}

net::SessionFactory make_protected_service(std::shared_ptr<ProtectedServiceConfig> config) {
  auto window = std::max<std::uint64_t>(2 * config->clock_skew, 1);
  auto shared = std::make_shared<ProtectedShared>(std::move(config), window);
  return [shared](const std::string& peer) {
    return std::make_unique<ProtectedSession>(shared, peer);
  };
}

net::SessionFactory make_backend_service(AppHandler handler,
                                         std::shared_ptr<std::atomic<std::uint64_t>> hits) {
  return [handler = std::move(handler), hits](const std::string&) {
    return std::make_unique<BackendSession>(handler, hits);
  };
}

client::KdcExchange make_kdc_exchange(net::Network& network, std::string address,
                                      std::string from) {
  return [&network, address = std::move(address), from = std::move(from)](const Bytes& req) {
    auto conn = network.connect(address, from);
    conn->send(req);
    Bytes reply = conn->recv(network.default_timeout());
    conn->close();
    return reply;
  };
}

AppResponse plain_fetch(net::Network& network, const std::string& address,
                        const std::string& from, const AppRequest& request) {
  auto conn = network.connect(address, from);
  conn->send(codec::encode(request));
  Bytes reply = conn->recv(network.default_timeout());
  conn->close();
  return decode_reply<AppResponse>(reply);
}

ServiceClient::ServiceClient(client::ClientAgent& agent, net::Network& network,
                             const crypto::CryptoProvider& provider, crypto::Rng& rng,
                             gss::MechanismName target, ServiceClientConfig config)
    : agent_(agent), network_(network), provider_(provider), rng_(rng),
      target_(std::move(target)), config_(std::move(config)) {}

bool ServiceClient::live(Timestamp now) const {
  return ctx_ && conn_ && ctx_->state == gss::ContextState::Complete &&
         ticket_till_ + agent_.config().clock_skew >= now;
}

void ServiceClient::reset() {
  if (conn_) conn_->close();
  conn_.reset();
  ctx_.reset();
}

void ServiceClient::establish(Timestamp now, bool refresh_ticket) {
  reset();
  auto tgs = make_kdc_exchange(network_, config_.tgs_address, config_.from);
  gss::TicketSource tickets = [&](const std::string& service, Timestamp t) {
    auto sc = agent_.get_service_ticket(service, agent_.service_validity(t), t, tgs);
    ticket_till_ = sc.validity.till;
    return sc;
  };
  if (!refresh_ticket) {
    tickets = nullptr;
    if (const auto* hit = agent_.cache().find_service(target_.principal().name)) {
      ticket_till_ = hit->validity.till;
    }
  }
  auto cred = gss::acquire_credential(
      gss::canonicalize_name(gss::InternalName{gss::NameType::PrincipalName,
                                               agent_.principal().name, {},
                                               agent_.principal().realm},
                             gss::Mechanism::KerberosLike, agent_.principal().realm),
      gss::CredUsage::Initiate, &agent_.cache());

  auto ctx = std::make_unique<gss::SecurityContext>(provider_);
  auto step = gss::init_security_context(*ctx, cred, target_, gss::ReqFlags::all(), std::nullopt,
                                         now, rng_, tickets);
  ++handshakes_;
  try {
    conn_ = network_.connect(config_.server_address, config_.from);
    for (int leg = 0; step.status != gss::Status::Complete; leg += 2) {
      if (leg >= gss::kLegBudget) fail(ErrorCode::HandshakeExceededLegBudget);
      if (!step.output_token) fail(ErrorCode::StateError, "no token to send");
      if (leg == 0) last_leg1_ = *step.output_token;
      conn_->send(*step.output_token);
      ++legs_;
      Bytes reply = conn_->recv(network_.default_timeout());
      ++legs_;
      if (codec::peek_schema(reply) == static_cast<std::uint8_t>(codec::SchemaId::ErrorReply)) {
        ctx->state = gss::ContextState::Failed;
        decode_reply<gss::ContextToken>(reply);
      }
      step = gss::init_security_context(*ctx, cred, target_, gss::ReqFlags::all(), reply, now,
                                        rng_, tickets);
    }
  } catch (Error& e) {
    reset();
    if (e.stage().empty()) e.with_stage("handshake");
    throw;
  }
  ctx_ = std::move(ctx);
}

AppResponse ServiceClient::fetch(const AppRequest& request, Timestamp now) {
  if (!live(now)) establish(now);
  try {
    last_wrap_ = codec::encode(gss::wrap(*ctx_, codec::encode(request)));
    conn_->send(last_wrap_);
    Bytes reply = conn_->recv(network_.default_timeout());
    auto token = decode_reply<gss::WrapToken>(reply);
    return codec::decode<AppResponse>(gss::unwrap(*ctx_, token));
  } catch (Error& e) {
    reset();
    if (e.stage().empty()) e.with_stage("channel");
    throw;
  }
}

Bytes ServiceClient::send_raw(const Bytes& payload) {
  if (!conn_) fail(ErrorCode::ConnectionClosed, "no connection");
  conn_->send(payload);
  return conn_->recv(network_.default_timeout());
}

}  // namespace kerbpk::svc
