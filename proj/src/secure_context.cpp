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

#include "kerbpk/secure_context.hpp"

namespace kerbpk::gss {

namespace {

void require_component(std::string_view part, std::string_view input) {
  if (part.empty()) fail(ErrorCode::MalformedName, "empty component in '" + std::string(input) + "'");
}

Bytes wrap_aad(std::uint64_t seq, Direction dir) {
  Bytes aad(9);
  for (int i = 0; i < 8; ++i) aad[i] = static_cast<std::uint8_t>(seq >> (56 - 8 * i));
  aad[8] = static_cast<std::uint8_t>(dir);
  return aad;
}

Direction outbound(Role role) {
  return role == Role::Initiator ? Direction::InitiatorToAcceptor : Direction::AcceptorToInitiator;
}

Direction inbound(Role role) {
  return role == Role::Initiator ? Direction::AcceptorToInitiator : Direction::InitiatorToAcceptor;
}

// Runs `body`, marking the context Failed and attributing the error to the
// handshake if it throws.
template <class F>
StepResult guarded(SecurityContext& ctx, F&& body) {
  try {
    return body();
  } catch (Error& e) {
    ctx.state = ContextState::Failed;
    if (e.stage().empty()) e.with_stage("handshake");
    throw;
  }
}

ContextToken decode_token(const Bytes& raw, std::uint8_t expected_leg) {
  ContextToken token;
  try {
    token = codec::decode<ContextToken>(raw);
  } catch (const Error& e) {
    fail(ErrorCode::TokenIntegrityError, e.what());
  }
  if (token.leg != expected_leg) {
    fail(ErrorCode::TokenIntegrityError, "unexpected leg " + std::to_string(token.leg));
  }
  return token;
}

}  // namespace

InternalName import_name(std::string_view input, NameType type) {
  if (input.empty()) fail(ErrorCode::MalformedName, "empty name");
  if (input.find('\0') != std::string_view::npos) fail(ErrorCode::MalformedName, "embedded NUL");

  InternalName out;
  out.type = type;
  auto at = input.find('@');
  if (type == NameType::HostBasedService) {
    if (at == std::string_view::npos || input.find('@', at + 1) != std::string_view::npos) {
      fail(ErrorCode::MalformedName, "expected service@host: '" + std::string(input) + "'");
    }
    out.primary = std::string(input.substr(0, at));
    out.instance = std::string(input.substr(at + 1));
    require_component(out.primary, input);
    require_component(out.instance, input);
    if (out.primary.find('/') != std::string::npos) {
      fail(ErrorCode::MalformedName, "'/' in service part");
    }
    return out;
  }
  out.primary = std::string(input.substr(0, at));
  require_component(out.primary, input);
  if (at != std::string_view::npos) {
    out.realm = std::string(input.substr(at + 1));
    require_component(out.realm, input);
    if (out.realm.find('@') != std::string::npos) fail(ErrorCode::MalformedName, "two '@'");
  }
  return out;
}

MechanismName canonicalize_name(const InternalName& name, Mechanism mechanism,
                                const std::string& default_realm) {
  MechanismName out;
  out.mechanism_ = mechanism;
  out.name_type_ = name.type;
  out.principal_.name =
      name.type == NameType::HostBasedService ? name.primary + "/" + name.instance : name.primary;
  out.principal_.realm = name.realm.empty() ? default_realm : name.realm;
  if (!is_valid_principal(out.principal_)) {
    fail(ErrorCode::MalformedName, out.principal_.to_string());
  }
  return out;
}

const client::CredentialCache& ContextCredential::cache() const {
  if (usage_ != CredUsage::Initiate) fail(ErrorCode::UsageViolation, "not an initiate credential");
  return *std::get<const client::CredentialCache*>(backing_);
}

const SymmetricKey& ContextCredential::service_key() const {
  if (usage_ != CredUsage::Accept) fail(ErrorCode::UsageViolation, "not an accept credential");
  return std::get<SymmetricKey>(backing_);
}

ContextCredential acquire_credential(const MechanismName& name, CredUsage usage,
                                     CredentialBacking backing) {
  if (usage == CredUsage::Initiate) {
    auto* cache = std::get_if<const client::CredentialCache*>(&backing);
    if (cache == nullptr || *cache == nullptr) {
      fail(ErrorCode::MissingBacking, "initiate credential needs a credential cache");
    }
  } else {
    auto* key = std::get_if<SymmetricKey>(&backing);
    if (key == nullptr || key->bytes.empty()) {
      fail(ErrorCode::MissingBacking, "accept credential needs the service key");
    }
  }
  return ContextCredential(name, usage, std::move(backing));
}

std::uint32_t ReqFlags::to_bits() const {
  return (mutual ? kFlagMutual : 0) | (replay ? kFlagReplay : 0) | (sequence ? kFlagSequence : 0);
}

ReqFlags ReqFlags::from_bits(std::uint32_t bits) {
  return {(bits & kFlagMutual) != 0, (bits & kFlagReplay) != 0, (bits & kFlagSequence) != 0};
}

const char* state_name(ContextState s) {
  switch (s) {
    case ContextState::Initial: return "Initial";
    case ContextState::AwaitingReply: return "AwaitingReply";
    case ContextState::Complete: return "Complete";
    case ContextState::Failed: return "Failed";
  }
  return "Unknown";
}

void SequenceWindow::insert(std::uint64_t seq) {
  if (!seen_.insert(seq).second) return;
  order_.push_back(seq);
  while (order_.size() > capacity_) {
    seen_.erase(order_.front());
    order_.pop_front();
  }
}

StepResult init_security_context(SecurityContext& ctx, const ContextCredential& cred,
                                 const MechanismName& target, ReqFlags req_flags,
                                 const std::optional<Bytes>& input_token, Timestamp now,
                                 crypto::Rng& rng, const TicketSource& tickets) {
  if (cred.usage() != CredUsage::Initiate) {
    fail(ErrorCode::UsageViolation, "accept credential passed to init");
  }
  if (ctx.state == ContextState::Complete || ctx.state == ContextState::Failed) {
    fail(ErrorCode::StateError, std::string("init called in state ") + state_name(ctx.state));
  }
  if (ctx.state == ContextState::Initial) {
    if (input_token) fail(ErrorCode::StateError, "input token on the first init call");
    return guarded(ctx, [&]() -> StepResult {
      if (!req_flags.complete()) {
        fail(ErrorCode::RequiredFlagMissing, "mutual, replay and sequence are all required");
      }
      const auto& cache = cred.cache();
      const std::string& service = target.principal().name;
      client::ServiceCredential sc;
      if (tickets) {
        try {
          sc = tickets(service, now);
        } catch (Error& e) {
          if (e.code() == ErrorCode::NoTgt) fail(ErrorCode::NoTicket, e.detail());
          throw;
        }
      } else {
        const auto* hit = cache.find_service(service);
        if (hit == nullptr) fail(ErrorCode::NoTicket, service);
        sc = {hit->ticket, hit->session_key, hit->validity};
      }

      ApRequest req;
      req.options = 0;
      req.ticket = sc.ticket;
      std::uint64_t initial_seq = rng.next_u64() >> 1;
      Authenticator auth{cache.client.name, cache.client.realm, now, request_checksum(req),
                         req_flags.to_bits(), initial_seq};
      req.authenticator = seal_struct(ctx.provider(), sc.session_key, auth, Usage::Authenticator);

      ctx.role = Role::Initiator;
      ctx.flags = req_flags;
      ctx.session_key = sc.session_key;
      ctx.peer = target.principal();
      ctx.sent_ts1 = now;
      ctx.sent_initial_seq = initial_seq;
      ctx.send_seq = initial_seq;
      ctx.state = ContextState::AwaitingReply;
      return {codec::encode(ContextToken{1, codec::encode(req)}), Status::ContinueNeeded};
    });
  }

  // AwaitingReply
  if (!input_token) fail(ErrorCode::StateError, "second init call needs the reply token");
  return guarded(ctx, [&]() -> StepResult {
    ContextToken token = decode_token(*input_token, 2);
    ApEncPart enc;
    try {
      auto reply = codec::decode<ApReply>(token.payload);
      enc = open_struct<ApEncPart>(ctx.provider(), ctx.session_key, reply.enc_part,
                                   Usage::ApEncPart);
    } catch (const Error& e) {
      fail(ErrorCode::TokenIntegrityError, e.what());
    }
    if (enc.ts2 != ctx.sent_ts1 || enc.initiator_seq != ctx.sent_initial_seq) {
      fail(ErrorCode::MutualAuthFailure, "reply does not echo this authenticator");
    }
    if (enc.subkey.provider_id != ctx.session_key.provider_id) {
      fail(ErrorCode::TokenIntegrityError, "subkey from another provider");
    }
    ctx.subkey = enc.subkey;
    ctx.recv_seq = enc.initial_seq;
    ctx.state = ContextState::Complete;
    return {std::nullopt, Status::Complete};
  });
}

StepResult accept_security_context(SecurityContext& ctx, const ContextCredential& cred,
                                   const Bytes& input_token, Timestamp now, crypto::Rng& rng,
                                   AuthenticatorReplayCache& replay_cache,
                                   const AcceptConfig& config) {
  if (cred.usage() != CredUsage::Accept) {
    fail(ErrorCode::UsageViolation, "initiate credential passed to accept");
  }
  if (ctx.state != ContextState::Initial) {
    fail(ErrorCode::StateError, std::string("accept called in state ") + state_name(ctx.state));
  }
  return guarded(ctx, [&]() -> StepResult {
    ContextToken token = decode_token(input_token, 1);
    auto req = codec::decode<ApRequest>(token.payload);
    const auto& provider = ctx.provider();

    TicketBody ticket;
    try {
      ticket = open_struct<TicketBody>(provider, cred.service_key(), req.ticket.box, Usage::Ticket);
    } catch (const Error& e) {
      fail(ErrorCode::TicketIntegrityError, e.what());
    }
    if (req.ticket.server != cred.name().principal()) {
      fail(ErrorCode::TicketIntegrityError, "ticket addressed to " + req.ticket.server.to_string());
    }
    if (auto ec = validate_times(ticket.validity, now, config.clock_skew); ec != ErrorCode::Ok) {
      fail(ec, "service ticket");
    }

    Authenticator auth;
    try {
      auth = open_struct<Authenticator>(provider, ticket.session_key, req.authenticator,
                                        Usage::Authenticator);
    } catch (const Error& e) {
      fail(ErrorCode::AuthenticatorIntegrityError, e.what());
    }
    if (!constant_time_equal(auth.checksum, request_checksum(req))) {
      fail(ErrorCode::ChecksumMismatch, "request body does not match authenticator");
    }
    if (config.enforce_address && ticket.client_address != config.peer_address) {
      fail(ErrorCode::AddressMismatch, config.peer_address);
    }
    ReqFlags flags = ReqFlags::from_bits(auth.req_flags);
    if (!flags.complete()) {
      fail(ErrorCode::RequiredFlagMissing, "initiator omitted a required flag");
    }
    if (auto ec = validate_authenticator(auth, ticket.client(), now, config.clock_skew,
                                         replay_cache);
        ec != ErrorCode::Ok) {
      fail(ec);
    }

    ApEncPart enc;
    enc.ts2 = auth.timestamp;
    enc.subkey = provider.random_session_key(rng);
    enc.initial_seq = rng.next_u64() >> 1;
    enc.initiator_seq = auth.initial_seq;
    ApReply reply{seal_struct(provider, ticket.session_key, enc, Usage::ApEncPart)};

    ctx.role = Role::Acceptor;
    ctx.flags = flags;
    ctx.session_key = ticket.session_key;
    ctx.subkey = enc.subkey;
    ctx.send_seq = enc.initial_seq;
    ctx.recv_seq = auth.initial_seq;
    ctx.peer = ticket.client();
    ctx.state = ContextState::Complete;
    return {codec::encode(ContextToken{2, codec::encode(reply)}), Status::Complete};
  });
}

int run_handshake(InitiatorParts initiator, AcceptorParts acceptor, Timestamp now,
                  const TokenTransport& transport, int leg_budget) {
  auto abort_both = [&] {
    initiator.ctx.state = ContextState::Failed;
    acceptor.ctx.state = ContextState::Failed;
  };
  int legs = 0;
  std::optional<Bytes> to_initiator;
  Status init_status = Status::ContinueNeeded;
  Status accept_status = Status::ContinueNeeded;
  try {
    while (init_status != Status::Complete || accept_status != Status::Complete) {
      auto step = init_security_context(initiator.ctx, initiator.cred, initiator.target,
                                        initiator.flags, to_initiator, now, initiator.rng,
                                        initiator.tickets);
      init_status = step.status;
      if (!step.output_token) {
        if (init_status == Status::Complete && accept_status == Status::Complete) break;
        fail(ErrorCode::StateError, "initiator produced no token before completion");
      }
      if (++legs > leg_budget) fail(ErrorCode::HandshakeExceededLegBudget);
      auto delivered = transport(*step.output_token, Direction::InitiatorToAcceptor);
      if (!delivered) fail(ErrorCode::Timeout, "leg " + std::to_string(legs) + " lost");

      auto reply = accept_security_context(acceptor.ctx, acceptor.cred, *delivered, now,
                                           acceptor.rng, acceptor.replay_cache, acceptor.config);
      accept_status = reply.status;
      if (reply.output_token) {
        if (++legs > leg_budget) fail(ErrorCode::HandshakeExceededLegBudget);
        to_initiator = transport(*reply.output_token, Direction::AcceptorToInitiator);
        if (!to_initiator) fail(ErrorCode::Timeout, "leg " + std::to_string(legs) + " lost");
      }
    }
  } catch (Error& e) {
    if (e.code() != ErrorCode::Timeout) abort_both();
    if (e.stage().empty()) e.with_stage("handshake");
    throw;
  }
  return legs;
}

WrapToken wrap(SecurityContext& ctx, ByteView payload) {
  if (ctx.state != ContextState::Complete || !ctx.subkey) {
    fail(ErrorCode::StateError, std::string("wrap in state ") + state_name(ctx.state));
  }
  WrapToken token;
  token.seq = ctx.send_seq++;
  token.direction = outbound(ctx.role);
  token.box = ctx.provider().seal(*ctx.subkey, payload, Usage::Wrap,
                                  wrap_aad(token.seq, token.direction));
  return token;
}

Bytes unwrap(SecurityContext& ctx, const WrapToken& token) {
  if (ctx.state != ContextState::Complete || !ctx.subkey) {
    fail(ErrorCode::StateError, std::string("unwrap in state ") + state_name(ctx.state));
  }
  Bytes plain;
  try {
    plain = ctx.provider().open(*ctx.subkey, token.box, Usage::Wrap,
                                wrap_aad(token.seq, token.direction));
  } catch (const Error& e) {
    fail(ErrorCode::WrapIntegrityError, e.what());
  }
  if (token.direction != inbound(ctx.role)) fail(ErrorCode::WrongDirection);
  if (ctx.flags.replay && ctx.replay_window.contains(token.seq)) {
    fail(ErrorCode::ReplayDetected, "wrap seq " + std::to_string(token.seq));
  }
  if (ctx.flags.sequence && token.seq != ctx.recv_seq) {
    fail(ErrorCode::OutOfSequence,
         "expected " + std::to_string(ctx.recv_seq) + ", got " + std::to_string(token.seq));
  }
  ctx.replay_window.insert(token.seq);
  ctx.recv_seq = token.seq + 1;
  return plain;
}

}  // namespace kerbpk::gss
