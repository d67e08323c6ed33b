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

#include "kerbpk/kdc.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

namespace kerbpk::kdc {

const char* kind_name(PrincipalKind k) {
  switch (k) {
    case PrincipalKind::User: return "user";
    case PrincipalKind::Service: return "service";
    case PrincipalKind::TgsService: return "tgs";
  }
  return "unknown";
}

PrincipalDb::PrincipalDb(PrincipalDb&& other) noexcept
    : realm_(std::move(other.realm_)), records_(std::move(other.records_)) {}

PrincipalDb& PrincipalDb::operator=(PrincipalDb&& other) noexcept {
  if (this != &other) {
    std::unique_lock lock(mu_);
    realm_ = std::move(other.realm_);
    records_ = std::move(other.records_);
  }
  return *this;
}

PrincipalDb PrincipalDb::create(const std::string& realm, const crypto::CryptoProvider& provider,
                                crypto::Rng& rng) {
  PrincipalDb db;
  db.realm_ = realm;
  PrincipalRecord tgs{db.tgs_principal(), provider.random_session_key(rng), std::nullopt,
                      PrincipalKind::TgsService};
  require_valid_principal(tgs.principal);
  db.records_.emplace(tgs.principal.name, std::move(tgs));
  return db;
}

PrincipalDb PrincipalDb::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open database " + path.string());
  PrincipalDb db;
  std::string line;
  std::size_t lineno = 0;
  std::size_t tgs_count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    PrincipalRecord rec;
    try {
      rec = codec::decode<PrincipalRecord>(from_hex(line));
    } catch (const Error& e) {
      fail(ErrorCode::DatabaseCorrupt, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (rec.kind == PrincipalKind::TgsService) {
      ++tgs_count;
      db.realm_ = rec.principal.realm;
    }
    if (db.records_.count(rec.principal.name) != 0) {
      fail(ErrorCode::DatabaseCorrupt, "duplicate principal " + rec.principal.name);
    }
    db.records_.emplace(rec.principal.name, std::move(rec));
  }
  if (tgs_count != 1) fail(ErrorCode::DatabaseCorrupt, "expected exactly one TGS record");
  for (const auto& [name, rec] : db.records_) {
    if (rec.principal.realm != db.realm_) {
      fail(ErrorCode::DatabaseCorrupt, name + " is outside realm " + db.realm_);
    }
  }
  return db;
}

void PrincipalDb::save(const std::filesystem::path& path) const {
  std::shared_lock lock(mu_);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    for (const auto& [name, rec] : records_) out << to_hex(codec::encode(rec)) << '\n';
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "rename: " + ec.message());
}

void PrincipalDb::insert(PrincipalRecord rec) {
  require_valid_principal(rec.principal);
  std::unique_lock lock(mu_);
  if (records_.count(rec.principal.name) != 0) {
    fail(ErrorCode::DuplicatePrincipal, rec.principal.to_string());
  }
  records_.emplace(rec.principal.name, std::move(rec));
}

PrincipalRecord PrincipalDb::register_user(const crypto::CryptoProvider& provider,
                                           const std::string& name, const std::string& password,
                                           const Bytes& public_key, crypto::Rng& rng) {
  Principal p{name, realm_};
  require_valid_principal(p);
  if (find(name)) fail(ErrorCode::DuplicatePrincipal, p.to_string());
  PrincipalRecord rec{p, provider.derive_key_from_password(password, name, realm_), std::nullopt,
                      PrincipalKind::User};
  if (!public_key.empty()) rec.certificate = Certificate{p, public_key, rng.next_u64()};
  insert(rec);
  return rec;
}

PrincipalRecord PrincipalDb::register_service(const crypto::CryptoProvider& provider,
                                              const std::string& name, crypto::Rng& rng) {
  PrincipalRecord rec{{name, realm_}, provider.random_session_key(rng), std::nullopt,
                      PrincipalKind::Service};
  insert(rec);
  return rec;
}

std::optional<PrincipalRecord> PrincipalDb::find(const std::string& name) const {
  std::shared_lock lock(mu_);
  auto it = records_.find(name);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<PrincipalRecord> PrincipalDb::records() const {
  std::shared_lock lock(mu_);
  std::vector<PrincipalRecord> out;
  out.reserve(records_.size());
  for (const auto& [name, rec] : records_) out.push_back(rec);
  return out;
}

std::size_t PrincipalDb::key_count() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::size_t PrincipalDb::count(PrincipalKind kind) const {
  std::shared_lock lock(mu_);
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [kind](const auto& kv) { return kv.second.kind == kind; }));
}

Kdc::Kdc(PrincipalDb& db, const crypto::CryptoProvider& provider, KdcConfig config,
         crypto::Rng& rng)
    : db_(db), provider_(provider), config_(config), rng_(rng), replay_cache_(config.replay_window) {}

Validity Kdc::grant(const Validity& requested, Timestamp now, Timestamp cap) const {
  if (requested.from >= requested.till) fail(ErrorCode::BadValidityWindow, "from >= till");
  Validity granted{now, std::min(requested.till, cap)};
  if (granted.till <= granted.from) fail(ErrorCode::BadValidityWindow, "window ends before now");
  return granted;
}

SymmetricKey Kdc::fresh_key() {
  std::lock_guard lock(rng_mu_);
  return provider_.random_session_key(rng_);
}

SealedTicket Kdc::issue_ticket(const PrincipalRecord& server, const TicketBody& body) const {
  return SealedTicket{server.principal,
                      seal_struct(provider_, server.long_term_key, body, Usage::Ticket)};
}

AsReply Kdc::handle_as_request(const AsRequest& req, Timestamp now,
                               const std::string& peer_address) {
  if (req.client.realm != db_.realm()) fail(ErrorCode::UnknownPrincipal, req.client.to_string());
  auto client = db_.find(req.client.name);
  if (!client || client->kind != PrincipalKind::User) {
    fail(ErrorCode::UnknownPrincipal, req.client.to_string());
  }
  if (!client->certificate) fail(ErrorCode::NoCertificateOnFile, req.client.to_string());
  const Certificate& on_file = *client->certificate;
  if (req.certificate.public_key != on_file.public_key) {
    fail(ErrorCode::CertificateMismatch, "presented key differs from the key on file");
  }
  if (!provider_.verify(on_file.public_key, as_request_signed_bytes(req), req.signature)) {
    fail(ErrorCode::SignatureInvalid);
  }
  if (req.tgs_id != tgs_name(db_.realm())) fail(ErrorCode::UnknownService, req.tgs_id);
  auto tgs = db_.find(req.tgs_id);
  if (!tgs) fail(ErrorCode::InternalError, "TGS record missing");

  Validity validity = grant(req.requested_validity, now, now + config_.max_ticket_lifetime);
  SymmetricKey session_key = fresh_key();
  TicketBody body{kTicketFlagInitial, session_key,  client->principal.realm,
                  client->principal.name, peer_address, validity};

  AsEncPart enc;
  enc.wrapped_session_key = provider_.pk_encrypt(on_file.public_key, codec::encode(session_key));
  enc.validity = validity;
  enc.nonce1 = req.nonce1;
  enc.tgs_realm = db_.realm();
  enc.tgs_id = req.tgs_id;

  AsReply reply{client->principal, issue_ticket(*tgs, body),
                seal_struct(provider_, client->long_term_key, enc, Usage::AsEncPart)};
  ++tickets_issued_;
  return reply;
}

TgsReply Kdc::handle_tgs_request(const TgsRequest& req, Timestamp now,
                                 const std::string& peer_address) {
  auto tgs = db_.find(tgs_name(db_.realm()));
  if (!tgs) fail(ErrorCode::InternalError, "TGS record missing");

  TicketBody tgt;
  try {
    tgt = open_struct<TicketBody>(provider_, tgs->long_term_key, req.ticket.box, Usage::Ticket);
  } catch (const Error& e) {
    fail(ErrorCode::TicketIntegrityError, e.what());
  }
  if (req.ticket.server != tgs->principal) {
    fail(ErrorCode::TicketIntegrityError, "ticket not addressed to the TGS");
  }
  if (auto ec = validate_times(tgt.validity, now, config_.clock_skew); ec != ErrorCode::Ok) {
    fail(ec, "ticket-granting ticket");
  }

  Authenticator auth;
  try {
    auth = open_struct<Authenticator>(provider_, tgt.session_key, req.authenticator,
                                      Usage::Authenticator);
  } catch (const Error& e) {
    fail(ErrorCode::AuthenticatorIntegrityError, e.what());
  }
  if (!constant_time_equal(auth.checksum, request_checksum(req))) {
    fail(ErrorCode::ChecksumMismatch, "request body does not match authenticator");
  }
  if (config_.enforce_address && tgt.client_address != peer_address) {
    fail(ErrorCode::AddressMismatch, peer_address);
  }
  if (auto ec = validate_authenticator(auth, tgt.client(), now, config_.clock_skew, replay_cache_);
      ec != ErrorCode::Ok) {
    fail(ec);
  }

  auto service = db_.find(req.service_id);
  if (!service || service->kind != PrincipalKind::Service) {
    fail(ErrorCode::UnknownService, req.service_id);
  }
  Validity validity = grant(req.requested_validity, now,
                            std::min(now + config_.max_ticket_lifetime, tgt.validity.till));
  SymmetricKey session_key = fresh_key();
  TicketBody body{0, session_key, tgt.client_realm, tgt.client_id, tgt.client_address, validity};

  TgsEncPart enc{session_key, validity, req.nonce2, db_.realm(), req.service_id};
  TgsReply reply{tgt.client(), issue_ticket(*service, body),
                 seal_struct(provider_, tgt.session_key, enc, Usage::TgsEncPart)};
  ++tickets_issued_;
  return reply;
}

namespace {

template <class Handler>
Bytes serve(Handler&& handler, std::optional<Error>* error_out) {
  try {
    return handler();
  } catch (const Error& e) {
    if (error_out) *error_out = e;
    return encode_error(e);
  } catch (const std::exception& e) {
    Error err(ErrorCode::InternalError, e.what());
    if (error_out) *error_out = err;
    return encode_error(err);
  }
}

}  // namespace

Bytes Kdc::serve_as(ByteView request, Timestamp now, const std::string& peer_address,
                    std::optional<Error>* error_out) {
  ++as_requests_;
  return serve(
      [&] {
        return codec::encode(
            handle_as_request(codec::decode<AsRequest>(request), now, peer_address));
      },
      error_out);
}

Bytes Kdc::serve_tgs(ByteView request, Timestamp now, const std::string& peer_address,
                     std::optional<Error>* error_out) {
  ++tgs_requests_;
  return serve(
      [&] {
        return codec::encode(
            handle_tgs_request(codec::decode<TgsRequest>(request), now, peer_address));
      },
      error_out);
}

}  // namespace kerbpk::kdc
