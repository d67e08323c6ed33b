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

#include "kerbpk/client.hpp"

#include <algorithm>
#include <fstream>

namespace kerbpk::client {

namespace {

void write_hex_line(const std::filesystem::path& path, const Bytes& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out << to_hex(bytes) << '\n';
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "rename: " + ec.message());
}

std::string read_line(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  return line;
}

bool expired(const Validity& v, Timestamp now, std::uint64_t skew) { return v.till + skew < now; }

}  // namespace

void save_identity_file(const std::filesystem::path& path, const IdentityFile& id) {
  write_hex_line(path, codec::encode(id));
}

IdentityFile load_identity_file(const std::filesystem::path& path) {
  return codec::decode<IdentityFile>(from_hex(read_line(path)));
}

const CredentialEntry* CredentialCache::find_service(const std::string& service_id) const {
  auto it = std::find_if(service_creds.begin(), service_creds.end(),
                         [&](const CredentialEntry& e) { return e.service_id == service_id; });
  return it == service_creds.end() ? nullptr : &*it;
}

void CredentialCache::put_service(CredentialEntry entry) {
  std::erase_if(service_creds,
                [&](const CredentialEntry& e) { return e.service_id == entry.service_id; });
  service_creds.push_back(std::move(entry));
}

void CredentialCache::evict_expired(Timestamp now, std::uint64_t skew) {
  if (tgt && expired(tgt->validity, now, skew)) tgt.reset();
  std::erase_if(service_creds,
                [&](const CredentialEntry& e) { return expired(e.validity, now, skew); });
}

void save_ccache(const std::filesystem::path& path, const CredentialCache& cache) {
  write_hex_line(path, codec::encode(cache));
}

CredentialCache load_ccache(const std::filesystem::path& path) {
  std::string line = read_line(path);
  try {
    return codec::decode<CredentialCache>(from_hex(line));
  } catch (const Error& e) {
    fail(ErrorCode::CcacheParseError, path.string() + ": " + e.what());
  }
}

ClientAgent::ClientAgent(Principal principal, const crypto::CryptoProvider& provider,
                         crypto::Rng& rng, ClientConfig config)
    : principal_(std::move(principal)), provider_(provider), rng_(rng), config_(config) {
  cache_.client = principal_;
}

AsRequest ClientAgent::build_as_request(const ClientIdentity& identity, const std::string& tgs_id,
                                        const Validity& requested) {
  AsRequest req;
  req.options = 0;
  req.client = identity.principal;
  req.tgs_id = tgs_id;
  req.requested_validity = requested;
  req.nonce1 = provider_.random_nonce(rng_);
  req.certificate = identity.certificate;
  req.signature = provider_.sign(identity.keypair.private_key, as_request_signed_bytes(req));
  return req;
}

void ClientAgent::process_as_reply(const ClientIdentity& identity, const AsReply& reply,
                                   const Nonce& sent_nonce1) {
  if (reply.client != identity.principal) {
    fail(ErrorCode::PrincipalMismatch, "reply names " + reply.client.to_string());
  }
  SymmetricKey long_term = provider_.derive_key_from_password(
      identity.password, identity.principal.name, identity.principal.realm);

  AsEncPart enc;
  try {
    enc = open_struct<AsEncPart>(provider_, long_term, reply.enc_part, Usage::AsEncPart);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IntegrityError) fail(ErrorCode::WrongPassword, e.detail());
    throw;
  }
  if (enc.nonce1 != sent_nonce1) fail(ErrorCode::NonceMismatch, "nonce1");

  SymmetricKey session_key;
  try {
    session_key = codec::decode<SymmetricKey>(
        provider_.pk_decrypt(identity.keypair.private_key, enc.wrapped_session_key));
  } catch (const Error& e) {
    fail(ErrorCode::PkDecryptFailure, e.what());
  }

  if (reply.ticket.server != Principal{enc.tgs_id, enc.tgs_realm}) {
    fail(ErrorCode::PrincipalMismatch, "ticket addressed to " + reply.ticket.server.to_string());
  }
  cache_ = CredentialCache{};
  cache_.client = identity.principal;
  cache_.tgt = CredentialEntry{enc.tgs_id, reply.ticket, session_key, enc.validity};
}

void ClientAgent::kinit(const ClientIdentity& identity, const KdcExchange& as_endpoint,
                        Timestamp now) {
  try {
    AsRequest req = build_as_request(identity, tgs_name(identity.principal.realm),
                                     default_validity(now));
    ++kdc_requests_;
    Bytes raw = as_endpoint(codec::encode(req));
    process_as_reply(identity, decode_reply<AsReply>(raw), req.nonce1);
  } catch (Error& e) {
    if (e.stage().empty()) e.with_stage("AS");
    throw;
  }
}

TgsRequest ClientAgent::build_tgs_request(const std::string& service_id,
                                          const Validity& requested, Timestamp now) {
  if (!cache_.tgt) fail(ErrorCode::NoTgt, principal_.to_string());
  TgsRequest req;
  req.options = 0;
  req.service_id = service_id;
  req.requested_validity = requested;
  req.nonce2 = provider_.random_nonce(rng_);
  req.ticket = cache_.tgt->ticket;
  Authenticator auth{principal_.name, principal_.realm, now, request_checksum(req), 0, 0};
  req.authenticator = seal_struct(provider_, cache_.tgt->session_key, auth, Usage::Authenticator);
  return req;
}

void ClientAgent::process_tgs_reply(const TgsReply& reply, const TgsRequest& sent) {
  if (!cache_.tgt) fail(ErrorCode::NoTgt, principal_.to_string());
  if (reply.client != principal_) {
    fail(ErrorCode::PrincipalMismatch, "reply names " + reply.client.to_string());
  }
  auto enc = open_struct<TgsEncPart>(provider_, cache_.tgt->session_key, reply.enc_part,
                                     Usage::TgsEncPart);
  if (enc.nonce2 != sent.nonce2) fail(ErrorCode::NonceMismatch, "nonce2");
  if (enc.service_id != sent.service_id ||
      reply.ticket.server != Principal{enc.service_id, enc.service_realm}) {
    fail(ErrorCode::PrincipalMismatch, "service ticket for " + reply.ticket.server.to_string());
  }
  cache_.put_service(CredentialEntry{enc.service_id, reply.ticket, enc.session_key, enc.validity});
}

ServiceCredential ClientAgent::get_service_ticket(const std::string& service_id,
                                                  const Validity& requested, Timestamp now,
                                                  const KdcExchange& tgs_endpoint) {
  try {
    cache_.evict_expired(now, config_.clock_skew);
    if (const auto* hit = cache_.find_service(service_id)) {
      return {hit->ticket, hit->session_key, hit->validity};
    }
    TgsRequest req = build_tgs_request(service_id, requested, now);
    last_tgs_request_ = codec::encode(req);
    ++kdc_requests_;
    Bytes raw = tgs_endpoint(last_tgs_request_);
    process_tgs_reply(decode_reply<TgsReply>(raw), req);
    const auto* entry = cache_.find_service(service_id);
    return {entry->ticket, entry->session_key, entry->validity};
  } catch (Error& e) {
    if (e.stage().empty()) e.with_stage("TGS");
    throw;
  }
}

}  // namespace kerbpk::client
