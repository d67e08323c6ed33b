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

// Wire structures of the PKINIT_AS exchange:
//
//   (1) C -> AS   AsRequest   client, TGS id, times, nonce1, certificate, signature
//   (2) AS -> C   AsReply     TGT + {pk_encrypt(K_c,tgs), times, nonce1, TGS id} K_c
//   (3) C -> TGS  TgsRequest  service id, times, nonce2, TGT, {authenticator} K_c,tgs
//   (4) TGS -> C  TgsReply    service ticket + {K_c,s, times, nonce2, service id} K_c,tgs
//   (5) C -> S    ApRequest   service ticket, {authenticator} K_c,s
//   (6) S -> C    ApReply     {ts2, subkey, initial seq} K_c,s

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>

#include "kerbpk/codec.hpp"
#include "kerbpk/crypto.hpp"

namespace kerbpk {

using crypto::KeyPair;
using crypto::Nonce;
using crypto::SealedBox;
using crypto::SymmetricKey;
using crypto::Usage;

// Seconds since the Unix epoch.
using Timestamp = std::uint64_t;

struct Principal {
  static constexpr auto kSchema = codec::SchemaId::Principal;
  std::string name;
  std::string realm;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.name);
    a(2, s.realm);
  }
  friend bool operator==(const Principal&, const Principal&) = default;
  friend auto operator<=>(const Principal&, const Principal&) = default;

  std::string to_string() const { return name + "@" + realm; }
};

// Name of the ticket-granting service inside `realm`.
inline std::string tgs_name(const std::string& realm) { return "krbtgt/" + realm; }

bool is_valid_principal(const Principal& p);
// InvalidPrincipal unless is_valid_principal.
void require_valid_principal(const Principal& p);

struct Certificate {
  static constexpr auto kSchema = codec::SchemaId::Certificate;
  Principal subject;
  Bytes public_key;
  std::uint64_t serial = 0;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.subject);
    a(2, s.public_key);
    a(3, s.serial);
  }
  friend bool operator==(const Certificate&, const Certificate&) = default;
};

struct Validity {
  static constexpr auto kSchema = codec::SchemaId::Validity;
  Timestamp from = 0;
  Timestamp till = 0;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.from);
    a(2, s.till);
  }
  friend bool operator==(const Validity&, const Validity&) = default;
};

inline constexpr std::uint32_t kTicketFlagInitial = 1u << 0;

struct TicketBody {
  static constexpr auto kSchema = codec::SchemaId::TicketBody;
  std::uint32_t flags = 0;
  SymmetricKey session_key;
  std::string client_realm;
  std::string client_id;
  std::string client_address;
  Validity validity;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.flags);
    a(2, s.session_key);
    a(3, s.client_realm);
    a(4, s.client_id);
    a(5, s.client_address);
    a(6, s.validity);
  }
  friend bool operator==(const TicketBody&, const TicketBody&) = default;

  Principal client() const { return {client_id, client_realm}; }
};

struct SealedTicket {
  static constexpr auto kSchema = codec::SchemaId::TicketSealed;
  Principal server;  // plaintext addressing hint
  SealedBox box;     // encode(TicketBody) under the server's long-term key, label Ticket

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.server);
    a(2, s.box);
  }
  friend bool operator==(const SealedTicket&, const SealedTicket&) = default;
};

// Proof of fresh session-key possession. `checksum` binds the enclosing
// request's plaintext fields; `req_flags` and `initial_seq` carry the
// initiator's context parameters on the AP exchange and are zero on TGS.
struct Authenticator {
  static constexpr auto kSchema = codec::SchemaId::Authenticator;
  std::string client_id;
  std::string client_realm;
  Timestamp timestamp = 0;
  Bytes checksum;
  std::uint32_t req_flags = 0;
  std::uint64_t initial_seq = 0;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.client_id);
    a(2, s.client_realm);
    a(3, s.timestamp);
    a(4, s.checksum);
    a(5, s.req_flags);
    a(6, s.initial_seq);
  }
  friend bool operator==(const Authenticator&, const Authenticator&) = default;

  Principal client() const { return {client_id, client_realm}; }
};

struct AsRequest {
  static constexpr auto kSchema = codec::SchemaId::AsRequest;
  std::uint32_t options = 0;
  Principal client;
  std::string tgs_id;
  Validity requested_validity;
  Nonce nonce1{};
  Certificate certificate;
  Bytes signature;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.options);
    a(2, s.client);
    a(3, s.tgs_id);
    a(4, s.requested_validity);
    a(5, s.nonce1);
    a(6, s.certificate);
    a(7, s.signature);
  }
  friend bool operator==(const AsRequest&, const AsRequest&) = default;
};

struct AsEncPart {
  static constexpr auto kSchema = codec::SchemaId::EncPartAs;
  Bytes wrapped_session_key;  // pk_encrypt(P_c, encode(K_c,tgs))
  Validity validity;
  Nonce nonce1{};
  std::string tgs_realm;
  std::string tgs_id;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.wrapped_session_key);
    a(2, s.validity);
    a(3, s.nonce1);
    a(4, s.tgs_realm);
    a(5, s.tgs_id);
  }
  friend bool operator==(const AsEncPart&, const AsEncPart&) = default;
};

struct AsReply {
  static constexpr auto kSchema = codec::SchemaId::AsReply;
  Principal client;
  SealedTicket ticket;
  SealedBox enc_part;  // encode(AsEncPart) under K_c, label AsEncPart

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.client);
    a(2, s.ticket);
    a(3, s.enc_part);
  }
  friend bool operator==(const AsReply&, const AsReply&) = default;
};

struct TgsRequest {
  static constexpr auto kSchema = codec::SchemaId::TgsRequest;
  std::uint32_t options = 0;
  std::string service_id;
  Validity requested_validity;
  Nonce nonce2{};
  SealedTicket ticket;
  SealedBox authenticator;  // under K_c,tgs, label Authenticator

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.options);
    a(2, s.service_id);
    a(3, s.requested_validity);
    a(4, s.nonce2);
    a(5, s.ticket);
    a(6, s.authenticator);
  }
  friend bool operator==(const TgsRequest&, const TgsRequest&) = default;
};

struct TgsEncPart {
  static constexpr auto kSchema = codec::SchemaId::EncPartTgs;
  SymmetricKey session_key;  // K_c,s
  Validity validity;
  Nonce nonce2{};
  std::string service_realm;
  std::string service_id;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.session_key);
    a(2, s.validity);
    a(3, s.nonce2);
    a(4, s.service_realm);
    a(5, s.service_id);
  }
  friend bool operator==(const TgsEncPart&, const TgsEncPart&) = default;
};

struct TgsReply {
  static constexpr auto kSchema = codec::SchemaId::TgsReply;
  Principal client;
  SealedTicket ticket;
  SealedBox enc_part;  // encode(TgsEncPart) under K_c,tgs, label TgsEncPart

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.client);
    a(2, s.ticket);
    a(3, s.enc_part);
  }
  friend bool operator==(const TgsReply&, const TgsReply&) = default;
};

struct ApRequest {
  static constexpr auto kSchema = codec::SchemaId::ApRequest;
  std::uint32_t options = 0;
  SealedTicket ticket;
  SealedBox authenticator;  // under K_c,s, label Authenticator

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.options);
    a(2, s.ticket);
    a(3, s.authenticator);
  }
  friend bool operator==(const ApRequest&, const ApRequest&) = default;
};

struct ApEncPart {
  static constexpr auto kSchema = codec::SchemaId::EncPartAp;
  Timestamp ts2 = 0;  // echo of the authenticator timestamp
  SymmetricKey subkey;
  std::uint64_t initial_seq = 0;
  std::uint64_t initiator_seq = 0;  // echo of the authenticator initial_seq

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.ts2);
    a(2, s.subkey);
    a(3, s.initial_seq);
    a(4, s.initiator_seq);
  }
  friend bool operator==(const ApEncPart&, const ApEncPart&) = default;
};

struct ApReply {
  static constexpr auto kSchema = codec::SchemaId::ApReply;
  SealedBox enc_part;  // encode(ApEncPart) under K_c,s, label ApEncPart

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.enc_part);
  }
  friend bool operator==(const ApReply&, const ApReply&) = default;
};

// Unauthenticated failure notice returned by any server.
struct ErrorReply {
  static constexpr auto kSchema = codec::SchemaId::ErrorReply;
  std::string error;
  std::string detail;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.error);
    a(2, s.detail);
  }
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

Bytes encode_error(const Error& e);

// Decodes `bytes` as T, or throws the named error if the peer sent an
// ErrorReply instead.
template <codec::Structure T>
T decode_reply(ByteView bytes) {
  if (codec::peek_schema(bytes) == static_cast<std::uint8_t>(codec::SchemaId::ErrorReply)) {
    auto e = codec::decode<ErrorReply>(bytes);
    fail(parse_error_name(e.error).value_or(ErrorCode::InternalError), e.detail);
  }
  return codec::decode<T>(bytes);
}

template <codec::Structure T>
SealedBox seal_struct(const crypto::CryptoProvider& provider, const SymmetricKey& key,
                      const T& value, Usage label) {
  return provider.seal(key, codec::encode(value), label);
}

template <codec::Structure T>
T open_struct(const crypto::CryptoProvider& provider, const SymmetricKey& key,
              const SealedBox& box, Usage label) {
  return codec::decode<T>(provider.open(key, box, label));
}

// Bytes the AS request signature covers: the whole request with an empty
// signature field. Includes encode(client).
Bytes as_request_signed_bytes(const AsRequest& req);

// Digest of a request's plaintext fields, carried inside its authenticator.
Bytes request_checksum(const TgsRequest& req);
Bytes request_checksum(const ApRequest& req);

// ok iff from - skew <= now <= till + skew.
ErrorCode validate_times(const Validity& validity, Timestamp now, std::uint64_t skew);

// Time-windowed memory of accepted authenticators. Internally synchronized.
class AuthenticatorReplayCache {
 public:
  explicit AuthenticatorReplayCache(std::uint64_t window_seconds) : window_(window_seconds) {}

  // Records `auth` seen at `now`; false if it was already present.
  bool insert(const Authenticator& auth, Timestamp now);
  bool contains(const Authenticator& auth, Timestamp now);
  std::size_t size() const;

 private:
  void expire(Timestamp now);
  static std::string key_of(const Authenticator& auth);

  std::uint64_t window_;
  mutable std::mutex mu_;
  std::unordered_set<std::string> seen_;
  std::deque<std::pair<Timestamp, std::string>> order_;
};

// Checks identity, freshness, and replay; on success records the
// authenticator in `cache`.
ErrorCode validate_authenticator(const Authenticator& auth, const Principal& expected,
                                 Timestamp now, std::uint64_t skew,
                                 AuthenticatorReplayCache& cache);

}  // namespace kerbpk
