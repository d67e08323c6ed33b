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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kerbpk/crypto.hpp"
#include "kerbpk/protocol.hpp"

namespace kerbpk::client {

// Everything the user holds. Never leaves this module except through the
// signature and the password-derived key.
struct ClientIdentity {
  Principal principal;
  std::string password;
  KeyPair keypair;
  Certificate certificate;
};

// On-disk form of the key material handed to a user at registration.
struct IdentityFile {
  static constexpr auto kSchema = codec::SchemaId::IdentityFile;
  KeyPair keypair;
  Certificate certificate;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.keypair);
    a(2, s.certificate);
  }
  friend bool operator==(const IdentityFile&, const IdentityFile&) = default;
};

void save_identity_file(const std::filesystem::path& path, const IdentityFile& id);
IdentityFile load_identity_file(const std::filesystem::path& path);

struct CredentialEntry {
  static constexpr auto kSchema = codec::SchemaId::CredentialEntry;
  std::string service_id;
  SealedTicket ticket;
  SymmetricKey session_key;
  Validity validity;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.service_id);
    a(2, s.ticket);
    a(3, s.session_key);
    a(4, s.validity);
  }
  friend bool operator==(const CredentialEntry&, const CredentialEntry&) = default;
};

struct CredentialCache {
  static constexpr auto kSchema = codec::SchemaId::CredentialCache;
  Principal client;
  std::optional<CredentialEntry> tgt;
  std::vector<CredentialEntry> service_creds;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.client);
    a(2, s.tgt);
    a(3, s.service_creds);
  }
  friend bool operator==(const CredentialCache&, const CredentialCache&) = default;

  const CredentialEntry* find_service(const std::string& service_id) const;
  void put_service(CredentialEntry entry);
  // Drops every entry with till + skew < now.
  void evict_expired(Timestamp now, std::uint64_t skew);
};

// Single line `HEX(TLV(CredentialCache))`. Load failures are CcacheParseError.
void save_ccache(const std::filesystem::path& path, const CredentialCache& cache);
CredentialCache load_ccache(const std::filesystem::path& path);

// Sends one encoded request to a KDC endpoint and returns the encoded reply.
using KdcExchange = std::function<Bytes(const Bytes&)>;

struct ClientConfig {
  std::uint64_t clock_skew = 300;
  std::uint64_t default_lifetime = 28800;
  std::uint64_t service_lifetime = 0;  // 0: default_lifetime
};

struct ServiceCredential {
  SealedTicket ticket;
  SymmetricKey session_key;
  Validity validity;
};

// Client side of the AS and TGS exchanges. One agent per principal; callers
// serialize exchanges.
class ClientAgent {
 public:
  ClientAgent(Principal principal, const crypto::CryptoProvider& provider, crypto::Rng& rng,
              ClientConfig config = {});

  AsRequest build_as_request(const ClientIdentity& identity, const std::string& tgs_id,
                             const Validity& requested);

  // Opens enc_part under K_c first, then pk-decrypts K_c,tgs with the
  // private key, and caches the TGT.
  void process_as_reply(const ClientIdentity& identity, const AsReply& reply,
                        const Nonce& sent_nonce1);

  // Full AS exchange: build, send, process.
  void kinit(const ClientIdentity& identity, const KdcExchange& as_endpoint, Timestamp now);

  TgsRequest build_tgs_request(const std::string& service_id, const Validity& requested,
                               Timestamp now);
  void process_tgs_reply(const TgsReply& reply, const TgsRequest& sent);

  // Returns a cached, unexpired service credential or runs the TGS
  // exchange for one.
  ServiceCredential get_service_ticket(const std::string& service_id, const Validity& requested,
                                       Timestamp now, const KdcExchange& tgs_endpoint);

  Validity default_validity(Timestamp now) const { return {now, now + config_.default_lifetime}; }
  Validity service_validity(Timestamp now) const {
    return {now, now + (config_.service_lifetime ? config_.service_lifetime
                                                 : config_.default_lifetime)};
  }

  CredentialCache& cache() { return cache_; }
  const CredentialCache& cache() const { return cache_; }
  void set_cache(CredentialCache cache) { cache_ = std::move(cache); }

  const Principal& principal() const { return principal_; }
  std::uint64_t kdc_requests() const { return kdc_requests_; }
  const ClientConfig& config() const { return config_; }

  // Encoded bytes of the most recent AS/TGS request, for replay experiments.
  const Bytes& last_tgs_request() const { return last_tgs_request_; }

 private:
  Principal principal_;
  const crypto::CryptoProvider& provider_;
  crypto::Rng& rng_;
  ClientConfig config_;
  CredentialCache cache_;
  std::uint64_t kdc_requests_ = 0;
  Bytes last_tgs_request_;
};

}  // namespace kerbpk::client
