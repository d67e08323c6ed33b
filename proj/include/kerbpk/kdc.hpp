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

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "kerbpk/crypto.hpp"
#include "kerbpk/protocol.hpp"

namespace kerbpk::kdc {

enum class PrincipalKind : std::uint8_t { User = 1, Service = 2, TgsService = 3 };

const char* kind_name(PrincipalKind k);

struct PrincipalRecord {
  static constexpr auto kSchema = codec::SchemaId::PrincipalRecord;
  Principal principal;
  SymmetricKey long_term_key;
  std::optional<Certificate> certificate;
  PrincipalKind kind = PrincipalKind::User;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.principal);
    a(2, s.long_term_key);
    a(3, s.certificate);
    a(4, s.kind);
  }
  friend bool operator==(const PrincipalRecord&, const PrincipalRecord&) = default;
};

using kerbpk::tgs_name;

// The KDC's principal table: one long-term key per principal, so the key
// count grows as users + services + 1 rather than users * services.
// Read-mostly; registration takes an exclusive lock.
class PrincipalDb {
 public:
  // New database holding only the realm's TGS record.
  static PrincipalDb create(const std::string& realm, const crypto::CryptoProvider& provider,
                            crypto::Rng& rng);
  // One `HEX(TLV(PrincipalRecord))` per line. DatabaseCorrupt on bad content.
  static PrincipalDb load(const std::filesystem::path& path);
  // Writes to a temporary sibling and renames over `path`.
  void save(const std::filesystem::path& path) const;

  PrincipalDb(PrincipalDb&& other) noexcept;
  PrincipalDb& operator=(PrincipalDb&& other) noexcept;

  PrincipalRecord register_user(const crypto::CryptoProvider& provider, const std::string& name,
                                const std::string& password, const Bytes& public_key,
                                crypto::Rng& rng);
  PrincipalRecord register_service(const crypto::CryptoProvider& provider,
                                   const std::string& name, crypto::Rng& rng);

  std::optional<PrincipalRecord> find(const std::string& name) const;
  std::vector<PrincipalRecord> records() const;

  const std::string& realm() const { return realm_; }
  Principal tgs_principal() const { return {tgs_name(realm_), realm_}; }

  std::size_t key_count() const;
  std::size_t count(PrincipalKind kind) const;

 private:
  PrincipalDb() = default;
  void insert(PrincipalRecord rec);

  std::string realm_;
  std::map<std::string, PrincipalRecord> records_;
  mutable std::shared_mutex mu_;
};

struct KdcConfig {
  std::uint64_t max_ticket_lifetime = 28800;
  std::uint64_t clock_skew = 300;
  std::uint64_t replay_window = 600;
  bool enforce_address = false;
};

// Authentication Server and Ticket-Granting Server over one database.
// Handlers are safe to call concurrently.
class Kdc {
 public:
  Kdc(PrincipalDb& db, const crypto::CryptoProvider& provider, KdcConfig config, crypto::Rng& rng);

  AsReply handle_as_request(const AsRequest& req, Timestamp now,
                            const std::string& peer_address = {});
  TgsReply handle_tgs_request(const TgsRequest& req, Timestamp now,
                              const std::string& peer_address = {});

  // Frame-level entry points: decode, dispatch, and encode either the reply
  // or an ErrorReply. `error_out` receives the failure, if any.
  Bytes serve_as(ByteView request, Timestamp now, const std::string& peer_address,
                 std::optional<Error>* error_out = nullptr);
  Bytes serve_tgs(ByteView request, Timestamp now, const std::string& peer_address,
                  std::optional<Error>* error_out = nullptr);

  std::uint64_t as_requests() const { return as_requests_; }
  std::uint64_t tgs_requests() const { return tgs_requests_; }
  std::uint64_t tickets_issued() const { return tickets_issued_; }

  const KdcConfig& config() const { return config_; }
  PrincipalDb& db() { return db_; }

 private:
  Validity grant(const Validity& requested, Timestamp now, Timestamp cap) const;
  SymmetricKey fresh_key();
  SealedTicket issue_ticket(const PrincipalRecord& server, const TicketBody& body) const;

  PrincipalDb& db_;
  const crypto::CryptoProvider& provider_;
  KdcConfig config_;
  crypto::Rng& rng_;
  std::mutex rng_mu_;
  AuthenticatorReplayCache replay_cache_;
  std::atomic<std::uint64_t> as_requests_{0};
  std::atomic<std::uint64_t> tgs_requests_{0};
  std::atomic<std::uint64_t> tickets_issued_{0};
};

}  // namespace kerbpk::kdc
