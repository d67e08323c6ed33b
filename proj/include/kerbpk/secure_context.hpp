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

// Two-leg security-context establishment over the AP exchange, and
// sequence-numbered wrap/unwrap on the established context.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>

#include "kerbpk/client.hpp"
#include "kerbpk/crypto.hpp"
#include "kerbpk/protocol.hpp"

namespace kerbpk::gss {

enum class NameType : std::uint8_t { HostBasedService = 1, PrincipalName = 2 };
enum class Mechanism : std::uint8_t { KerberosLike = 1 };

// Parsed but not yet mechanism-specific name.
struct InternalName {
  NameType type = NameType::PrincipalName;
  std::string primary;  // service for host-based names, user otherwise
  std::string instance;  // host for host-based names
  std::string realm;  // empty means the default realm
};

// MalformedName on empty input, empty components, or embedded NUL.
InternalName import_name(std::string_view input, NameType type);

class MechanismName {
 public:
  const Principal& principal() const { return principal_; }
  NameType name_type() const { return name_type_; }
  Mechanism mechanism() const { return mechanism_; }
  friend bool operator==(const MechanismName&, const MechanismName&) = default;

 private:
  friend MechanismName canonicalize_name(const InternalName&, Mechanism, const std::string&);
  MechanismName() = default;

  Principal principal_;
  NameType name_type_ = NameType::PrincipalName;
  Mechanism mechanism_ = Mechanism::KerberosLike;
};

// "svc@host" becomes principal "svc/host"; realm falls back to
// `default_realm`.
MechanismName canonicalize_name(const InternalName& name, Mechanism mechanism,
                                const std::string& default_realm);

enum class CredUsage : std::uint8_t { Initiate = 1, Accept = 2 };

using CredentialBacking =
    std::variant<std::monostate, const client::CredentialCache*, SymmetricKey>;

class ContextCredential {
 public:
  const MechanismName& name() const { return name_; }
  CredUsage usage() const { return usage_; }
  // Initiate credentials only.
  const client::CredentialCache& cache() const;
  // Accept credentials only.
  const SymmetricKey& service_key() const;

 private:
  friend ContextCredential acquire_credential(const MechanismName&, CredUsage, CredentialBacking);
  ContextCredential(MechanismName name, CredUsage usage, CredentialBacking backing)
      : name_(std::move(name)), usage_(usage), backing_(std::move(backing)) {}

  MechanismName name_;
  CredUsage usage_;
  CredentialBacking backing_;
};

// Initiate needs a credential cache, Accept a service key; MissingBacking
// otherwise.
ContextCredential acquire_credential(const MechanismName& name, CredUsage usage,
                                     CredentialBacking backing);

struct ReqFlags {
  bool mutual = false;
  bool replay = false;
  bool sequence = false;

  static ReqFlags all() { return {true, true, true}; }
  bool complete() const { return mutual && replay && sequence; }
  std::uint32_t to_bits() const;
  static ReqFlags from_bits(std::uint32_t bits);
  friend bool operator==(const ReqFlags&, const ReqFlags&) = default;
};

inline constexpr std::uint32_t kFlagMutual = 1u << 1;
inline constexpr std::uint32_t kFlagReplay = 1u << 2;
inline constexpr std::uint32_t kFlagSequence = 1u << 3;

enum class ContextState : std::uint8_t { Initial, AwaitingReply, Complete, Failed };
enum class Role : std::uint8_t { Initiator, Acceptor };
enum class Direction : std::uint8_t { InitiatorToAcceptor = 1, AcceptorToInitiator = 2 };
enum class Status : std::uint8_t { ContinueNeeded, Complete };

const char* state_name(ContextState s);

// Remembers the most recent `capacity` sequence numbers.
class SequenceWindow {
 public:
  static constexpr std::size_t kDefaultCapacity = 4096;
  explicit SequenceWindow(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  bool contains(std::uint64_t seq) const { return seen_.count(seq) != 0; }
  void insert(std::uint64_t seq);
  std::size_t size() const { return seen_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::unordered_set<std::uint64_t> seen_;
  std::deque<std::uint64_t> order_;
};

class SecurityContext {
 public:
  explicit SecurityContext(const crypto::CryptoProvider& provider) : provider_(&provider) {}

  ContextState state = ContextState::Initial;
  Role role = Role::Initiator;
  ReqFlags flags;
  SymmetricKey session_key;
  std::optional<SymmetricKey> subkey;
  std::uint64_t send_seq = 0;
  std::uint64_t recv_seq = 0;
  SequenceWindow replay_window;
  Principal peer;

  const crypto::CryptoProvider& provider() const { return *provider_; }

  // Initiator bookkeeping between legs.
  Timestamp sent_ts1 = 0;
  std::uint64_t sent_initial_seq = 0;

 private:
  const crypto::CryptoProvider* provider_;
};

struct ContextToken {
  static constexpr auto kSchema = codec::SchemaId::ContextToken;
  std::uint8_t leg = 0;
  Bytes payload;  // encode(ApRequest) on leg 1, encode(ApReply) on leg 2

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.leg);
    a(2, s.payload);
  }
  friend bool operator==(const ContextToken&, const ContextToken&) = default;
};

struct WrapToken {
  static constexpr auto kSchema = codec::SchemaId::WrapToken;
  std::uint64_t seq = 0;
  Direction direction = Direction::InitiatorToAcceptor;
  SealedBox box;  // payload under the subkey, label Wrap, AAD = seq || direction

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.seq);
    a(2, s.direction);
    a(3, s.box);
  }
  friend bool operator==(const WrapToken&, const WrapToken&) = default;
};

struct StepResult {
  std::optional<Bytes> output_token;
  Status status = Status::ContinueNeeded;
};

// Supplies a service ticket for the target principal name.
using TicketSource = std::function<client::ServiceCredential(const std::string&, Timestamp)>;

// First call (no input): obtains a ticket and emits the leg-1 token. Second
// call: consumes the leg-2 token and completes. Failures leave the context
// Failed. Without a ticket source the credential cache must already hold a
// ticket for the target.
StepResult init_security_context(SecurityContext& ctx, const ContextCredential& cred,
                                 const MechanismName& target, ReqFlags req_flags,
                                 const std::optional<Bytes>& input_token, Timestamp now,
                                 crypto::Rng& rng, const TicketSource& tickets = {});

struct AcceptConfig {
  std::uint64_t clock_skew = 300;
  bool enforce_address = false;
  std::string peer_address;
};

StepResult accept_security_context(SecurityContext& ctx, const ContextCredential& cred,
                                   const Bytes& input_token, Timestamp now, crypto::Rng& rng,
                                   AuthenticatorReplayCache& replay_cache,
                                   const AcceptConfig& config = {});

struct InitiatorParts {
  SecurityContext& ctx;
  const ContextCredential& cred;
  const MechanismName& target;
  ReqFlags flags;
  crypto::Rng& rng;
  TicketSource tickets;
};

struct AcceptorParts {
  SecurityContext& ctx;
  const ContextCredential& cred;
  crypto::Rng& rng;
  AuthenticatorReplayCache& replay_cache;
  AcceptConfig config;
};

// Carries one token to the peer; nullopt when the token was lost.
using TokenTransport = std::function<std::optional<Bytes>(const Bytes&, Direction)>;

inline constexpr int kLegBudget = 8;

// Exchanges tokens until both sides report Complete and returns the number
// of legs. A lost token raises Timeout without touching either state; any
// other failure marks both contexts Failed.
int run_handshake(InitiatorParts initiator, AcceptorParts acceptor, Timestamp now,
                  const TokenTransport& transport, int leg_budget = kLegBudget);

WrapToken wrap(SecurityContext& ctx, ByteView payload);
// Checks integrity, then direction, then replay, then sequence.
Bytes unwrap(SecurityContext& ctx, const WrapToken& token);

}  // namespace kerbpk::gss
