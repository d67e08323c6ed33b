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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kerbpk {

// Every failure the library can report. The enumerator spelling is the
// machine-parseable name printed by the CLI and carried in ErrorReply frames.
enum class ErrorCode : std::uint16_t {
  Ok = 0,

  // codec
  FieldTooLarge,
  Truncated,
  UnknownTag,
  SchemaMismatch,
  TrailingGarbage,
  MalformedValue,

  // crypto
  EmptyPassword,
  IntegrityError,
  ProviderMismatch,
  MalformedKey,
  PayloadTooLarge,
  DecryptFailure,

  // protocol
  InvalidPrincipal,
  BadValidityWindow,
  TicketNotYetValid,
  TicketExpired,
  SkewExceeded,
  ReplayDetected,
  PrincipalMismatch,
  AddressMismatch,
  ChecksumMismatch,

  // kdc
  DuplicatePrincipal,
  UnknownPrincipal,
  UnknownService,
  NoCertificateOnFile,
  CertificateMismatch,
  SignatureInvalid,
  TicketIntegrityError,
  AuthenticatorIntegrityError,
  DatabaseCorrupt,

  // client
  WrongPassword,
  PkDecryptFailure,
  NonceMismatch,
  NoTgt,
  CcacheParseError,

  // secure context
  MalformedName,
  MissingBacking,
  UsageViolation,
  NoTicket,
  MutualAuthFailure,
  TokenIntegrityError,
  StateError,
  RequiredFlagMissing,
  HandshakeExceededLegBudget,
  WrapIntegrityError,
  OutOfSequence,
  WrongDirection,

  // transport and harness
  ConnectionClosed,
  Timeout,
  FrameTooLarge,
  ScenarioParseError,

  // gateway
  BackendUnreachable,
  PolicyParseError,
  AccessDenied,

  // misc
  IoError,
  UsageError,
  InternalError,
};

std::string_view error_name(ErrorCode code);

// Inverse of error_name; nullopt for names this build does not know.
std::optional<ErrorCode> parse_error_name(std::string_view name);

class Error : public std::runtime_error {
 public:
  explicit Error(ErrorCode code, const std::string& detail = {});

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }
  const std::string& detail() const noexcept { return detail_; }

  // Which exchange the failure belongs to (AS, TGS, handshake, channel),
  // empty when not attributed.
  const std::string& stage() const noexcept { return stage_; }
  Error& with_stage(std::string stage) {
    stage_ = std::move(stage);
    return *this;
  }

 private:
  ErrorCode code_;
  std::string detail_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail = {}) {
  throw Error(code, detail);
}

}  // namespace kerbpk
