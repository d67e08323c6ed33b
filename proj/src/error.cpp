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

#include "kerbpk/error.hpp"

#include <array>
#include <utility>

namespace kerbpk {

namespace {

constexpr std::array kNames = {
    std::pair{ErrorCode::Ok, "Ok"},
    std::pair{ErrorCode::FieldTooLarge, "FieldTooLarge"},
    std::pair{ErrorCode::Truncated, "Truncated"},
    std::pair{ErrorCode::UnknownTag, "UnknownTag"},
    std::pair{ErrorCode::SchemaMismatch, "SchemaMismatch"},
    std::pair{ErrorCode::TrailingGarbage, "TrailingGarbage"},
    std::pair{ErrorCode::MalformedValue, "MalformedValue"},
    std::pair{ErrorCode::EmptyPassword, "EmptyPassword"},
    std::pair{ErrorCode::IntegrityError, "IntegrityError"},
    std::pair{ErrorCode::ProviderMismatch, "ProviderMismatch"},
    std::pair{ErrorCode::MalformedKey, "MalformedKey"},
    std::pair{ErrorCode::PayloadTooLarge, "PayloadTooLarge"},
    std::pair{ErrorCode::DecryptFailure, "DecryptFailure"},
    std::pair{ErrorCode::InvalidPrincipal, "InvalidPrincipal"},
    std::pair{ErrorCode::BadValidityWindow, "BadValidityWindow"},
    std::pair{ErrorCode::TicketNotYetValid, "TicketNotYetValid"},
    std::pair{ErrorCode::TicketExpired, "TicketExpired"},
    std::pair{ErrorCode::SkewExceeded, "SkewExceeded"},
    std::pair{ErrorCode::ReplayDetected, "ReplayDetected"},
    std::pair{ErrorCode::PrincipalMismatch, "PrincipalMismatch"},
    std::pair{ErrorCode::AddressMismatch, "AddressMismatch"},
    std::pair{ErrorCode::ChecksumMismatch, "ChecksumMismatch"},
    std::pair{ErrorCode::DuplicatePrincipal, "DuplicatePrincipal"},
    std::pair{ErrorCode::UnknownPrincipal, "UnknownPrincipal"},
    std::pair{ErrorCode::UnknownService, "UnknownService"},
    std::pair{ErrorCode::NoCertificateOnFile, "NoCertificateOnFile"},
    std::pair{ErrorCode::CertificateMismatch, "CertificateMismatch"},
    std::pair{ErrorCode::SignatureInvalid, "SignatureInvalid"},
    std::pair{ErrorCode::TicketIntegrityError, "TicketIntegrityError"},
    std::pair{ErrorCode::AuthenticatorIntegrityError, "AuthenticatorIntegrityError"},
    std::pair{ErrorCode::DatabaseCorrupt, "DatabaseCorrupt"},
    std::pair{ErrorCode::WrongPassword, "WrongPassword"},
    std::pair{ErrorCode::PkDecryptFailure, "PkDecryptFailure"},
    std::pair{ErrorCode::NonceMismatch, "NonceMismatch"},
    std::pair{ErrorCode::NoTgt, "NoTgt"},
    std::pair{ErrorCode::CcacheParseError, "CcacheParseError"},
    std::pair{ErrorCode::MalformedName, "MalformedName"},
    std::pair{ErrorCode::MissingBacking, "MissingBacking"},
    std::pair{ErrorCode::UsageViolation, "UsageViolation"},
    std::pair{ErrorCode::NoTicket, "NoTicket"},
    std::pair{ErrorCode::MutualAuthFailure, "MutualAuthFailure"},
    std::pair{ErrorCode::TokenIntegrityError, "TokenIntegrityError"},
    std::pair{ErrorCode::StateError, "StateError"},
    std::pair{ErrorCode::RequiredFlagMissing, "RequiredFlagMissing"},
    std::pair{ErrorCode::HandshakeExceededLegBudget, "HandshakeExceededLegBudget"},
    std::pair{ErrorCode::WrapIntegrityError, "WrapIntegrityError"},
    std::pair{ErrorCode::OutOfSequence, "OutOfSequence"},
    std::pair{ErrorCode::WrongDirection, "WrongDirection"},
    std::pair{ErrorCode::ConnectionClosed, "ConnectionClosed"},
    std::pair{ErrorCode::Timeout, "Timeout"},
    std::pair{ErrorCode::FrameTooLarge, "FrameTooLarge"},
    std::pair{ErrorCode::ScenarioParseError, "ScenarioParseError"},
    std::pair{ErrorCode::BackendUnreachable, "BackendUnreachable"},
    std::pair{ErrorCode::PolicyParseError, "PolicyParseError"},
    std::pair{ErrorCode::AccessDenied, "AccessDenied"},
    std::pair{ErrorCode::IoError, "IoError"},
    std::pair{ErrorCode::UsageError, "UsageError"},
    std::pair{ErrorCode::InternalError, "InternalError"},
};

std::string compose(ErrorCode code, const std::string& detail) {
  std::string msg(error_name(code));
  if (!detail.empty()) {
    msg += ": ";
    msg += detail;
  }
  return msg;
}

}  // namespace

std::string_view error_name(ErrorCode code) {
  for (const auto& [c, n] : kNames) {
    if (c == code) return n;
  }
  return "InternalError";
}

std::optional<ErrorCode> parse_error_name(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (name == n) return c;
  }
  return std::nullopt;
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(compose(code, detail)), code_(code), detail_(detail) {}

}  // namespace kerbpk
