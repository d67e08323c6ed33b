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

#include "kerbpk/protocol.hpp"

#include <algorithm>

namespace kerbpk {

namespace {

bool printable_ascii(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= 0x21 && c <= 0x7e; });
}

}  // namespace

bool is_valid_principal(const Principal& p) {
  return !p.name.empty() && !p.realm.empty() && p.realm.find('/') == std::string::npos &&
         printable_ascii(p.name) && printable_ascii(p.realm);
}

void require_valid_principal(const Principal& p) {
  if (!is_valid_principal(p)) fail(ErrorCode::InvalidPrincipal, "'" + p.to_string() + "'");
}

Bytes encode_error(const Error& e) {
  return codec::encode(ErrorReply{std::string(e.name()), e.detail()});
}

Bytes as_request_signed_bytes(const AsRequest& req) {
  AsRequest unsigned_copy = req;
  unsigned_copy.signature.clear();
  return codec::encode(unsigned_copy);
}

Bytes request_checksum(const TgsRequest& req) {
  TgsRequest body = req;
  body.authenticator = SealedBox{};
  return crypto::sha256(codec::encode(body));
}

Bytes request_checksum(const ApRequest& req) {
  ApRequest body = req;
  body.authenticator = SealedBox{};
  return crypto::sha256(codec::encode(body));
}

ErrorCode validate_times(const Validity& validity, Timestamp now, std::uint64_t skew) {
  // Written to avoid unsigned underflow near zero.
  if (now + skew < validity.from) return ErrorCode::TicketNotYetValid;
  if (now > validity.till + skew) return ErrorCode::TicketExpired;
  return ErrorCode::Ok;
}

std::string AuthenticatorReplayCache::key_of(const Authenticator& auth) {
  Bytes enc = codec::encode(auth);
  return std::string(enc.begin(), enc.end());
}

void AuthenticatorReplayCache::expire(Timestamp now) {
  while (!order_.empty() && order_.front().first + window_ < now) {
    seen_.erase(order_.front().second);
    order_.pop_front();
  }
}

bool AuthenticatorReplayCache::insert(const Authenticator& auth, Timestamp now) {
  std::lock_guard lock(mu_);
  expire(now);
  auto key = key_of(auth);
  if (!seen_.insert(key).second) return false;
  order_.emplace_back(now, std::move(key));
  return true;
}

bool AuthenticatorReplayCache::contains(const Authenticator& auth, Timestamp now) {
  std::lock_guard lock(mu_);
  expire(now);
  return seen_.count(key_of(auth)) != 0;
}

std::size_t AuthenticatorReplayCache::size() const {
  std::lock_guard lock(mu_);
  return seen_.size();
}

ErrorCode validate_authenticator(const Authenticator& auth, const Principal& expected,
                                 Timestamp now, std::uint64_t skew,
                                 AuthenticatorReplayCache& cache) {
  if (auth.client() != expected) return ErrorCode::PrincipalMismatch;
  Timestamp diff = now > auth.timestamp ? now - auth.timestamp : auth.timestamp - now;
  if (diff > skew) return ErrorCode::SkewExceeded;
  if (!cache.insert(auth, now)) return ErrorCode::ReplayDetected;
  return ErrorCode::Ok;
}

}  // namespace kerbpk
