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

#include <gtest/gtest.h>

#include <functional>
#include <memory>
#include <random>
#include <string>

#include "kerbpk/client.hpp"
#include "kerbpk/crypto.hpp"
#include "kerbpk/kdc.hpp"
#include "kerbpk/protocol.hpp"
#include "kerbpk/secure_context.hpp"

namespace kerbpk::testing {

inline constexpr Timestamp kNow = 1'700'000'000;
inline const std::string kRealm = "EXAMPLE.ORG";

// Runs `body` and returns the ErrorCode it threw, or Ok.
inline ErrorCode error_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

#define EXPECT_KERB_ERROR(expr, code) \
  EXPECT_EQ(::kerbpk::error_name(::kerbpk::testing::error_of([&] { (void)(expr); })), \
            ::kerbpk::error_name(code))

inline Bytes random_bytes(std::mt19937_64& g, std::size_t max_len) {
  std::size_t n = g() % (max_len + 1);
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(g());
  return b;
}

inline std::string random_name(std::mt19937_64& g, std::size_t max_len = 12) {
  static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789-_.";
  std::size_t n = 1 + g() % max_len;
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += alphabet[g() % (sizeof(alphabet) - 1)];
  return s;
}

inline std::unique_ptr<crypto::CryptoProvider> provider_named(const std::string& name) {
  return crypto::make_provider(name);
}

// One realm in memory: database, KDC and a registered user.
struct Realm {
  explicit Realm(const std::string& provider_name, std::uint64_t seed = 7)
      : provider(crypto::make_provider(provider_name)),
        rng(seed),
        db(kdc::PrincipalDb::create(kRealm, *provider, rng)),
        kdc(db, *provider, kdc::KdcConfig{}, rng) {}

  client::ClientIdentity add_user(const std::string& name, const std::string& password) {
    auto kp = provider->generate_keypair(rng);
    auto rec = db.register_user(*provider, name, password, kp.public_key, rng);
    return {rec.principal, password, kp, *rec.certificate};
  }

  kdc::PrincipalRecord add_service(const std::string& name) {
    return db.register_service(*provider, name, rng);
  }

  SymmetricKey tgs_key() const { return db.find(tgs_name(kRealm))->long_term_key; }

  client::KdcExchange as_endpoint(Timestamp now = kNow) {
    return [this, now](const Bytes& req) { return kdc.serve_as(req, now, "client"); };
  }
  client::KdcExchange tgs_endpoint(Timestamp now = kNow) {
    return [this, now](const Bytes& req) { return kdc.serve_tgs(req, now, "client"); };
  }

  std::unique_ptr<crypto::CryptoProvider> provider;
  crypto::SeededRng rng;
  kdc::PrincipalDb db;
  kdc::Kdc kdc;
};

inline gss::MechanismName host_service(const std::string& input) {
  return gss::canonicalize_name(gss::import_name(input, gss::NameType::HostBasedService),
                                gss::Mechanism::KerberosLike, kRealm);
}

inline gss::MechanismName user_name(const std::string& input) {
  return gss::canonicalize_name(gss::import_name(input, gss::NameType::PrincipalName),
                                gss::Mechanism::KerberosLike, kRealm);
}

}  // namespace kerbpk::testing
