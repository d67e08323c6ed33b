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

#include <gtest/gtest.h>

#include <set>

#include "kerbpk/crypto.hpp"
#include "support.hpp"

namespace kerbpk::testing {
namespace {

constexpr int kCases = 1000;
constexpr Usage kLabels[] = {Usage::Ticket,        Usage::AsEncPart,  Usage::TgsEncPart,
                             Usage::Authenticator, Usage::ApEncPart, Usage::Wrap};

class Provider : public ::testing::TestWithParam<std::string> {
 protected:
  void SetUp() override { p = crypto::make_provider(GetParam()); }
  std::unique_ptr<crypto::CryptoProvider> p;
  crypto::SeededRng rng{99};
};

TEST_P(Provider, PasswordKeysAreDeterministicAndSalted) {
  auto k1 = p->derive_key_from_password("pw", "alice", "R");
  EXPECT_EQ(k1, p->derive_key_from_password("pw", "alice", "R"));
  EXPECT_NE(k1, p->derive_key_from_password("pw", "alice", "S"));
  EXPECT_NE(k1, p->derive_key_from_password("pw", "bob", "R"));
  EXPECT_NE(k1, p->derive_key_from_password("pw2", "alice", "R"));
  // realm||name must not collide across the boundary.
  EXPECT_NE(p->derive_key_from_password("pw", "ab", "c"), p->derive_key_from_password("pw", "a", "bc"));
  EXPECT_EQ(k1.bytes.size(), p->key_length());
  EXPECT_EQ(k1.provider_id, p->id());
  EXPECT_KERB_ERROR(p->derive_key_from_password("", "alice", "R"), ErrorCode::EmptyPassword);
}

TEST_P(Provider, SealOpenRoundTrip) {
  std::mt19937_64 g(1);
  for (int i = 0; i < kCases; ++i) {
    auto k = p->random_session_key(rng);
    Bytes pt = random_bytes(g, 200);
    Usage label = kLabels[g() % 6];
    Bytes aad = random_bytes(g, 16);
    auto box = p->seal(k, pt, label, aad);
    ASSERT_EQ(box.label, label);
    ASSERT_EQ(p->open(k, box, label, aad), pt);
  }
}

TEST_P(Provider, WrongKeyFails) {
  std::mt19937_64 g(2);
  for (int i = 0; i < kCases; ++i) {
    auto k = p->random_session_key(rng);
    auto k2 = p->random_session_key(rng);
    ASSERT_NE(k, k2);
    auto box = p->seal(k, random_bytes(g, 64), Usage::Ticket);
    ASSERT_EQ(error_of([&] { p->open(k2, box, Usage::Ticket); }), ErrorCode::IntegrityError);
  }
}

TEST_P(Provider, WrongLabelFails) {
  std::mt19937_64 g(3);
  int cases = 0;
  for (int i = 0; i < kCases / 30 + 1; ++i) {
    auto k = p->random_session_key(rng);
    Bytes pt = random_bytes(g, 64);
    for (Usage sealed_as : kLabels) {
      auto box = p->seal(k, pt, sealed_as);
      for (Usage opened_as : kLabels) {
        if (opened_as == sealed_as) continue;
        // The label travels in the box; relabelling it must not help either.
        auto relabelled = box;
        relabelled.label = opened_as;
        ASSERT_EQ(error_of([&] { p->open(k, box, opened_as); }), ErrorCode::IntegrityError);
        ASSERT_EQ(error_of([&] { p->open(k, relabelled, opened_as); }), ErrorCode::IntegrityError);
        ++cases;
      }
    }
  }
  EXPECT_GE(cases, kCases);
}

TEST_P(Provider, WrongAssociatedDataFails) {
  auto k = p->random_session_key(rng);
  auto box = p->seal(k, to_bytes("payload"), Usage::Wrap, to_bytes("aad-1"));
  EXPECT_KERB_ERROR(p->open(k, box, Usage::Wrap, to_bytes("aad-2")), ErrorCode::IntegrityError);
}

TEST_P(Provider, EveryBitFlipOfA64ByteBoxFails) {
  auto k = p->random_session_key(rng);
  Bytes pt(64);
  for (std::size_t i = 0; i < pt.size(); ++i) pt[i] = static_cast<std::uint8_t>(i * 7);
  auto box = p->seal(k, pt, Usage::Ticket);
  for (std::size_t bit = 0; bit < box.ciphertext.size() * 8; ++bit) {
    auto tampered = box;
    tampered.ciphertext[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ASSERT_EQ(error_of([&] { p->open(k, tampered, Usage::Ticket); }), ErrorCode::IntegrityError)
        << "bit " << bit;
  }
}

TEST_P(Provider, TruncatedCiphertextFails) {
  auto k = p->random_session_key(rng);
  auto box = p->seal(k, to_bytes("some plaintext"), Usage::Ticket);
  for (std::size_t n = 0; n < box.ciphertext.size(); ++n) {
    auto cut = box;
    cut.ciphertext.resize(n);
    ASSERT_EQ(error_of([&] { p->open(k, cut, Usage::Ticket); }), ErrorCode::IntegrityError);
  }
}

TEST_P(Provider, ForeignKeyIsProviderMismatch) {
  std::string other = GetParam() == "toy" ? "standard" : "toy";
  auto q = crypto::make_provider(other);
  auto foreign = q->random_session_key(rng);
  EXPECT_KERB_ERROR(p->seal(foreign, to_bytes("x"), Usage::Ticket), ErrorCode::ProviderMismatch);
  auto k = p->random_session_key(rng);
  auto box = p->seal(k, to_bytes("x"), Usage::Ticket);
  EXPECT_KERB_ERROR(p->open(foreign, box, Usage::Ticket), ErrorCode::ProviderMismatch);
}

TEST_P(Provider, SignVerify) {
  std::mt19937_64 g(4);
  auto kp1 = p->generate_keypair(rng);
  auto kp2 = p->generate_keypair(rng);
  for (int i = 0; i < kCases; ++i) {
    Bytes m = random_bytes(g, 100);
    Bytes sig = p->sign(kp1.private_key, m);
    ASSERT_TRUE(p->verify(kp1.public_key, m, sig));
    Bytes altered = m;
    altered.push_back(0);
    ASSERT_FALSE(p->verify(kp1.public_key, altered, sig));
    ASSERT_FALSE(p->verify(kp2.public_key, m, sig));
    Bytes bad_sig = sig;
    bad_sig[g() % bad_sig.size()] ^= static_cast<std::uint8_t>(1u << (g() % 8));
    ASSERT_FALSE(p->verify(kp1.public_key, m, bad_sig));
  }
}

TEST_P(Provider, MalformedSigningKey) {
  EXPECT_KERB_ERROR(p->sign(Bytes{1, 2, 3}, to_bytes("m")), ErrorCode::MalformedKey);
  EXPECT_KERB_ERROR(p->verify(Bytes{1, 2, 3}, to_bytes("m"), Bytes(64)), ErrorCode::MalformedKey);
}

TEST_P(Provider, PublicKeyEncryption) {
  std::mt19937_64 g(5);
  auto kp1 = p->generate_keypair(rng);
  auto kp2 = p->generate_keypair(rng);
  for (int i = 0; i < kCases; ++i) {
    Bytes payload = random_bytes(g, p->key_length() + 16);
    Bytes ct = p->pk_encrypt(kp1.public_key, payload);
    ASSERT_EQ(p->pk_decrypt(kp1.private_key, ct), payload);
    ASSERT_EQ(error_of([&] { p->pk_decrypt(kp2.private_key, ct); }), ErrorCode::DecryptFailure);
  }
  Bytes too_big(p->pk_payload_limit() + 1);
  EXPECT_KERB_ERROR(p->pk_encrypt(kp1.public_key, too_big), ErrorCode::PayloadTooLarge);
  EXPECT_GE(p->pk_payload_limit(), p->key_length());
  Bytes ct = p->pk_encrypt(kp1.public_key, Bytes(p->pk_payload_limit(), 0x5a));
  ct.back() ^= 1;
  EXPECT_KERB_ERROR(p->pk_decrypt(kp1.private_key, ct), ErrorCode::DecryptFailure);
}

TEST_P(Provider, GeneratedKeyPairsSatisfyTheContract) {
  for (int i = 0; i < 50; ++i) {
    auto kp = p->generate_keypair(rng);
    ASSERT_FALSE(kp.public_key.empty());
    ASSERT_NE(kp.public_key, kp.private_key);
    Bytes m = to_bytes("invariant");
    ASSERT_TRUE(p->verify(kp.public_key, m, p->sign(kp.private_key, m)));
    Bytes k(p->key_length(), 0x11);
    ASSERT_EQ(p->pk_decrypt(kp.private_key, p->pk_encrypt(kp.public_key, k)), k);
  }
}

TEST_P(Provider, SeededGenerationIsReproducible) {
  crypto::SeededRng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    ASSERT_EQ(p->random_session_key(a), p->random_session_key(b));
    ASSERT_EQ(p->random_nonce(a), p->random_nonce(b));
  }
  if (GetParam() == "toy") {
    EXPECT_EQ(p->generate_keypair(a), p->generate_keypair(b));
    auto k = p->random_session_key(a);
    // Toy sealing is a pure function of its inputs.
    EXPECT_EQ(p->seal(k, to_bytes("x"), Usage::Wrap), p->seal(k, to_bytes("x"), Usage::Wrap));
  }
}

INSTANTIATE_TEST_SUITE_P(AllProviders, Provider, ::testing::Values("toy", "standard"),
                         [](const auto& info) { return info.param; });

TEST(StandardProvider, TenThousandNoncesAreDistinct) {
  auto p = crypto::make_standard_provider();
  crypto::SystemRng rng;
  std::set<Nonce> seen;
  for (int i = 0; i < 10000; ++i) ASSERT_TRUE(seen.insert(p->random_nonce(rng)).second);
}

TEST(StandardProvider, SealingIsRandomized) {
  auto p = crypto::make_standard_provider();
  crypto::SystemRng rng;
  auto k = p->random_session_key(rng);
  EXPECT_NE(p->seal(k, to_bytes("x"), Usage::Wrap), p->seal(k, to_bytes("x"), Usage::Wrap));
}

TEST(Providers, SelectionByName) {
  EXPECT_EQ(crypto::make_provider("toy")->id(), "toy");
  EXPECT_EQ(crypto::make_provider("standard")->id(), "standard");
  EXPECT_KERB_ERROR(crypto::make_provider("rot13"), ErrorCode::UsageError);
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(to_hex(crypto::sha256(to_bytes("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace kerbpk::testing
