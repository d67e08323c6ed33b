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

#include "kerbpk/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include "kerbpk/error.hpp"

namespace kerbpk::crypto {

const char* usage_name(Usage u) {
  switch (u) {
    case Usage::Ticket: return "TICKET";
    case Usage::AsEncPart: return "AS_ENC_PART";
    case Usage::TgsEncPart: return "TGS_ENC_PART";
    case Usage::Authenticator: return "AUTHENTICATOR";
    case Usage::ApEncPart: return "AP_ENC_PART";
    case Usage::Wrap: return "WRAP";
  }
  return "UNKNOWN";
}

std::uint64_t Rng::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

Bytes Rng::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

void SeededRng::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = engine_();
    for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
      out[i] = static_cast<std::uint8_t>(word >> (8 * k));
    }
  }
}

void SystemRng::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    fail(ErrorCode::InternalError, "RAND_bytes failed");
  }
}

Bytes sha256(ByteView data) {
  Bytes out(32);
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::InternalError, "sha256");
  }
  return out;
}

void CryptoProvider::check_key(const SymmetricKey& key) const {
  if (key.provider_id != id()) {
    fail(ErrorCode::ProviderMismatch, "key from provider '" + key.provider_id + "'");
  }
  if (key.bytes.size() != key_length()) fail(ErrorCode::MalformedKey, "symmetric key length");
}

SymmetricKey CryptoProvider::derive_key_from_password(std::string_view password,
                                                      std::string_view principal_name,
                                                      std::string_view realm) const {
  if (password.empty()) fail(ErrorCode::EmptyPassword);
  return SymmetricKey{std::string(id()), do_derive(password, principal_name, realm)};
}

SealedBox CryptoProvider::seal(const SymmetricKey& key, ByteView plaintext, Usage label,
                               ByteView associated) const {
  check_key(key);
  return SealedBox{label, do_seal(key.bytes, plaintext, label, associated)};
}

Bytes CryptoProvider::open(const SymmetricKey& key, const SealedBox& box, Usage label,
                           ByteView associated) const {
  check_key(key);
  if (box.label != label) fail(ErrorCode::IntegrityError, "usage label mismatch");
  return do_open(key.bytes, box.ciphertext, label, associated);
}

Bytes CryptoProvider::sign(ByteView private_key, ByteView message) const {
  return do_sign(private_key, message);
}

bool CryptoProvider::verify(ByteView public_key, ByteView message, ByteView signature) const {
  return do_verify(public_key, message, signature);
}

Bytes CryptoProvider::pk_encrypt(ByteView public_key, ByteView payload) const {
  if (payload.size() > pk_payload_limit()) {
    fail(ErrorCode::PayloadTooLarge, std::to_string(payload.size()) + " bytes");
  }
  return do_pk_encrypt(public_key, payload);
}

Bytes CryptoProvider::pk_decrypt(ByteView private_key, ByteView ciphertext) const {
  return do_pk_decrypt(private_key, ciphertext);
}

KeyPair CryptoProvider::generate_keypair(Rng& rng) const { return do_generate_keypair(rng); }

SymmetricKey CryptoProvider::random_session_key(Rng& rng) const {
  return SymmetricKey{std::string(id()), rng.bytes(key_length())};
}

Nonce CryptoProvider::random_nonce(Rng& rng) const {
  Nonce n{};
  rng.fill(n);
  return n;
}

std::unique_ptr<CryptoProvider> make_provider(std::string_view name) {
  if (name == "toy") return make_toy_provider();
  if (name == "standard") return make_standard_provider();
  fail(ErrorCode::UsageError, "unknown crypto provider '" + std::string(name) + "'");
}

}  // namespace kerbpk::crypto
