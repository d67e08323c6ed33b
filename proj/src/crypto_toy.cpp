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

#include <openssl/hmac.h>

#include "kerbpk/crypto.hpp"
#include "kerbpk/error.hpp"

namespace kerbpk::crypto {

namespace {

constexpr std::size_t kKeyLength = 32;
constexpr std::size_t kTagLength = 16;
constexpr std::size_t kPkCheckLength = 8;
constexpr std::size_t kPkLimit = 256;

void append_u64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void append_str(Bytes& out, std::string_view s) {
  append_u64(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

void append(Bytes& out, ByteView b) { out.insert(out.end(), b.begin(), b.end()); }

Bytes hmac(ByteView key, ByteView data) {
  Bytes out(32);
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
       out.data(), &len);
  return out;
}

// SHA-256 in counter mode over (seed || counter).
Bytes keystream(ByteView seed, std::size_t n) {
  Bytes out;
  out.reserve(n + 32);
  Bytes block(seed.begin(), seed.end());
  std::size_t base = block.size();
  for (std::uint64_t ctr = 0; out.size() < n; ++ctr) {
    block.resize(base);
    append_u64(block, ctr);
    append(out, sha256(block));
  }
  out.resize(n);
  return out;
}

Bytes xor_with(ByteView data, ByteView mask) {
  Bytes out(data.begin(), data.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= mask[i];
  return out;
}

Bytes public_from_private(ByteView private_key) {
  if (private_key.size() != kKeyLength) fail(ErrorCode::MalformedKey, "toy private key length");
  Bytes in = to_bytes("toy-pub");
  append(in, private_key);
  return sha256(in);
}

class ToyProvider final : public CryptoProvider {
 public:
  std::string_view id() const override { return "toy"; }
  std::size_t key_length() const override { return kKeyLength; }
  std::size_t pk_payload_limit() const override { return kPkLimit; }

 protected:
  Bytes do_derive(std::string_view password, std::string_view name,
                  std::string_view realm) const override {
    Bytes in = to_bytes("toy-pw");
    append_str(in, realm);
    append_str(in, name);
    append_str(in, password);
    return sha256(in);
  }

  Bytes do_seal(ByteView key, ByteView plaintext, Usage label, ByteView associated) const override {
    Bytes seed(key.begin(), key.end());
    seed.push_back(static_cast<std::uint8_t>(label));
    Bytes out = xor_with(plaintext, keystream(seed, plaintext.size()));
    Bytes tag = hmac(key, tag_input(label, associated, out));
    out.insert(out.end(), tag.begin(), tag.begin() + kTagLength);
    return out;
  }

  Bytes do_open(ByteView key, ByteView ciphertext, Usage label, ByteView associated) const override {
    if (ciphertext.size() < kTagLength) fail(ErrorCode::IntegrityError, "ciphertext too short");
    ByteView body = ciphertext.first(ciphertext.size() - kTagLength);
    ByteView tag = ciphertext.last(kTagLength);
    Bytes expected = hmac(key, tag_input(label, associated, body));
    if (!constant_time_equal(ByteView(expected).first(kTagLength), tag)) {
      fail(ErrorCode::IntegrityError, "tag mismatch");
    }
    Bytes seed(key.begin(), key.end());
    seed.push_back(static_cast<std::uint8_t>(label));
    return xor_with(body, keystream(seed, body.size()));
  }

  Bytes do_sign(ByteView private_key, ByteView message) const override {
    return hmac(public_from_private(private_key), message);
  }

  bool do_verify(ByteView public_key, ByteView message, ByteView signature) const override {
    if (public_key.size() != kKeyLength) fail(ErrorCode::MalformedKey, "toy public key length");
    return constant_time_equal(hmac(public_key, message), signature);
  }

  Bytes do_pk_encrypt(ByteView public_key, ByteView payload) const override {
    if (public_key.size() != kKeyLength) fail(ErrorCode::MalformedKey, "toy public key length");
    Bytes out = xor_with(payload, keystream(mask_seed(public_key), payload.size()));
    Bytes check = check_value(public_key, payload);
    out.insert(out.end(), check.begin(), check.begin() + kPkCheckLength);
    return out;
  }

  Bytes do_pk_decrypt(ByteView private_key, ByteView ciphertext) const override {
    Bytes pub = public_from_private(private_key);
    if (ciphertext.size() < kPkCheckLength) fail(ErrorCode::DecryptFailure, "ciphertext too short");
    ByteView body = ciphertext.first(ciphertext.size() - kPkCheckLength);
    Bytes plain = xor_with(body, keystream(mask_seed(pub), body.size()));
    Bytes check = check_value(pub, plain);
    if (!constant_time_equal(ByteView(check).first(kPkCheckLength), ciphertext.last(kPkCheckLength))) {
      fail(ErrorCode::DecryptFailure, "check value mismatch");
    }
    return plain;
  }

  KeyPair do_generate_keypair(Rng& rng) const override {
    Bytes priv = rng.bytes(kKeyLength);
    return KeyPair{public_from_private(priv), priv};
  }

 private:
  static Bytes tag_input(Usage label, ByteView associated, ByteView body) {
    Bytes in = to_bytes("toy-tag");
    in.push_back(static_cast<std::uint8_t>(label));
    append_u64(in, associated.size());
    append(in, associated);
    append(in, body);
    return in;
  }

  static Bytes mask_seed(ByteView public_key) {
    Bytes in = to_bytes("toy-pk");
    append(in, public_key);
    return sha256(in);
  }

  static Bytes check_value(ByteView public_key, ByteView payload) {
    Bytes in = to_bytes("toy-pk-check");
    append(in, public_key);
    append(in, payload);
    return sha256(in);
  }
};

}  // namespace

std::unique_ptr<CryptoProvider> make_toy_provider() { return std::make_unique<ToyProvider>(); }

}  // namespace kerbpk::crypto
