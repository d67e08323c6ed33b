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

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

#include "kerbpk/bytes.hpp"
#include "kerbpk/codec.hpp"

namespace kerbpk::crypto {

// Usage labels partition sealed material: a box sealed under one label never
// opens under another, even with the right key.
enum class Usage : std::uint8_t {
  Ticket = 1,
  AsEncPart = 2,
  TgsEncPart = 3,
  Authenticator = 4,
  ApEncPart = 5,
  Wrap = 6,
};

const char* usage_name(Usage u);

using Nonce = std::array<std::uint8_t, 8>;

struct SymmetricKey {
  static constexpr auto kSchema = codec::SchemaId::SymmetricKey;
  std::string provider_id;
  Bytes bytes;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.provider_id);
    a(2, s.bytes);
  }
  friend bool operator==(const SymmetricKey&, const SymmetricKey&) = default;
};

struct KeyPair {
  static constexpr auto kSchema = codec::SchemaId::KeyPair;
  Bytes public_key;
  Bytes private_key;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.public_key);
    a(2, s.private_key);
  }
  friend bool operator==(const KeyPair&, const KeyPair&) = default;
};

struct SealedBox {
  static constexpr auto kSchema = codec::SchemaId::SealedBox;
  Usage label = Usage::Ticket;
  Bytes ciphertext;

  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.label);
    a(2, s.ciphertext);
  }
  friend bool operator==(const SealedBox&, const SealedBox&) = default;
};

// Source of key, nonce, and sequence-number randomness. One owner at a time;
// SharedRng adds a lock for components that serve concurrent sessions.
class Rng {
 public:
  virtual ~Rng() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64();
  Bytes bytes(std::size_t n);
};

// Deterministic stream for the toy provider and the simulator.
class SeededRng final : public Rng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mt19937_64 engine_;
};

// Operating-system entropy via OpenSSL's CSPRNG.
class SystemRng final : public Rng {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

class SharedRng final : public Rng {
 public:
  explicit SharedRng(std::unique_ptr<Rng> inner) : inner_(std::move(inner)) {}
  void fill(std::span<std::uint8_t> out) override {
    std::lock_guard lock(mu_);
    inner_->fill(out);
  }

 private:
  std::mutex mu_;
  std::unique_ptr<Rng> inner_;
};

// SHA-256, used for request checksums independent of the active provider.
Bytes sha256(ByteView data);

// Cryptographic contract shared by the toy and standard providers. Providers
// are immutable after construction and safe to call from any thread.
class CryptoProvider {
 public:
  virtual ~CryptoProvider() = default;

  virtual std::string_view id() const = 0;
  virtual std::size_t key_length() const = 0;
  // Largest payload pk_encrypt accepts; never below key_length().
  virtual std::size_t pk_payload_limit() const = 0;

  SymmetricKey derive_key_from_password(std::string_view password, std::string_view principal_name,
                                        std::string_view realm) const;

  SealedBox seal(const SymmetricKey& key, ByteView plaintext, Usage label,
                 ByteView associated = {}) const;
  Bytes open(const SymmetricKey& key, const SealedBox& box, Usage label,
             ByteView associated = {}) const;

  Bytes sign(ByteView private_key, ByteView message) const;
  bool verify(ByteView public_key, ByteView message, ByteView signature) const;

  Bytes pk_encrypt(ByteView public_key, ByteView payload) const;
  Bytes pk_decrypt(ByteView private_key, ByteView ciphertext) const;

  KeyPair generate_keypair(Rng& rng) const;
  SymmetricKey random_session_key(Rng& rng) const;
  Nonce random_nonce(Rng& rng) const;

 protected:
  virtual Bytes do_derive(std::string_view password, std::string_view name,
                          std::string_view realm) const = 0;
  virtual Bytes do_seal(ByteView key, ByteView plaintext, Usage label, ByteView associated) const = 0;
  // Throws IntegrityError on any authentication failure.
  virtual Bytes do_open(ByteView key, ByteView ciphertext, Usage label, ByteView associated) const = 0;
  virtual Bytes do_sign(ByteView private_key, ByteView message) const = 0;
  virtual bool do_verify(ByteView public_key, ByteView message, ByteView signature) const = 0;
  virtual Bytes do_pk_encrypt(ByteView public_key, ByteView payload) const = 0;
  virtual Bytes do_pk_decrypt(ByteView private_key, ByteView ciphertext) const = 0;
  virtual KeyPair do_generate_keypair(Rng& rng) const = 0;

 private:
  void check_key(const SymmetricKey& key) const;
};

// Insecure, fast, fully deterministic. Keystream-XOR sealing with a keyed-hash
// tag; keyed-hash signatures; XOR-mask public-key encryption.
std::unique_ptr<CryptoProvider> make_toy_provider();

// AES-256-GCM sealing, PBKDF2-HMAC-SHA256 password keys, Ed25519 signatures,
// and X25519 + HKDF + AES-GCM public-key encryption (OpenSSL).
std::unique_ptr<CryptoProvider> make_standard_provider();

// "toy" or "standard"; UsageError otherwise.
std::unique_ptr<CryptoProvider> make_provider(std::string_view name);

}  // namespace kerbpk::crypto
