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

#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>

#include "kerbpk/crypto.hpp"
#include "kerbpk/error.hpp"

namespace kerbpk::crypto {

namespace {

constexpr std::size_t kKeyLength = 32;
constexpr std::size_t kIvLength = 12;
constexpr std::size_t kTagLength = 16;
constexpr std::size_t kRawKeyLength = 32;
constexpr std::size_t kPkLimit = 1024;
constexpr int kPbkdf2Iterations = 4096;

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;

void check(int rc, const char* what) {
  if (rc != 1) fail(ErrorCode::InternalError, what);
}

Pkey private_key(int type, ByteView raw) {
  Pkey k(EVP_PKEY_new_raw_private_key(type, nullptr, raw.data(), raw.size()));
  if (!k) fail(ErrorCode::MalformedKey, "raw private key");
  return k;
}

Pkey public_key(int type, ByteView raw) {
  Pkey k(EVP_PKEY_new_raw_public_key(type, nullptr, raw.data(), raw.size()));
  if (!k) fail(ErrorCode::MalformedKey, "raw public key");
  return k;
}

Bytes raw_public(EVP_PKEY* k) {
  Bytes out(kRawKeyLength);
  std::size_t len = out.size();
  check(EVP_PKEY_get_raw_public_key(k, out.data(), &len), "get raw public key");
  out.resize(len);
  return out;
}

// Returns iv || ciphertext || tag.
Bytes gcm_seal(ByteView key, ByteView iv, ByteView aad, ByteView plaintext) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "gcm init");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(iv.size()), nullptr),
        "gcm ivlen");
  check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), iv.data()), "gcm key");
  int len = 0;
  if (!aad.empty()) {
    check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())),
          "gcm aad");
  }
  Bytes out(iv.begin(), iv.end());
  out.resize(iv.size() + plaintext.size() + kTagLength);
  std::uint8_t* ct = out.data() + iv.size();
  check(EVP_EncryptUpdate(ctx.get(), ct, &len, plaintext.data(), static_cast<int>(plaintext.size())),
        "gcm update");
  int fin = 0;
  check(EVP_EncryptFinal_ex(ctx.get(), ct + len, &fin), "gcm final");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLength,
                            ct + plaintext.size()),
        "gcm tag");
  return out;
}

// Inverse of gcm_seal; nullopt on authentication failure.
std::optional<Bytes> gcm_open(ByteView key, ByteView aad, ByteView sealed) {
  if (sealed.size() < kIvLength + kTagLength) return std::nullopt;
  ByteView iv = sealed.first(kIvLength);
  ByteView ct = sealed.subspan(kIvLength, sealed.size() - kIvLength - kTagLength);
  Bytes tag(sealed.end() - kTagLength, sealed.end());
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "gcm init");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kIvLength, nullptr), "gcm ivlen");
  check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), iv.data()), "gcm key");
  int len = 0;
  if (!aad.empty()) {
    check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())),
          "gcm aad");
  }
  Bytes out(ct.size());
  check(EVP_DecryptUpdate(ctx.get(), out.data(), &len, ct.data(), static_cast<int>(ct.size())),
        "gcm update");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLength, tag.data()), "gcm tag");
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &fin) != 1) return std::nullopt;
  return out;
}

Bytes x25519(ByteView own_private, ByteView peer_public) {
  Pkey own = private_key(EVP_PKEY_X25519, own_private);
  Pkey peer = public_key(EVP_PKEY_X25519, peer_public);
  PkeyCtx ctx(EVP_PKEY_CTX_new(own.get(), nullptr));
  check(EVP_PKEY_derive_init(ctx.get()), "x25519 init");
  check(EVP_PKEY_derive_set_peer(ctx.get(), peer.get()), "x25519 peer");
  std::size_t len = 0;
  check(EVP_PKEY_derive(ctx.get(), nullptr, &len), "x25519 size");
  Bytes secret(len);
  check(EVP_PKEY_derive(ctx.get(), secret.data(), &len), "x25519 derive");
  return secret;
}

Bytes hkdf_sha256(ByteView ikm, ByteView salt, std::string_view info, std::size_t n) {
  PkeyCtx ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  check(EVP_PKEY_derive_init(ctx.get()), "hkdf init");
  check(EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()), "hkdf md");
  check(EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt.data(), static_cast<int>(salt.size())),
        "hkdf salt");
  check(EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(), static_cast<int>(ikm.size())), "hkdf key");
  check(EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), reinterpret_cast<const unsigned char*>(info.data()),
                                    static_cast<int>(info.size())),
        "hkdf info");
  Bytes out(n);
  std::size_t len = n;
  check(EVP_PKEY_derive(ctx.get(), out.data(), &len), "hkdf derive");
  return out;
}

// Keypair layout: public = ed25519_pub || x25519_pub, private = ed25519_priv || x25519_priv.
struct SplitKey {
  ByteView sign_part;
  ByteView kem_part;
};

SplitKey split(ByteView key) {
  if (key.size() != 2 * kRawKeyLength) fail(ErrorCode::MalformedKey, "expected 64-byte key");
  return {key.first(kRawKeyLength), key.last(kRawKeyLength)};
}

class StandardProvider final : public CryptoProvider {
 public:
  std::string_view id() const override { return "standard"; }
  std::size_t key_length() const override { return kKeyLength; }
  std::size_t pk_payload_limit() const override { return kPkLimit; }

 protected:
  Bytes do_derive(std::string_view password, std::string_view name,
                  std::string_view realm) const override {
    Bytes salt = to_bytes(realm);
    salt.push_back(0);
    salt.insert(salt.end(), name.begin(), name.end());
    Bytes out(kKeyLength);
    check(PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                            static_cast<int>(salt.size()), kPbkdf2Iterations, EVP_sha256(),
                            static_cast<int>(out.size()), out.data()),
          "pbkdf2");
    return out;
  }

  Bytes do_seal(ByteView key, ByteView plaintext, Usage label, ByteView associated) const override {
    Bytes iv(kIvLength);
    SystemRng().fill(iv);
    return gcm_seal(key, iv, aad(label, associated), plaintext);
  }

  Bytes do_open(ByteView key, ByteView ciphertext, Usage label, ByteView associated) const override {
    auto plain = gcm_open(key, aad(label, associated), ciphertext);
    if (!plain) fail(ErrorCode::IntegrityError, "gcm authentication failed");
    return std::move(*plain);
  }

  Bytes do_sign(ByteView private_key_bytes, ByteView message) const override {
    Pkey k = private_key(EVP_PKEY_ED25519, split(private_key_bytes).sign_part);
    MdCtx ctx(EVP_MD_CTX_new());
    check(EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, k.get()), "sign init");
    std::size_t len = 0;
    check(EVP_DigestSign(ctx.get(), nullptr, &len, message.data(), message.size()), "sign size");
    Bytes sig(len);
    check(EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()), "sign");
    sig.resize(len);
    return sig;
  }

  bool do_verify(ByteView public_key_bytes, ByteView message, ByteView signature) const override {
    Pkey k = public_key(EVP_PKEY_ED25519, split(public_key_bytes).sign_part);
    MdCtx ctx(EVP_MD_CTX_new());
    check(EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, k.get()), "verify init");
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                            message.size()) == 1;
  }

  Bytes do_pk_encrypt(ByteView public_key_bytes, ByteView payload) const override {
    ByteView peer = split(public_key_bytes).kem_part;
    Bytes eph_priv(kRawKeyLength);
    SystemRng().fill(eph_priv);
    Pkey eph = private_key(EVP_PKEY_X25519, eph_priv);
    Bytes eph_pub = raw_public(eph.get());
    Bytes key = kem_key(x25519(eph_priv, peer), eph_pub, peer);
    // The derived key is single-use, so a fixed IV is safe here.
    Bytes iv(kIvLength, 0);
    Bytes sealed = gcm_seal(key, iv, {}, payload);
    Bytes out = eph_pub;
    out.insert(out.end(), sealed.begin() + kIvLength, sealed.end());
    return out;
  }

  Bytes do_pk_decrypt(ByteView private_key_bytes, ByteView ciphertext) const override {
    ByteView own_priv = split(private_key_bytes).kem_part;
    if (ciphertext.size() < kRawKeyLength + kTagLength) {
      fail(ErrorCode::DecryptFailure, "ciphertext too short");
    }
    ByteView eph_pub = ciphertext.first(kRawKeyLength);
    Pkey own = private_key(EVP_PKEY_X25519, own_priv);
    Bytes own_pub = raw_public(own.get());
    Bytes secret;
    try {
      secret = x25519(own_priv, eph_pub);
    } catch (const Error&) {
      fail(ErrorCode::DecryptFailure, "bad ephemeral key");
    }
    Bytes key = kem_key(secret, eph_pub, own_pub);
    Bytes sealed(kIvLength, 0);
    sealed.insert(sealed.end(), ciphertext.begin() + kRawKeyLength, ciphertext.end());
    auto plain = gcm_open(key, {}, sealed);
    if (!plain) fail(ErrorCode::DecryptFailure, "authentication failed");
    return std::move(*plain);
  }

  KeyPair do_generate_keypair(Rng& rng) const override {
    Bytes sign_priv = rng.bytes(kRawKeyLength);
    Bytes kem_priv = rng.bytes(kRawKeyLength);
    Pkey sk = private_key(EVP_PKEY_ED25519, sign_priv);
    Pkey kk = private_key(EVP_PKEY_X25519, kem_priv);
    KeyPair pair;
    pair.public_key = raw_public(sk.get());
    Bytes kem_pub = raw_public(kk.get());
    pair.public_key.insert(pair.public_key.end(), kem_pub.begin(), kem_pub.end());
    pair.private_key = sign_priv;
    pair.private_key.insert(pair.private_key.end(), kem_priv.begin(), kem_priv.end());
    return pair;
  }

 private:
  static Bytes aad(Usage label, ByteView associated) {
    Bytes out;
    out.push_back(static_cast<std::uint8_t>(label));
    out.insert(out.end(), associated.begin(), associated.end());
    return out;
  }

  static Bytes kem_key(ByteView secret, ByteView eph_pub, ByteView recipient_pub) {
    Bytes salt(eph_pub.begin(), eph_pub.end());
    salt.insert(salt.end(), recipient_pub.begin(), recipient_pub.end());
    return hkdf_sha256(secret, salt, "kerbpk pk-encrypt", kKeyLength);
  }
};

}  // namespace

std::unique_ptr<CryptoProvider> make_standard_provider() {
  return std::make_unique<StandardProvider>();
}

}  // namespace kerbpk::crypto
