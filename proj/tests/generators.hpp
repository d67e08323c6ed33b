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

// Seeded random instances of every wire structure.

#include <random>

#include "kerbpk/protocol.hpp"
#include "kerbpk/secure_context.hpp"
#include "support.hpp"

namespace kerbpk::testing::gen {

using G = std::mt19937_64;

inline Nonce nonce(G& g) {
  Nonce n;
  for (auto& b : n) b = static_cast<std::uint8_t>(g());
  return n;
}

inline Principal principal(G& g) { return {random_name(g), random_name(g)}; }

inline Validity validity(G& g) {
  Timestamp from = g() >> 1;
  return {from, from + 1 + g() % 100000};
}

inline SymmetricKey key(G& g) { return {random_name(g, 8), random_bytes(g, 48)}; }

inline SealedBox box(G& g) {
  return {static_cast<Usage>(1 + g() % 6), random_bytes(g, 96)};
}

inline Certificate certificate(G& g) { return {principal(g), random_bytes(g, 64), g()}; }

inline TicketBody ticket_body(G& g) {
  return {static_cast<std::uint32_t>(g() & 1), key(g), random_name(g), random_name(g),
          g() % 2 ? random_name(g) : std::string{}, validity(g)};
}

inline SealedTicket sealed_ticket(G& g) { return {principal(g), box(g)}; }

inline Authenticator authenticator(G& g) {
  return {random_name(g), random_name(g), g(), random_bytes(g, 32),
          static_cast<std::uint32_t>(g() % 16), g()};
}

inline AsRequest as_request(G& g) {
  return {static_cast<std::uint32_t>(g()), principal(g), random_name(g), validity(g), nonce(g),
          certificate(g), random_bytes(g, 64)};
}

inline AsEncPart as_enc_part(G& g) {
  return {random_bytes(g, 80), validity(g), nonce(g), random_name(g), random_name(g)};
}

inline AsReply as_reply(G& g) { return {principal(g), sealed_ticket(g), box(g)}; }

inline TgsRequest tgs_request(G& g) {
  return {static_cast<std::uint32_t>(g()), random_name(g), validity(g), nonce(g),
          sealed_ticket(g), box(g)};
}

inline TgsEncPart tgs_enc_part(G& g) {
  return {key(g), validity(g), nonce(g), random_name(g), random_name(g)};
}

inline TgsReply tgs_reply(G& g) { return {principal(g), sealed_ticket(g), box(g)}; }

inline ApRequest ap_request(G& g) {
  return {static_cast<std::uint32_t>(g()), sealed_ticket(g), box(g)};
}

inline ApEncPart ap_enc_part(G& g) { return {g(), key(g), g(), g()}; }

inline ApReply ap_reply(G& g) { return {box(g)}; }

inline gss::ContextToken context_token(G& g) {
  return {static_cast<std::uint8_t>(1 + g() % 2), random_bytes(g, 128)};
}

inline gss::WrapToken wrap_token(G& g) {
  return {g(), static_cast<gss::Direction>(1 + g() % 2), box(g)};
}

}  // namespace kerbpk::testing::gen
