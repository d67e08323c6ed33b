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

#include "generators.hpp"
#include "kerbpk/client.hpp"
#include "kerbpk/codec.hpp"
#include "kerbpk/kdc.hpp"
#include "kerbpk/services.hpp"
#include "support.hpp"

namespace kerbpk::testing {
namespace {

using codec::SchemaId;

constexpr int kCases = 1000;

TEST(Codec, EmptyByteStringFieldIsHeaderOnly) {
  ErrorReply e{"", ""};
  Bytes got = codec::encode(e);
  Bytes want = {0x44, 0, 0, 0, 10, 1, 0, 0, 0, 0, 2, 0, 0, 0, 0};
  EXPECT_EQ(got, want);
}

TEST(Codec, IntegersAreFixedWidthBigEndian) {
  Validity v{0x0102030405060708ULL, 0x1112131415161718ULL};
  Bytes want = {0x31, 0, 0, 0, 26,  //
                1,    0, 0, 0, 8, 1, 2, 3, 4, 5, 6, 7, 8,
                2,    0, 0, 0, 8, 0x11, 0x12, 0x13, 0x14, 0x15, 0x16, 0x17, 0x18};
  EXPECT_EQ(codec::encode(v), want);
}

TEST(Codec, OutputBeginsWithSchemaId) {
  std::mt19937_64 g(1);
  EXPECT_EQ(codec::encode(gen::as_request(g))[0], 0x10);
  EXPECT_EQ(codec::encode(gen::ap_reply(g))[0], 0x15);
  EXPECT_EQ(codec::encode(gen::wrap_token(g))[0], 0x19);
}

TEST(Codec, SchemaIdsArePinnedAndDistinct) {
  const std::pair<SchemaId, int> pinned[] = {
      {SchemaId::AsRequest, 0x10},    {SchemaId::AsReply, 0x11},      {SchemaId::TgsRequest, 0x12},
      {SchemaId::TgsReply, 0x13},     {SchemaId::ApRequest, 0x14},    {SchemaId::ApReply, 0x15},
      {SchemaId::TicketSealed, 0x16}, {SchemaId::Authenticator, 0x17}, {SchemaId::ContextToken, 0x18},
      {SchemaId::WrapToken, 0x19},    {SchemaId::EncPartAs, 0x1a},    {SchemaId::EncPartTgs, 0x1b},
      {SchemaId::EncPartAp, 0x1c},
  };
  std::set<int> seen;
  for (auto [id, value] : pinned) {
    EXPECT_EQ(static_cast<int>(id), value) << codec::schema_name(id);
    EXPECT_TRUE(seen.insert(value).second);
    EXPECT_TRUE(codec::is_known_schema(static_cast<std::uint8_t>(value)));
  }
}

TEST(Codec, EqualAuthenticatorsEncodeIdentically) {
  std::mt19937_64 g(11);
  for (int i = 0; i < kCases; ++i) {
    auto a = gen::authenticator(g);
    auto copy = a;
    ASSERT_EQ(codec::encode(a), codec::encode(copy));
  }
}

template <class T, class Gen>
void round_trip(Gen make, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  for (int i = 0; i < kCases; ++i) {
    T value = make(g);
    Bytes wire = codec::encode(value);
    ASSERT_EQ(codec::decode<T>(wire), value) << "case " << i;
  }
}

TEST(Codec, RoundTripEveryMessageSchema) {
  round_trip<AsRequest>(gen::as_request, 1);
  round_trip<AsReply>(gen::as_reply, 2);
  round_trip<AsEncPart>(gen::as_enc_part, 3);
  round_trip<TgsRequest>(gen::tgs_request, 4);
  round_trip<TgsReply>(gen::tgs_reply, 5);
  round_trip<TgsEncPart>(gen::tgs_enc_part, 6);
  round_trip<ApRequest>(gen::ap_request, 7);
  round_trip<ApReply>(gen::ap_reply, 8);
  round_trip<ApEncPart>(gen::ap_enc_part, 9);
  round_trip<SealedTicket>(gen::sealed_ticket, 10);
  round_trip<Authenticator>(gen::authenticator, 11);
  round_trip<TicketBody>(gen::ticket_body, 12);
  round_trip<gss::ContextToken>(gen::context_token, 13);
  round_trip<gss::WrapToken>(gen::wrap_token, 14);
}

TEST(Codec, RoundTripAuxiliarySchemas) {
  std::mt19937_64 g(21);
  for (int i = 0; i < 200; ++i) {
    client::CredentialCache cache{gen::principal(g), std::nullopt, {}};
    if (g() % 2) cache.tgt = client::CredentialEntry{random_name(g), gen::sealed_ticket(g), gen::key(g), gen::validity(g)};
    for (std::size_t k = g() % 4; k > 0; --k) {
      cache.service_creds.push_back({random_name(g), gen::sealed_ticket(g), gen::key(g), gen::validity(g)});
    }
    ASSERT_EQ(codec::decode<client::CredentialCache>(codec::encode(cache)), cache);

    kdc::PrincipalRecord rec{gen::principal(g), gen::key(g), std::nullopt, kdc::PrincipalKind::Service};
    if (g() % 2) rec.certificate = gen::certificate(g);
    ASSERT_EQ(codec::decode<kdc::PrincipalRecord>(codec::encode(rec)), rec);

    svc::AppResponse resp{static_cast<std::uint16_t>(g()), random_bytes(g, 40), svc::ServedFrom::Cache};
    ASSERT_EQ(codec::decode<svc::AppResponse>(codec::encode(resp)), resp);
  }
}

TEST(Codec, DistinctAuthenticatorsEncodeDistinctly) {
  std::mt19937_64 g(31);
  std::set<Bytes> encodings;
  int distinct_values = 0;
  for (int i = 0; i < kCases; ++i) {
    auto a = gen::authenticator(g);
    auto b = gen::authenticator(g);
    // Single-field perturbations are the hard case for injectivity.
    auto c = a;
    c.client_id += "x";
    auto d = a;
    d.client_realm = c.client_id;
    d.client_id.clear();
    for (const auto* other : {&b, &c, &d}) {
      if (a == *other) continue;
      ++distinct_values;
      ASSERT_NE(codec::encode(a), codec::encode(*other));
    }
  }
  EXPECT_GE(distinct_values, kCases);
}

TEST(Codec, EveryProperPrefixIsTruncated) {
  std::mt19937_64 g(41);
  for (int i = 0; i < 20; ++i) {
    Bytes wire = codec::encode(gen::as_request(g));
    for (std::size_t n = 0; n < wire.size(); ++n) {
      ByteView prefix(wire.data(), n);
      ASSERT_EQ(error_of([&] { codec::decode<AsRequest>(prefix); }), ErrorCode::Truncated)
          << "prefix " << n << " of " << wire.size();
    }
  }
}

TEST(Codec, WrongSchemaIsSchemaMismatch) {
  std::mt19937_64 g(51);
  Bytes wire = codec::encode(gen::as_request(g));
  EXPECT_KERB_ERROR(codec::decode<TgsRequest>(wire), ErrorCode::SchemaMismatch);
}

TEST(Codec, UnknownSchemaAndFieldTags) {
  std::mt19937_64 g(52);
  Bytes wire = codec::encode(gen::ap_enc_part(g));
  Bytes bad_schema = wire;
  bad_schema[0] = 0x7f;
  EXPECT_KERB_ERROR(codec::decode<ApEncPart>(bad_schema), ErrorCode::UnknownTag);
  Bytes bad_field = wire;
  bad_field[codec::kHeaderSize] = 9;
  EXPECT_KERB_ERROR(codec::decode<ApEncPart>(bad_field), ErrorCode::UnknownTag);
}

TEST(Codec, TrailingBytesAreRejected) {
  std::mt19937_64 g(53);
  Bytes wire = codec::encode(gen::tgs_reply(g));
  wire.push_back(0);
  EXPECT_KERB_ERROR(codec::decode<TgsReply>(wire), ErrorCode::TrailingGarbage);
}

TEST(Codec, FieldLengthLimit) {
  EXPECT_EQ(codec::checked_length(0xffffffffULL), 0xffffffffu);
  EXPECT_KERB_ERROR(codec::checked_length(0x100000000ULL), ErrorCode::FieldTooLarge);
}

TEST(Codec, FramedSizeReadsNoFurtherThanDeclared) {
  std::mt19937_64 g(54);
  Bytes a = codec::encode(gen::authenticator(g));
  Bytes b = codec::encode(gen::authenticator(g));
  Bytes stream = a;
  stream.insert(stream.end(), b.begin(), b.end());
  EXPECT_EQ(codec::framed_size(stream), a.size());
  EXPECT_EQ(codec::peek_schema(stream), 0x17);
  EXPECT_EQ(codec::peek_schema(Bytes{}), std::nullopt);
}

struct Flag {
  static constexpr auto kSchema = SchemaId::Validity;
  bool value = false;
  template <class A, class S>
  static void fields(A& a, S& s) {
    a(1, s.value);
  }
};

TEST(Codec, BooleanOutOfRangeIsMalformed) {
  Bytes wire = codec::encode(Flag{true});
  wire.back() = 2;
  EXPECT_KERB_ERROR(codec::decode<Flag>(wire), ErrorCode::MalformedValue);
}

TEST(Bytes, HexRoundTripAndErrors) {
  Bytes b = {0x00, 0xab, 0xff};
  EXPECT_EQ(to_hex(b), "00abff");
  EXPECT_EQ(from_hex("00ABff"), b);
  EXPECT_KERB_ERROR(from_hex("abc"), ErrorCode::MalformedValue);
  EXPECT_KERB_ERROR(from_hex("zz"), ErrorCode::MalformedValue);
}

TEST(Bytes, SubsequenceSearch) {
  EXPECT_TRUE(contains_subsequence(to_bytes("hello world"), to_bytes("o w")));
  EXPECT_FALSE(contains_subsequence(to_bytes("hello"), to_bytes("hello!")));
  EXPECT_TRUE(constant_time_equal(to_bytes("ab"), to_bytes("ab")));
  EXPECT_FALSE(constant_time_equal(to_bytes("ab"), to_bytes("abc")));
}

TEST(Errors, NamesRoundTrip) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::InternalError); ++c) {
    auto code = static_cast<ErrorCode>(c);
    EXPECT_EQ(parse_error_name(error_name(code)), code);
  }
  EXPECT_EQ(parse_error_name("NoSuchError"), std::nullopt);
}

}  // namespace
}  // namespace kerbpk::testing
