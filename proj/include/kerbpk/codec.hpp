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

// Canonical tag-length-value encoding.
//
// Every structure encodes as
//
//   schema-id (1 byte) | length (4 bytes, big-endian) | fields...
//
// and every field inside it as
//
//   field-tag (1 byte) | length (4 bytes, big-endian) | value
//
// Fields appear in the order the structure's `fields()` visitor lists them.
// Integers are fixed-width big-endian, strings are raw UTF-8, nested
// structures carry their own schema header, optionals are a zero-length
// field when absent, and vectors concatenate their element encodings.

#include <array>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "kerbpk/bytes.hpp"
#include "kerbpk/error.hpp"

namespace kerbpk::codec {

// Wire-stable identifiers. Never renumber.
enum class SchemaId : std::uint8_t {
  AsRequest = 0x10,
  AsReply = 0x11,
  TgsRequest = 0x12,
  TgsReply = 0x13,
  ApRequest = 0x14,
  ApReply = 0x15,
  TicketSealed = 0x16,
  Authenticator = 0x17,
  ContextToken = 0x18,
  WrapToken = 0x19,
  EncPartAs = 0x1a,
  EncPartTgs = 0x1b,
  EncPartAp = 0x1c,

  // Building blocks nested inside the message schemas above.
  Principal = 0x30,
  Validity = 0x31,
  Certificate = 0x32,
  SymmetricKey = 0x33,
  SealedBox = 0x34,
  TicketBody = 0x35,
  KeyPair = 0x36,

  // Files and auxiliary frames.
  PrincipalRecord = 0x40,
  CredentialEntry = 0x41,
  CredentialCache = 0x42,
  IdentityFile = 0x43,
  ErrorReply = 0x44,
  AppRequest = 0x45,
  AppResponse = 0x46,
};

bool is_known_schema(std::uint8_t id);
const char* schema_name(SchemaId id);

inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::uint64_t kMaxFieldLength = 0xffffffffULL;

// Returns `length` as a 32-bit wire length; FieldTooLarge above 2^32-1.
std::uint32_t checked_length(std::uint64_t length);

template <class T>
concept Structure = requires {
  { T::kSchema } -> std::convertible_to<SchemaId>;
};

template <class T>
struct is_optional : std::false_type {};
template <class T>
struct is_optional<std::optional<T>> : std::true_type {};

template <class T>
struct is_vector_of_structs : std::false_type {};
template <Structure T>
struct is_vector_of_structs<std::vector<T>> : std::true_type {};

template <class T>
struct is_byte_array : std::false_type {};
template <std::size_t N>
struct is_byte_array<std::array<std::uint8_t, N>> : std::true_type {};

class Writer {
 public:
  template <class T>
  void operator()(std::uint8_t tag, const T& value);

  Bytes take() { return std::move(out_); }
  const Bytes& bytes() const { return out_; }

  void header(std::uint8_t tag, std::uint64_t length);
  void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }

 private:
  template <class Int>
  void put_int(std::uint8_t tag, Int v) {
    header(tag, sizeof(Int));
    for (int shift = 8 * (static_cast<int>(sizeof(Int)) - 1); shift >= 0; shift -= 8) {
      out_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> shift));
    }
  }

  Bytes out_;
};

template <Structure T>
Bytes encode(const T& value) {
  Writer fields;
  T::fields(fields, value);
  Writer out;
  out.header(static_cast<std::uint8_t>(T::kSchema), fields.bytes().size());
  out.raw(fields.bytes());
  return out.take();
}

template <class T>
void Writer::operator()(std::uint8_t tag, const T& value) {
  if constexpr (std::is_same_v<T, bool>) {
    put_int<std::uint8_t>(tag, value ? 1 : 0);
  } else if constexpr (std::is_enum_v<T>) {
    put_int(tag, static_cast<std::underlying_type_t<T>>(value));
  } else if constexpr (std::is_integral_v<T>) {
    put_int(tag, value);
  } else if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, Bytes> ||
                       is_byte_array<T>::value) {
    header(tag, value.size());
    out_.insert(out_.end(), value.begin(), value.end());
  } else if constexpr (is_optional<T>::value) {
    if (value) {
      (*this)(tag, *value);
    } else {
      header(tag, 0);
    }
  } else if constexpr (is_vector_of_structs<T>::value) {
    Writer inner;
    for (const auto& element : value) inner.raw(encode(element));
    header(tag, inner.bytes().size());
    raw(inner.bytes());
  } else {
    static_assert(Structure<T>, "unsupported field type");
    Bytes nested = encode(value);
    header(tag, nested.size());
    raw(nested);
  }
}

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  template <class T>
  void operator()(std::uint8_t tag, T& value);

  // TrailingGarbage when bytes remain.
  void finish() const;

 private:
  ByteView next_field(std::uint8_t tag);

  template <class Int>
  static Int get_int(ByteView v) {
    if (v.size() < sizeof(Int)) fail(ErrorCode::Truncated, "integer field too short");
    if (v.size() > sizeof(Int)) fail(ErrorCode::TrailingGarbage, "integer field too long");
    std::uint64_t acc = 0;
    for (auto b : v) acc = (acc << 8) | b;
    return static_cast<Int>(acc);
  }

  ByteView data_;
};

// Parses one complete structure occupying `bytes` exactly.
template <Structure T>
T decode(ByteView bytes);

// Length in bytes of the structure header + body at the front of `bytes`.
// Truncated when the declared length runs past the end.
std::size_t framed_size(ByteView bytes);

// Leading schema id, or nullopt for empty input.
std::optional<std::uint8_t> peek_schema(ByteView bytes);

namespace detail {
ByteView open_structure(ByteView bytes, SchemaId expected);
}

template <Structure T>
T decode(ByteView bytes) {
  ByteView body = detail::open_structure(bytes, T::kSchema);
  T value{};
  Reader r(body);
  T::fields(r, value);
  r.finish();
  return value;
}

template <class T>
void Reader::operator()(std::uint8_t tag, T& value) {
  ByteView v = next_field(tag);
  if constexpr (std::is_same_v<T, bool>) {
    auto raw = get_int<std::uint8_t>(v);
    if (raw > 1) fail(ErrorCode::MalformedValue, "boolean out of range");
    value = raw == 1;
  } else if constexpr (std::is_enum_v<T>) {
    value = static_cast<T>(get_int<std::underlying_type_t<T>>(v));
  } else if constexpr (std::is_integral_v<T>) {
    value = get_int<T>(v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    value.assign(v.begin(), v.end());
  } else if constexpr (std::is_same_v<T, Bytes>) {
    value.assign(v.begin(), v.end());
  } else if constexpr (is_byte_array<T>::value) {
    if (v.size() < value.size()) fail(ErrorCode::Truncated, "fixed-size field too short");
    if (v.size() > value.size()) fail(ErrorCode::TrailingGarbage, "fixed-size field too long");
    std::copy(v.begin(), v.end(), value.begin());
  } else if constexpr (is_optional<T>::value) {
    if (v.empty()) {
      value.reset();
    } else {
      value = decode<typename T::value_type>(v);
    }
  } else if constexpr (is_vector_of_structs<T>::value) {
    value.clear();
    while (!v.empty()) {
      std::size_t n = framed_size(v);
      value.push_back(decode<typename T::value_type>(v.first(n)));
      v = v.subspan(n);
    }
  } else {
    static_assert(Structure<T>, "unsupported field type");
    value = decode<T>(v);
  }
}

}  // namespace kerbpk::codec
