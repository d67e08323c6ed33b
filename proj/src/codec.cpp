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

#include "kerbpk/codec.hpp"

namespace kerbpk::codec {

namespace {

std::uint32_t read_u32(ByteView b) {
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

bool is_known_schema(std::uint8_t id) {
  return (id >= 0x10 && id <= 0x1c) || (id >= 0x30 && id <= 0x36) || (id >= 0x40 && id <= 0x46);
}

const char* schema_name(SchemaId id) {
  switch (id) {
    case SchemaId::AsRequest: return "AsRequest";
    case SchemaId::AsReply: return "AsReply";
    case SchemaId::TgsRequest: return "TgsRequest";
    case SchemaId::TgsReply: return "TgsReply";
    case SchemaId::ApRequest: return "ApRequest";
    case SchemaId::ApReply: return "ApReply";
    case SchemaId::TicketSealed: return "TicketSealed";
    case SchemaId::Authenticator: return "Authenticator";
    case SchemaId::ContextToken: return "ContextToken";
    case SchemaId::WrapToken: return "WrapToken";
    case SchemaId::EncPartAs: return "EncPartAs";
    case SchemaId::EncPartTgs: return "EncPartTgs";
    case SchemaId::EncPartAp: return "EncPartAp";
    case SchemaId::Principal: return "Principal";
    case SchemaId::Validity: return "Validity";
    case SchemaId::Certificate: return "Certificate";
    case SchemaId::SymmetricKey: return "SymmetricKey";
    case SchemaId::SealedBox: return "SealedBox";
    case SchemaId::TicketBody: return "TicketBody";
    case SchemaId::KeyPair: return "KeyPair";
    case SchemaId::PrincipalRecord: return "PrincipalRecord";
    case SchemaId::CredentialEntry: return "CredentialEntry";
    case SchemaId::CredentialCache: return "CredentialCache";
    case SchemaId::IdentityFile: return "IdentityFile";
    case SchemaId::ErrorReply: return "ErrorReply";
    case SchemaId::AppRequest: return "AppRequest";
    case SchemaId::AppResponse: return "AppResponse";
  }
  return "unknown";
}

std::uint32_t checked_length(std::uint64_t length) {
  if (length > kMaxFieldLength) fail(ErrorCode::FieldTooLarge, std::to_string(length) + " bytes");
  return static_cast<std::uint32_t>(length);
}

void Writer::header(std::uint8_t tag, std::uint64_t length) {
  std::uint32_t n = checked_length(length);
  out_.push_back(tag);
  out_.push_back(static_cast<std::uint8_t>(n >> 24));
  out_.push_back(static_cast<std::uint8_t>(n >> 16));
  out_.push_back(static_cast<std::uint8_t>(n >> 8));
  out_.push_back(static_cast<std::uint8_t>(n));
}

ByteView Reader::next_field(std::uint8_t tag) {
  if (data_.size() < kHeaderSize) fail(ErrorCode::Truncated, "field header");
  if (data_[0] != tag) {
    fail(ErrorCode::UnknownTag,
         "field tag " + std::to_string(data_[0]) + ", expected " + std::to_string(tag));
  }
  std::uint32_t len = read_u32(data_.subspan(1, 4));
  if (len > data_.size() - kHeaderSize) fail(ErrorCode::Truncated, "field value");
  ByteView value = data_.subspan(kHeaderSize, len);
  data_ = data_.subspan(kHeaderSize + len);
  return value;
}

void Reader::finish() const {
  if (!data_.empty()) {
    fail(ErrorCode::TrailingGarbage, std::to_string(data_.size()) + " unparsed bytes");
  }
}

std::size_t framed_size(ByteView bytes) {
  if (bytes.size() < kHeaderSize) fail(ErrorCode::Truncated, "structure header");
  std::uint32_t len = read_u32(bytes.subspan(1, 4));
  if (len > bytes.size() - kHeaderSize) fail(ErrorCode::Truncated, "structure body");
  return kHeaderSize + len;
}

std::optional<std::uint8_t> peek_schema(ByteView bytes) {
  if (bytes.empty()) return std::nullopt;
  return bytes[0];
}

namespace detail {

ByteView open_structure(ByteView bytes, SchemaId expected) {
  if (bytes.empty()) fail(ErrorCode::Truncated, "empty input");
  if (!is_known_schema(bytes[0])) fail(ErrorCode::UnknownTag, "schema id " + std::to_string(bytes[0]));
  if (bytes[0] != static_cast<std::uint8_t>(expected)) {
    fail(ErrorCode::SchemaMismatch,
         std::string("got ") + schema_name(static_cast<SchemaId>(bytes[0])) + ", expected " +
             schema_name(expected));
  }
  std::size_t n = framed_size(bytes);
  if (n != bytes.size()) fail(ErrorCode::TrailingGarbage, "bytes after structure");
  return bytes.subspan(kHeaderSize, n - kHeaderSize);
}

}  // namespace detail

}  // namespace kerbpk::codec
