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

// Transports. Every endpoint speaks frames: a 4-byte big-endian length
// followed by that many bytes of TLV payload.

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "kerbpk/bytes.hpp"
#include "kerbpk/error.hpp"

namespace kerbpk::net {

inline constexpr std::size_t kMaxFrame = 1u << 20;

// FrameTooLarge above kMaxFrame.
Bytes encode_frame(ByteView payload);
// Exactly one frame: Truncated if short, TrailingGarbage if long,
// FrameTooLarge if the prefix exceeds kMaxFrame.
Bytes decode_frame(ByteView frame);

enum class Role : std::uint8_t { KdcAs, KdcTgs, AppServer, Gateway, Backend, Client };
const char* role_name(Role r);

struct Endpoint {
  std::string address;  // host:port, or a node id on the simulated network
  Role role = Role::AppServer;
};

// Client end of a connection.
class Connection {
 public:
  virtual ~Connection() = default;
  // ConnectionClosed if either side has closed.
  virtual void send(const Bytes& payload) = 0;
  // Next inbound payload; Timeout after `timeout_ticks` (simulated ticks or
  // milliseconds), ConnectionClosed if the peer closed with nothing queued.
  virtual Bytes recv(std::uint64_t timeout_ticks) = 0;
  virtual void close() = 0;
};

struct SessionOutput {
  std::vector<Bytes> replies;
  bool close = false;
};

// Server end of a connection. Called by one thread at a time.
class Session {
 public:
  virtual ~Session() = default;
  virtual SessionOutput on_frame(const Bytes& payload) = 0;
};

using SessionFactory = std::function<std::unique_ptr<Session>(const std::string& peer_address)>;

struct TranscriptEntry {
  std::uint64_t index = 0;  // 1-based transmission order
  std::string from;
  std::string to;
  Bytes payload;  // as it crossed the wire, after any fault
  bool internal = false;  // gateway-to-backend traffic
  bool dropped = false;
};

class Transcript {
 public:
  void add(TranscriptEntry e);
  std::vector<TranscriptEntry> entries() const;
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
};

class Network {
 public:
  virtual ~Network() = default;
  // Returns the bound address.
  virtual std::string listen(const Endpoint& endpoint, SessionFactory factory) = 0;
  // ConnectionClosed when nothing listens at `address`.
  virtual std::unique_ptr<Connection> connect(const std::string& address,
                                              const std::string& from) = 0;
  virtual Transcript& transcript() = 0;
  virtual void stop() {}
  // Default recv timeout in the transport's tick unit.
  virtual std::uint64_t default_timeout() const = 0;
};

struct Fault {
  enum class Kind { Drop, Duplicate, Swap, FlipBit, Delay };
  Kind kind = Kind::Drop;
  std::uint64_t n = 0;
  std::uint64_t m = 0;  // Swap partner
  std::size_t byte = 0;  // FlipBit, payload-relative
  unsigned bit = 0;  // FlipBit, 0 = least significant
  std::uint64_t ticks = 0;  // Delay

  std::string to_string() const;
  friend bool operator==(const Fault&, const Fault&) = default;
};

// Parses `DropNth(3)`, `DuplicateNth(2)`, `SwapNth(1,2)`, `FlipBit(1,10,3)`,
// `DelayNth(4,5)`. ScenarioParseError on anything else.
Fault parse_fault(std::string_view directive);

using FaultScript = std::vector<Fault>;

// Deterministic, single-threaded in-memory network. Delivery is synchronous:
// a send runs the receiving session to completion before returning.
class SimNetwork final : public Network {
 public:
  explicit SimNetwork(FaultScript faults = {}) : faults_(std::move(faults)) {}

  std::string listen(const Endpoint& endpoint, SessionFactory factory) override;
  std::unique_ptr<Connection> connect(const std::string& address,
                                      const std::string& from) override;
  Transcript& transcript() override { return transcript_; }
  std::uint64_t default_timeout() const override { return 16; }

  void set_faults(FaultScript faults) { faults_ = std::move(faults); }
  std::uint64_t ticks() const { return ticks_; }
  std::uint64_t frames_sent() const { return frame_count_; }

 private:
  struct Link;
  class SimConnection;
  enum class Dir { ToServer, ToClient };

  void transmit(const std::shared_ptr<Link>& link, Dir dir, Bytes payload);
  void deliver(const std::shared_ptr<Link>& link, Dir dir, const Bytes& payload);
  void advance_tick();

  struct Node {
    Endpoint endpoint;
    SessionFactory factory;
  };
  struct Delayed {
    std::uint64_t release_tick;
    std::shared_ptr<Link> link;
    Dir dir;
    Bytes payload;
  };
  struct Held {
    std::uint64_t release_after;  // deliver once this frame index is delivered
    std::shared_ptr<Link> link;
    Dir dir;
    Bytes payload;
  };

  FaultScript faults_;
  std::map<std::string, Node> nodes_;
  Transcript transcript_;
  std::uint64_t frame_count_ = 0;
  std::uint64_t ticks_ = 0;
  std::uint64_t next_port_ = 1;
  std::vector<Delayed> delayed_;
  std::vector<Held> held_;
};

// Loopback TCP. Each accepted connection is served on its own thread.
class TcpNetwork final : public Network {
 public:
  TcpNetwork();
  ~TcpNetwork() override;

  std::string listen(const Endpoint& endpoint, SessionFactory factory) override;
  std::unique_ptr<Connection> connect(const std::string& address,
                                      const std::string& from) override;
  Transcript& transcript() override { return transcript_; }
  std::uint64_t default_timeout() const override { return 5000; }
  void stop() override;

 private:
  class Server;
  class TcpConnection;

  std::mutex mu_;
  std::vector<std::unique_ptr<Server>> servers_;
  std::map<std::string, Role> roles_;
  Transcript transcript_;
};

// Blocking single-server helper for long-running CLI processes.
// `address` is host:port; port 0 picks an ephemeral port. Runs until
// `stop` becomes true.
void serve_tcp_forever(const std::string& address, SessionFactory factory,
                       const std::function<void(const std::string& bound)>& on_bound,
                       const std::atomic<bool>& stop);

// Splits "host:port"; UsageError on malformed input.
std::pair<std::string, std::uint16_t> split_host_port(const std::string& address);

}  // namespace kerbpk::net
