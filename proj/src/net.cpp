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

#include "kerbpk/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstring>

namespace kerbpk::net {

Bytes encode_frame(ByteView payload) {
  if (payload.size() > kMaxFrame) {
    fail(ErrorCode::FrameTooLarge, std::to_string(payload.size()) + " bytes");
  }
  Bytes out(4 + payload.size());
  auto n = static_cast<std::uint32_t>(payload.size());
  out[0] = static_cast<std::uint8_t>(n >> 24);
  out[1] = static_cast<std::uint8_t>(n >> 16);
  out[2] = static_cast<std::uint8_t>(n >> 8);
  out[3] = static_cast<std::uint8_t>(n);
  std::copy(payload.begin(), payload.end(), out.begin() + 4);
  return out;
}

namespace {

std::uint32_t read_prefix(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

}  // namespace

Bytes decode_frame(ByteView frame) {
  if (frame.size() < 4) fail(ErrorCode::Truncated, "frame prefix");
  std::uint32_t n = read_prefix(frame.data());
  if (n > kMaxFrame) fail(ErrorCode::FrameTooLarge, std::to_string(n) + " bytes");
  if (frame.size() < 4 + std::size_t{n}) fail(ErrorCode::Truncated, "frame body");
  if (frame.size() > 4 + std::size_t{n}) fail(ErrorCode::TrailingGarbage, "after frame");
  return Bytes(frame.begin() + 4, frame.end());
}

const char* role_name(Role r) {
  switch (r) {
    case Role::KdcAs: return "kdc-as";
    case Role::KdcTgs: return "kdc-tgs";
    case Role::AppServer: return "app-server";
    case Role::Gateway: return "gateway";
    case Role::Backend: return "backend";
    case Role::Client: return "client";
  }
  return "unknown";
}

void Transcript::add(TranscriptEntry e) {
  std::lock_guard lock(mu_);
  e.index = entries_.size() + 1;
  entries_.push_back(std::move(e));
}

std::vector<TranscriptEntry> Transcript::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void Transcript::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
}

std::string Fault::to_string() const {
  switch (kind) {
    case Kind::Drop: return "DropNth(" + std::to_string(n) + ")";
    case Kind::Duplicate: return "DuplicateNth(" + std::to_string(n) + ")";
    case Kind::Swap: return "SwapNth(" + std::to_string(n) + "," + std::to_string(m) + ")";
    case Kind::FlipBit:
      return "FlipBit(" + std::to_string(n) + "," + std::to_string(byte) + "," +
             std::to_string(bit) + ")";
    case Kind::Delay: return "DelayNth(" + std::to_string(n) + "," + std::to_string(ticks) + ")";
  }
  return "?";
}

Fault parse_fault(std::string_view directive) {
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::ScenarioParseError, why + ": '" + std::string(directive) + "'");
  };
  auto open = directive.find('(');
  if (open == std::string_view::npos || directive.empty() || directive.back() != ')') {
    bad("expected Name(args)");
  }
  std::string_view name = directive.substr(0, open);
  std::string_view inner = directive.substr(open + 1, directive.size() - open - 2);

  std::vector<std::uint64_t> args;
  while (!inner.empty()) {
    auto comma = inner.find(',');
    std::string_view tok = inner.substr(0, comma);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) bad("bad number");
    args.push_back(v);
    if (comma == std::string_view::npos) break;
    inner.remove_prefix(comma + 1);
  }
  auto arity = [&](std::size_t k) {
    if (args.size() != k) bad("expected " + std::to_string(k) + " arguments");
    if (args[0] == 0) bad("frame indices are 1-based");
  };

  Fault f;
  if (name == "DropNth") {
    arity(1);
    f.kind = Fault::Kind::Drop;
  } else if (name == "DuplicateNth") {
    arity(1);
    f.kind = Fault::Kind::Duplicate;
  } else if (name == "SwapNth") {
    arity(2);
    f.kind = Fault::Kind::Swap;
    f.m = args[1];
    if (f.m <= args[0]) bad("SwapNth needs n < m");
  } else if (name == "FlipBit") {
    arity(3);
    f.kind = Fault::Kind::FlipBit;
    f.byte = static_cast<std::size_t>(args[1]);
    if (args[2] > 7) bad("bit index above 7");
    f.bit = static_cast<unsigned>(args[2]);
  } else if (name == "DelayNth") {
    arity(2);
    f.kind = Fault::Kind::Delay;
    f.ticks = args[1];
  } else {
    bad("unknown fault");
  }
  f.n = args[0];
  return f;
}

// ---------------------------------------------------------------------------
// Simulated network

struct SimNetwork::Link {
  std::string client;
  std::string server;
  bool internal = false;
  std::unique_ptr<Session> session;
  std::deque<Bytes> inbox;
  bool server_closed = false;
  bool client_closed = false;
};

class SimNetwork::SimConnection final : public Connection {
 public:
  SimConnection(SimNetwork& net, std::shared_ptr<Link> link)
      : net_(net), link_(std::move(link)) {}
  ~SimConnection() override { close(); }

  void send(const Bytes& payload) override {
    if (link_->client_closed || link_->server_closed) {
      fail(ErrorCode::ConnectionClosed, link_->server);
    }
    if (payload.size() > kMaxFrame) fail(ErrorCode::FrameTooLarge);
    net_.transmit(link_, Dir::ToServer, payload);
  }

  Bytes recv(std::uint64_t timeout_ticks) override {
    std::uint64_t waited = 0;
    for (;;) {
      if (!link_->inbox.empty()) {
        Bytes out = std::move(link_->inbox.front());
        link_->inbox.pop_front();
        return out;
      }
      if (link_->server_closed || link_->client_closed) {
        fail(ErrorCode::ConnectionClosed, link_->server);
      }
      if (waited >= timeout_ticks) fail(ErrorCode::Timeout, link_->server);
      net_.advance_tick();
      ++waited;
    }
  }

  void close() override { link_->client_closed = true; }

 private:
  SimNetwork& net_;
  std::shared_ptr<Link> link_;
};

std::string SimNetwork::listen(const Endpoint& endpoint, SessionFactory factory) {
  nodes_[endpoint.address] = Node{endpoint, std::move(factory)};
  return endpoint.address;
}

std::unique_ptr<Connection> SimNetwork::connect(const std::string& address,
                                                const std::string& from) {
  auto it = nodes_.find(address);
  if (it == nodes_.end()) fail(ErrorCode::ConnectionClosed, "nothing listens at " + address);
  auto link = std::make_shared<Link>();
  link->client = from + ":" + std::to_string(next_port_++);
  link->server = address;
  link->internal = it->second.endpoint.role == Role::Backend;
  link->session = it->second.factory(link->client);
  return std::make_unique<SimConnection>(*this, std::move(link));
}

void SimNetwork::transmit(const std::shared_ptr<Link>& link, Dir dir, Bytes payload) {
  std::uint64_t idx = ++frame_count_;
  bool drop = false;
  bool duplicate = false;
  std::optional<std::uint64_t> delay;
  std::optional<std::uint64_t> swap_with;
  for (const auto& f : faults_) {
    if (f.n != idx) continue;
    switch (f.kind) {
      case Fault::Kind::Drop: drop = true; break;
      case Fault::Kind::Duplicate: duplicate = true; break;
      case Fault::Kind::Delay: delay = f.ticks; break;
      case Fault::Kind::Swap: swap_with = f.m; break;
      case Fault::Kind::FlipBit:
        if (f.byte < payload.size()) payload[f.byte] ^= static_cast<std::uint8_t>(1u << f.bit);
        break;
    }
  }

  TranscriptEntry entry;
  entry.from = dir == Dir::ToServer ? link->client : link->server;
  entry.to = dir == Dir::ToServer ? link->server : link->client;
  entry.payload = payload;
  entry.internal = link->internal;
  entry.dropped = drop;
  transcript_.add(std::move(entry));

  if (drop) return;
  if (delay) {
    delayed_.push_back({ticks_ + *delay, link, dir, std::move(payload)});
    return;
  }
  if (swap_with) {
    held_.push_back({*swap_with, link, dir, std::move(payload)});
    return;
  }
  deliver(link, dir, payload);
  if (duplicate) deliver(link, dir, payload);

  std::vector<Held> released;
  for (auto it = held_.begin(); it != held_.end();) {
    if (it->release_after == idx) {
      released.push_back(std::move(*it));
      it = held_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto& h : released) deliver(h.link, h.dir, h.payload);
}

void SimNetwork::deliver(const std::shared_ptr<Link>& link, Dir dir, const Bytes& payload) {
  if (dir == Dir::ToClient) {
    if (!link->client_closed) link->inbox.push_back(payload);
    return;
  }
  if (link->server_closed || !link->session) return;
  SessionOutput out;
  try {
    out = link->session->on_frame(payload);
  } catch (const std::exception&) {
    out.close = true;
  }
  for (auto& reply : out.replies) transmit(link, Dir::ToClient, std::move(reply));
  if (out.close) link->server_closed = true;
}

void SimNetwork::advance_tick() {
  ++ticks_;
  std::vector<Delayed> due;
  for (auto it = delayed_.begin(); it != delayed_.end();) {
    if (it->release_tick <= ticks_) {
      due.push_back(std::move(*it));
      it = delayed_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto& d : due) deliver(d.link, d.dir, d.payload);
}

// ---------------------------------------------------------------------------
// TCP

std::pair<std::string, std::uint16_t> split_host_port(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    fail(ErrorCode::UsageError, "expected host:port, got '" + address + "'");
  }
  std::string host = address.substr(0, colon);
  std::string port_s = address.substr(colon + 1);
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(port_s.data(), port_s.data() + port_s.size(), port);
  if (port_s.empty() || ec != std::errc{} || ptr != port_s.data() + port_s.size() ||
      port > 65535) {
    fail(ErrorCode::UsageError, "bad port in '" + address + "'");
  }
  if (host == "localhost") host = "127.0.0.1";
  return {host, static_cast<std::uint16_t>(port)};
}

namespace {

sockaddr_in make_addr(const std::string& address) {
  auto [host, port] = split_host_port(address);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) {
    fail(ErrorCode::UsageError, "not an IPv4 address: " + host);
  }
  return sa;
}

std::string addr_to_string(const sockaddr_in& sa) {
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof buf);
  return std::string(buf) + ":" + std::to_string(ntohs(sa.sin_port));
}

void write_all(int fd, ByteView data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::ConnectionClosed, std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

// false on timeout.
bool wait_readable(int fd, int timeout_ms) {
  pollfd p{fd, POLLIN, 0};
  for (;;) {
    int r = ::poll(&p, 1, timeout_ms);
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) fail(ErrorCode::IoError, std::strerror(errno));
    return r > 0;
  }
}

// Reads exactly out.size() bytes; false on clean EOF before the first byte.
bool read_exact(int fd, std::span<std::uint8_t> out, int timeout_ms) {
  std::size_t off = 0;
  while (off < out.size()) {
    if (!wait_readable(fd, timeout_ms)) fail(ErrorCode::Timeout, "mid-frame");
    ssize_t n = ::recv(fd, out.data() + off, out.size() - off, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::ConnectionClosed, std::strerror(errno));
    }
    if (n == 0) {
      if (off == 0) return false;
      fail(ErrorCode::Truncated, "peer closed mid-frame");
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// nullopt on EOF.
std::optional<Bytes> read_frame(int fd, int body_timeout_ms) {
  std::array<std::uint8_t, 4> prefix{};
  if (!read_exact(fd, prefix, body_timeout_ms)) return std::nullopt;
  std::uint32_t n = read_prefix(prefix.data());
  if (n > kMaxFrame) fail(ErrorCode::FrameTooLarge, std::to_string(n) + " bytes");
  Bytes body(n);
  if (n > 0 && !read_exact(fd, body, body_timeout_ms)) fail(ErrorCode::Truncated, "frame body");
  return body;
}

constexpr int kBodyTimeoutMs = 10000;

}  // namespace

class TcpNetwork::Server {
 public:
  Server(const std::string& address, SessionFactory factory) : factory_(std::move(factory)) {
    sockaddr_in sa = make_addr(address);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) fail(ErrorCode::IoError, std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 || ::listen(fd_, 64) != 0) {
      std::string why = std::strerror(errno);
      ::close(fd_);
      fail(ErrorCode::IoError, "listen on " + address + ": " + why);
    }
    socklen_t len = sizeof sa;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    bound_ = addr_to_string(sa);
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  ~Server() { stop(); }

  const std::string& bound() const { return bound_; }

  void stop() {
    if (stopping_.exchange(true)) return;
    ::shutdown(fd_, SHUT_RDWR);
    if (acceptor_.joinable()) acceptor_.join();
    ::close(fd_);
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mu_);
      for (int c : client_fds_) ::shutdown(c, SHUT_RDWR);
      workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
  }

 private:
  void accept_loop() {
    while (!stopping_) {
      if (!wait_readable(fd_, 100)) continue;
      sockaddr_in peer{};
      socklen_t len = sizeof peer;
      int c = ::accept(fd_, reinterpret_cast<sockaddr*>(&peer), &len);
      if (c < 0) {
        if (stopping_) return;
        continue;
      }
      int one = 1;
      ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::lock_guard lock(mu_);
      if (stopping_) {
        ::close(c);
        return;
      }
      client_fds_.push_back(c);
      workers_.emplace_back([this, c, p = addr_to_string(peer)] { serve(c, p); });
    }
  }

  void serve(int fd, const std::string& peer) {
    try {
      auto session = factory_(peer);
      while (!stopping_) {
        if (!wait_readable(fd, 100)) continue;
        auto frame = read_frame(fd, kBodyTimeoutMs);
        if (!frame) break;
        SessionOutput out = session->on_frame(*frame);
        for (const auto& r : out.replies) write_all(fd, encode_frame(r));
        if (out.close) break;
      }
    } catch (const std::exception&) {
      // the connection is dropped; the server keeps running
    }
    std::lock_guard lock(mu_);
    std::erase(client_fds_, fd);
    ::close(fd);
  }

  SessionFactory factory_;
  int fd_ = -1;
  std::string bound_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

class TcpNetwork::TcpConnection final : public Connection {
 public:
  TcpConnection(int fd, std::string from, std::string to, bool internal, Transcript& transcript)
      : fd_(fd), from_(std::move(from)), to_(std::move(to)), internal_(internal),
        transcript_(transcript) {}
  ~TcpConnection() override { close(); }

  void send(const Bytes& payload) override {
    if (fd_ < 0) fail(ErrorCode::ConnectionClosed, to_);
    write_all(fd_, encode_frame(payload));
    transcript_.add({0, from_, to_, payload, internal_, false});
  }

  Bytes recv(std::uint64_t timeout_ticks) override {
    if (fd_ < 0) fail(ErrorCode::ConnectionClosed, to_);
    int ms = static_cast<int>(std::min<std::uint64_t>(timeout_ticks, 600000));
    if (!wait_readable(fd_, ms)) fail(ErrorCode::Timeout, to_);
    auto frame = read_frame(fd_, kBodyTimeoutMs);
    if (!frame) fail(ErrorCode::ConnectionClosed, to_);
    transcript_.add({0, to_, from_, *frame, internal_, false});
    return *frame;
  }

  void close() override {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
  std::string from_;
  std::string to_;
  bool internal_;
  Transcript& transcript_;
};

TcpNetwork::TcpNetwork() = default;
TcpNetwork::~TcpNetwork() { stop(); }

std::string TcpNetwork::listen(const Endpoint& endpoint, SessionFactory factory) {
  auto server = std::make_unique<Server>(endpoint.address, std::move(factory));
  std::string bound = server->bound();
  std::lock_guard lock(mu_);
  roles_[bound] = endpoint.role;
  servers_.push_back(std::move(server));
  return bound;
}

std::unique_ptr<Connection> TcpNetwork::connect(const std::string& address,
                                                const std::string& from) {
  sockaddr_in sa = make_addr(address);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail(ErrorCode::IoError, std::strerror(errno));
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    std::string why = std::strerror(errno);
    ::close(fd);
    fail(ErrorCode::ConnectionClosed, address + ": " + why);
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  bool internal = false;
  {
    std::lock_guard lock(mu_);
    auto it = roles_.find(address);
    internal = it != roles_.end() && it->second == Role::Backend;
  }
  return std::make_unique<TcpConnection>(fd, from, address, internal, transcript_);
}

void TcpNetwork::stop() {
  std::vector<std::unique_ptr<Server>> servers;
  {
    std::lock_guard lock(mu_);
    servers.swap(servers_);
  }
  for (auto& s : servers) s->stop();
}

void serve_tcp_forever(const std::string& address, SessionFactory factory,
                       const std::function<void(const std::string& bound)>& on_bound,
                       const std::atomic<bool>& stop) {
  TcpNetwork net;
  std::string bound = net.listen({address, Role::AppServer}, std::move(factory));
  if (on_bound) on_bound(bound);
  while (!stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  net.stop();
}

}  // namespace kerbpk::net
