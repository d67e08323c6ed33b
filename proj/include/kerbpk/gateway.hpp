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

// Security gateway: policy-driven front door with an LRU response cache
// before plaintext internal backends.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kerbpk/net.hpp"
#include "kerbpk/services.hpp"

namespace kerbpk::gateway {

using svc::AppRequest;
using svc::AppResponse;

enum class PolicyAction : std::uint8_t { Protect, Bypass };
const char* action_name(PolicyAction a);

struct PolicyRule {
  std::string prefix;
  PolicyAction action = PolicyAction::Protect;
  friend bool operator==(const PolicyRule&, const PolicyRule&) = default;
};

struct GatewayPolicy {
  std::vector<PolicyRule> rules;
  bool cache_enabled = true;
  std::size_t cache_capacity = 128;

  // First matching prefix wins; Protect when nothing matches.
  PolicyAction match(std::string_view resource) const;
};

// Lines `protect <prefix>`, `bypass <prefix>`, `cache on|off [capacity]`;
// `#` starts a comment. PolicyParseError otherwise.
GatewayPolicy parse_policy(std::string_view text);
GatewayPolicy load_policy(const std::filesystem::path& path);

struct BackendRoute {
  std::string prefix;
  std::string address;
};

class BackendTable {
 public:
  void add(std::string prefix, std::string address);
  // First matching prefix.
  std::optional<std::string> lookup(std::string_view resource) const;
  const std::vector<BackendRoute>& routes() const { return routes_; }

 private:
  std::vector<BackendRoute> routes_;
};

// Lines `<prefix> <host:port>`. PolicyParseError otherwise.
BackendTable parse_backends(std::string_view text);
BackendTable load_backends(const std::filesystem::path& path);

// Least-recently-used map from resource to response. Internally
// synchronized.
class ResponseCache {
 public:
  explicit ResponseCache(std::size_t capacity) : capacity_(capacity) {}

  std::optional<AppResponse> get(const std::string& resource);
  void put(const std::string& resource, const AppResponse& response);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  using Entry = std::pair<std::string, AppResponse>;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> order_;  // front = most recent
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

class Gateway {
 public:
  Gateway(GatewayPolicy policy, BackendTable backends, net::Network& network,
          std::string self = "gateway");

  // Cache lookup, then forwarding. Unroutable or unreachable backends
  // yield status 502.
  AppResponse handle(const AppRequest& request);
  // Requests outside a security context: Bypass resources are served,
  // Protect resources raise AccessDenied.
  std::optional<AppResponse> handle_plain(const AppRequest& request);

  const GatewayPolicy& policy() const { return policy_; }
  std::uint64_t backend_hits() const { return backend_hits_; }
  std::uint64_t cache_hits() const { return cache_hits_; }
  std::uint64_t unreachable() const { return unreachable_; }

 private:
  AppResponse forward(const AppRequest& request);

  GatewayPolicy policy_;
  BackendTable backends_;
  net::Network& network_;
  std::string self_;
  ResponseCache cache_;
  std::atomic<std::uint64_t> backend_hits_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> unreachable_{0};
};

// Protected-service factory fronting `gw`: wrapped requests on an
// established context reach any resource; plaintext requests only Bypass
// resources.
net::SessionFactory make_gateway_service(Gateway& gw,
                                         std::shared_ptr<svc::ProtectedServiceConfig> base);

}  // namespace kerbpk::gateway
