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

#include "kerbpk/gateway.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace kerbpk::gateway {

namespace {

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string_view strip_comment(std::string_view line) {
  auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    ++lineno;
    auto words = split_words(strip_comment(line));
    if (!words.empty()) f(lineno, words);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void parse_fail(std::size_t lineno, const std::string& why) {
  fail(ErrorCode::PolicyParseError, "line " + std::to_string(lineno) + ": " + why);
}

}  // namespace

const char* action_name(PolicyAction a) { return a == PolicyAction::Bypass ? "bypass" : "protect"; }

PolicyAction GatewayPolicy::match(std::string_view resource) const {
  for (const auto& r : rules) {
    if (resource.starts_with(r.prefix)) return r.action;
  }
  return PolicyAction::Protect;
}

GatewayPolicy parse_policy(std::string_view text) {
  GatewayPolicy policy;
  for_each_line(text, [&](std::size_t lineno, const std::vector<std::string>& w) {
    if (w[0] == "protect" || w[0] == "bypass") {
      if (w.size() != 2) parse_fail(lineno, "expected '" + w[0] + " <prefix>'");
      policy.rules.push_back(
          {w[1], w[0] == "bypass" ? PolicyAction::Bypass : PolicyAction::Protect});
    } else if (w[0] == "cache") {
      if (w.size() < 2 || w.size() > 3 || (w[1] != "on" && w[1] != "off")) {
        parse_fail(lineno, "expected 'cache on|off [capacity]'");
      }
      policy.cache_enabled = w[1] == "on";
      if (w.size() == 3) {
        std::size_t cap = 0;
        auto [p, ec] = std::from_chars(w[2].data(), w[2].data() + w[2].size(), cap);
        if (ec != std::errc{} || p != w[2].data() + w[2].size()) parse_fail(lineno, "bad capacity");
        policy.cache_capacity = cap;
      }
      if (policy.cache_enabled && policy.cache_capacity == 0) parse_fail(lineno, "capacity 0");
    } else {
      parse_fail(lineno, "unknown directive '" + w[0] + "'");
    }
  });
  return policy;
}

GatewayPolicy load_policy(const std::filesystem::path& path) {
  return parse_policy(read_file(path));
}

void BackendTable::add(std::string prefix, std::string address) {
  routes_.push_back({std::move(prefix), std::move(address)});
}

std::optional<std::string> BackendTable::lookup(std::string_view resource) const {
  for (const auto& r : routes_) {
    if (resource.starts_with(r.prefix)) return r.address;
  }
  return std::nullopt;
}

BackendTable parse_backends(std::string_view text) {
  BackendTable table;
  for_each_line(text, [&](std::size_t lineno, const std::vector<std::string>& w) {
    if (w.size() != 2) parse_fail(lineno, "expected '<prefix> <address>'");
    table.add(w[0], w[1]);
  });
  return table;
}

BackendTable load_backends(const std::filesystem::path& path) {
  return parse_backends(read_file(path));
}

std::optional<AppResponse> ResponseCache::get(const std::string& resource) {
  std::lock_guard lock(mu_);
  auto it = index_.find(resource);
  if (it == index_.end()) return std::nullopt;
  order_.splice(order_.begin(), order_, it->second);
  return it->second->second;
}

void ResponseCache::put(const std::string& resource, const AppResponse& response) {
  if (capacity_ == 0) return;
  std::lock_guard lock(mu_);
  if (auto it = index_.find(resource); it != index_.end()) {
    it->second->second = response;
    order_.splice(order_.begin(), order_, it->second);
    return;
  }
  order_.emplace_front(resource, response);
  index_[resource] = order_.begin();
  while (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

Gateway::Gateway(GatewayPolicy policy, BackendTable backends, net::Network& network,
                 std::string self)
    : policy_(std::move(policy)), backends_(std::move(backends)), network_(network),
      self_(std::move(self)), cache_(policy_.cache_enabled ? policy_.cache_capacity : 0) {}

AppResponse Gateway::forward(const AppRequest& request) {
  auto address = backends_.lookup(request.resource);
  auto unreachable = [&](const std::string& why) {
    ++unreachable_;
    AppResponse r;
    r.status = 502;
    r.body = to_bytes(std::string(error_name(ErrorCode::BackendUnreachable)) + ": " + why);
    return r;
  };
  if (!address) return unreachable("no route for " + request.resource);
  try {
    AppResponse resp = svc::plain_fetch(network_, *address, self_, request);
    ++backend_hits_;
    resp.served_from = svc::ServedFrom::Backend;
    return resp;
  } catch (const Error& e) {
    return unreachable(*address + " " + std::string(e.name()));
  }
}

AppResponse Gateway::handle(const AppRequest& request) {
  bool cacheable = policy_.cache_enabled && request.method == "GET";
  if (cacheable) {
    if (auto hit = cache_.get(request.resource)) {
      ++cache_hits_;
      hit->served_from = svc::ServedFrom::Cache;
      return *hit;
    }
  }
  AppResponse resp = forward(request);
  if (cacheable && resp.status == 200) cache_.put(request.resource, resp);
  return resp;
}

std::optional<AppResponse> Gateway::handle_plain(const AppRequest& request) {
  if (policy_.match(request.resource) != PolicyAction::Bypass) {
    fail(ErrorCode::AccessDenied, request.resource + " requires a security context");
  }
  return handle(request);
}

net::SessionFactory make_gateway_service(Gateway& gw,
                                         std::shared_ptr<svc::ProtectedServiceConfig> base) {
  base->handler = [&gw](const AppRequest& r) { return gw.handle(r); };
  base->plain = [&gw](const AppRequest& r) { return gw.handle_plain(r); };
  return svc::make_protected_service(std::move(base));
}

}  // namespace kerbpk::gateway
