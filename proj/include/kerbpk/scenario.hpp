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

// Scenario files drive whole deployments (KDC, services, gateway, clients)
// over the simulated or TCP transport and produce a deterministic report.
//
//   # comment
//   set realm EXAMPLE.ORG          realm, provider, skew, lifetime, enforce-address
//   fault DropNth(3)               see net::parse_fault
//   policy protect /secure/        gateway policy line
//   backend /secure/ store         route prefix to a backend node
//   step kinit alice               one protocol step
//   step repeat 10 fetch alice /x  the same step ten times

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kerbpk/net.hpp"

namespace kerbpk::scenario {

struct Step {
  std::size_t line = 0;
  std::string name;
  std::vector<std::string> args;
};

struct BackendDecl {
  std::string prefix;
  std::string node;
};

struct Script {
  std::string name;
  std::map<std::string, std::string> settings;
  net::FaultScript faults;
  std::vector<std::string> policy_lines;
  std::vector<BackendDecl> backends;
  std::vector<Step> steps;
};

// ScenarioParseError with the offending line number.
Script parse_script(std::string_view text, std::string name);
// A readable file path, or the name of a bundled scenario with or without
// the .scn suffix.
Script load_script(const std::string& name_or_path);

std::filesystem::path bundled_dir();
std::vector<std::string> bundled_names();

struct StepOutcome {
  std::size_t index = 0;
  std::string name;
  std::vector<std::string> args;
  std::string outcome;  // "ok" or an error name
  std::string stage;
  std::vector<std::pair<std::string, std::string>> extra;

  bool ok() const { return outcome == "ok"; }
  std::string get(const std::string& key) const;
};

struct ClientSummary {
  std::string name;
  bool tgt = false;
  std::size_t service_tickets = 0;
};

struct Report {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string provider;
  std::string transport;
  std::vector<StepOutcome> steps;
  std::vector<std::string> events;
  std::vector<ClientSummary> clients;
  std::uint64_t kdc_requests = 0;
  std::uint64_t handshake_legs = 0;
  std::uint64_t frames = 0;
  std::uint64_t backend_hits = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t tickets_issued = 0;
  std::uint64_t key_count = 0;

  bool all_ok() const;
  const StepOutcome* first_failure() const;
  // Outcomes of every step with this name, in order.
  std::vector<const StepOutcome*> find(const std::string& step_name) const;
  std::string to_text() const;
  std::string to_json() const;
};

struct RunOptions {
  std::uint64_t seed = 1;
  std::string transport = "sim";  // sim | tcp
  std::optional<std::string> provider;  // overrides `set provider`
  net::FaultScript extra_faults;
};

struct RunResult {
  Report report;
  std::vector<net::TranscriptEntry> transcript;
};

RunResult run(const Script& script, const RunOptions& options);

}  // namespace kerbpk::scenario
