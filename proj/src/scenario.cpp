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

#include "kerbpk/scenario.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "kerbpk/client.hpp"
#include "kerbpk/gateway.hpp"
#include "kerbpk/kdc.hpp"
#include "kerbpk/secure_context.hpp"
#include "kerbpk/services.hpp"

#ifndef KERBPK_SCENARIO_DIR
#define KERBPK_SCENARIO_DIR "scenarios"
#endif

namespace kerbpk::scenario {

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& why) {
  fail(ErrorCode::ScenarioParseError, "line " + std::to_string(line) + ": " + why);
}

std::vector<std::string> words_of(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line, const char* what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
    parse_fail(line, std::string("bad ") + what + " '" + s + "'");
  }
  return v;
}

struct StepSpec {
  const char* name;
  std::size_t min_args;
  std::size_t max_args;
};

constexpr StepSpec kSteps[] = {
    {"register-user", 1, 2},
    {"register-service", 1, 1},
    {"register-gateway", 1, 1},
    {"kinit", 1, 2},
    {"kinit-forged", 1, 1},
    {"kinit-wrong-cert", 1, 1},
    {"get-ticket", 2, 2},
    {"handshake", 2, 2},
    {"handshake-cached", 2, 2},
    {"request", 3, 4},
    {"fetch", 2, 3},
    {"fetch-plain", 1, 1},
    {"raw-request", 2, 2},
    {"advance", 1, 1},
    {"replay", 2, 3},
    {"reorder", 4, 4},
};

const StepSpec* find_step(const std::string& name) {
  for (const auto& s : kSteps) {
    if (name == s.name) return &s;
  }
  return nullptr;
}

const std::map<std::string, std::string>& default_settings() {
  static const std::map<std::string, std::string> d = {
      {"realm", "EXAMPLE.ORG"}, {"provider", "toy"},        {"skew", "300"},
      {"lifetime", "28800"},    {"enforce-address", "off"}, {"service-lifetime", "0"},
  };
  return d;
}

}  // namespace

Script parse_script(std::string_view text, std::string name) {
  Script script;
  script.name = std::move(name);
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    auto w = words_of(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (w.empty()) continue;
    const std::string& kw = w[0];
    if (kw == "set") {
      if (w.size() != 3) parse_fail(lineno, "expected 'set <key> <value>'");
      if (default_settings().count(w[1]) == 0) parse_fail(lineno, "unknown setting " + w[1]);
      script.settings[w[1]] = w[2];
    } else if (kw == "fault") {
      if (w.size() < 2) parse_fail(lineno, "expected 'fault <directive>'");
      std::string directive;
      for (std::size_t i = 1; i < w.size(); ++i) directive += w[i];
      try {
        script.faults.push_back(net::parse_fault(directive));
      } catch (const Error& e) {
        parse_fail(lineno, e.detail());
      }
    } else if (kw == "policy") {
      std::string rest;
      for (std::size_t i = 1; i < w.size(); ++i) rest += (i > 1 ? " " : "") + w[i];
      try {
        gateway::parse_policy(rest);
      } catch (const Error& e) {
        parse_fail(lineno, e.detail());
      }
      script.policy_lines.push_back(rest);
    } else if (kw == "backend") {
      if (w.size() != 3) parse_fail(lineno, "expected 'backend <prefix> <node>'");
      script.backends.push_back({w[1], w[2]});
    } else if (kw == "step") {
      if (w.size() < 2) parse_fail(lineno, "expected 'step <name> <args>'");
      std::size_t count = 1;
      std::size_t first = 1;
      if (w[1] == "repeat") {
        if (w.size() < 4) parse_fail(lineno, "expected 'step repeat <n> <name> <args>'");
        count = parse_u64(w[2], lineno, "repeat count");
        if (count == 0 || count > 100000) parse_fail(lineno, "repeat count out of range");
        first = 3;
      }
      Step step;
      step.line = lineno;
      step.name = w[first];
      step.args.assign(w.begin() + static_cast<std::ptrdiff_t>(first) + 1, w.end());
      const StepSpec* spec = find_step(step.name);
      if (!spec) parse_fail(lineno, "unknown step '" + step.name + "'");
      if (step.args.size() < spec->min_args || step.args.size() > spec->max_args) {
        parse_fail(lineno, "wrong argument count for " + step.name);
      }
      if (step.name == "advance") parse_u64(step.args[0], lineno, "seconds");
      if (step.name == "replay" && step.args[0] != "tgs" && step.args[0] != "leg1" &&
          step.args[0] != "wrap") {
        parse_fail(lineno, "replay target must be tgs, leg1 or wrap");
      }
      for (std::size_t i = 0; i < count; ++i) script.steps.push_back(step);
    } else {
      parse_fail(lineno, "unknown directive '" + kw + "'");
    }
  }
  for (const auto& [key, value] : script.settings) {
    if (key == "skew" || key == "lifetime" || key == "service-lifetime") parse_u64(value, 0, key.c_str());
    if (key == "provider" && value != "toy" && value != "standard") {
      parse_fail(0, "provider must be toy or standard");
    }
    if (key == "enforce-address" && value != "on" && value != "off") {
      parse_fail(0, "enforce-address must be on or off");
    }
  }
  return script;
}

std::filesystem::path bundled_dir() {
  if (const char* env = std::getenv("KERBPK_SCENARIOS"); env && *env) return env;
  return KERBPK_SCENARIO_DIR;
}

std::vector<std::string> bundled_names() {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(bundled_dir(), ec)) {
    if (entry.path().extension() == ".scn") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Script load_script(const std::string& name_or_path) {
  std::filesystem::path path = name_or_path;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    path = bundled_dir() / std::filesystem::path(name_or_path).filename();
    if (path.extension() != ".scn") path += ".scn";
  }
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ScenarioParseError, "no scenario at " + name_or_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str(), path.stem().string());
}

std::string StepOutcome::get(const std::string& key) const {
  for (const auto& [k, v] : extra) {
    if (k == key) return v;
  }
  return {};
}

bool Report::all_ok() const {
  return first_failure() == nullptr;
}

const StepOutcome* Report::first_failure() const {
  for (const auto& s : steps) {
    if (!s.ok()) return &s;
  }
  return nullptr;
}

std::vector<const StepOutcome*> Report::find(const std::string& step_name) const {
  std::vector<const StepOutcome*> out;
  for (const auto& s : steps) {
    if (s.name == step_name) out.push_back(&s);
  }
  return out;
}

namespace {

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace

std::string Report::to_text() const {
  std::ostringstream out;
  out << "scenario name=" << scenario << " seed=" << seed << " provider=" << provider
      << " transport=" << transport << " steps=" << steps.size() << '\n';
  for (const auto& s : steps) {
    out << "step index=" << s.index << " name=" << s.name;
    if (!s.args.empty()) out << " args=" << join(s.args, ',');
    out << " outcome=" << s.outcome;
    if (!s.stage.empty()) out << " stage=" << s.stage;
    for (const auto& [k, v] : s.extra) out << ' ' << k << '=' << v;
    out << '\n';
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto sp = events[i].find(' ');
    out << "event index=" << (i + 1) << " source=" << events[i].substr(0, sp)
        << " error=" << events[i].substr(sp + 1) << '\n';
  }
  for (const auto& c : clients) {
    out << "client name=" << c.name << " tgt=" << (c.tgt ? "present" : "absent")
        << " service_tickets=" << c.service_tickets << '\n';
  }
  std::size_t ok = 0;
  for (const auto& s : steps) ok += s.ok() ? 1 : 0;
  out << "summary steps_ok=" << ok << " steps_failed=" << (steps.size() - ok)
      << " kdc_requests=" << kdc_requests << " handshake_legs=" << handshake_legs
      << " frames=" << frames << " backend_hits=" << backend_hits << " cache_hits=" << cache_hits
      << " tickets_issued=" << tickets_issued << " key_count=" << key_count
      << " events=" << events.size() << '\n';
  return out.str();
}

std::string Report::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["seed"] = seed;
  j["provider"] = provider;
  j["transport"] = transport;
  j["steps"] = nlohmann::ordered_json::array();
  for (const auto& s : steps) {
    nlohmann::ordered_json js;
    js["index"] = s.index;
    js["name"] = s.name;
    js["args"] = s.args;
    js["outcome"] = s.outcome;
    if (!s.stage.empty()) js["stage"] = s.stage;
    for (const auto& [k, v] : s.extra) js[k] = v;
    j["steps"].push_back(js);
  }
  j["events"] = events;
  j["clients"] = nlohmann::ordered_json::array();
  for (const auto& c : clients) {
    j["clients"].push_back({{"name", c.name}, {"tgt", c.tgt}, {"service_tickets", c.service_tickets}});
  }
  j["kdc_requests"] = kdc_requests;
  j["handshake_legs"] = handshake_legs;
  j["frames"] = frames;
  j["backend_hits"] = backend_hits;
  j["cache_hits"] = cache_hits;
  j["tickets_issued"] = tickets_issued;
  j["key_count"] = key_count;
  return j.dump(2) + "\n";
}

namespace {

// FNV-1a, so per-party seeds do not depend on the standard library.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr Timestamp kEpoch = 1'700'000'000;

struct UserState {
  client::ClientIdentity identity;
  bool registered = false;
  std::unique_ptr<crypto::Rng> rng;
  std::unique_ptr<client::ClientAgent> agent;
  std::map<std::string, std::unique_ptr<svc::ServiceClient>> sessions;
};

struct ServiceState {
  gss::MechanismName name;
  std::string address;
  std::unique_ptr<crypto::Rng> rng;
  bool is_gateway = false;
};

class Runner {
 public:
  Runner(const Script& script, const RunOptions& opts) : script_(script), opts_(opts) {
    auto setting = [&](const std::string& key) {
      auto it = script.settings.find(key);
      return it != script.settings.end() ? it->second : default_settings().at(key);
    };
    realm_ = setting("realm");
    provider_name_ = opts.provider.value_or(setting("provider"));
    provider_ = crypto::make_provider(provider_name_);
    skew_ = std::stoull(setting("skew"));
    lifetime_ = std::stoull(setting("lifetime"));
    service_lifetime_ = std::stoull(setting("service-lifetime"));
    enforce_address_ = setting("enforce-address") == "on";
    clock_ = kEpoch;

    net::FaultScript faults = script.faults;
    faults.insert(faults.end(), opts.extra_faults.begin(), opts.extra_faults.end());
    if (opts.transport == "sim") {
      network_ = std::make_unique<net::SimNetwork>(std::move(faults));
    } else if (opts.transport == "tcp") {
      if (!faults.empty()) fail(ErrorCode::UsageError, "faults need the sim transport");
      network_ = std::make_unique<net::TcpNetwork>();
    } else {
      fail(ErrorCode::UsageError, "transport must be sim or tcp");
    }

    kdc_rng_ = make_rng("kdc");
    db_ = std::make_unique<kdc::PrincipalDb>(kdc::PrincipalDb::create(realm_, *provider_, *kdc_rng_));
    kdc::KdcConfig cfg;
    cfg.clock_skew = skew_;
    cfg.max_ticket_lifetime = lifetime_;
    cfg.replay_window = 2 * skew_;
    cfg.enforce_address = enforce_address_;
    kdc_ = std::make_unique<kdc::Kdc>(*db_, *provider_, cfg, *kdc_rng_);
    as_address_ = listen("kdc-as", net::Role::KdcAs, svc::make_kdc_as_service(*kdc_, clock(), &events_));
    tgs_address_ =
        listen("kdc-tgs", net::Role::KdcTgs, svc::make_kdc_tgs_service(*kdc_, clock(), &events_));

    backend_hits_ = std::make_shared<std::atomic<std::uint64_t>>(0);
    for (const auto& b : script.backends) {
      std::string node = b.node;
      auto handler = [node](const svc::AppRequest& req) {
        svc::AppResponse resp;
        resp.status = 200;
        resp.body = to_bytes("content of " + req.resource + " served by backend " + node);
        return resp;
      };
      std::string addr;
      auto it = backend_addresses_.find(node);
      if (it == backend_addresses_.end()) {
        addr = listen("backend-" + node, net::Role::Backend,
                      svc::make_backend_service(handler, backend_hits_));
        backend_addresses_[node] = addr;
      } else {
        addr = it->second;
      }
      backends_.add(b.prefix, addr);
    }
  }

  ~Runner() { network_->stop(); }

  RunResult run() {
    RunResult result;
    Report& r = result.report;
    r.scenario = script_.name;
    r.seed = opts_.seed;
    r.provider = provider_name_;
    r.transport = opts_.transport;
    std::size_t index = 0;
    for (const auto& step : script_.steps) {
      StepOutcome o;
      o.index = ++index;
      o.name = step.name;
      o.args = step.args;
      try {
        execute(step, o);
        o.outcome = "ok";
      } catch (const Error& e) {
        o.outcome = std::string(e.name());
        o.stage = e.stage();
      } catch (const std::exception& e) {
        o.outcome = std::string(error_name(ErrorCode::InternalError));
      }
      r.steps.push_back(std::move(o));
    }
    r.events = events_.events();
    for (const auto& [name, u] : users_) {
      if (!u.agent) continue;
      const auto& cache = u.agent->cache();
      r.clients.push_back({name, cache.tgt.has_value(), cache.service_creds.size()});
    }
    r.kdc_requests = kdc_->as_requests() + kdc_->tgs_requests();
    for (const auto& [name, u] : users_) {
      for (const auto& [svc_name, sc] : u.sessions) r.handshake_legs += sc->handshake_legs();
    }
    r.frames = network_->transcript().size();
    r.backend_hits = *backend_hits_;
    r.cache_hits = gateway_ ? gateway_->cache_hits() : 0;
    r.tickets_issued = kdc_->tickets_issued();
    r.key_count = db_->key_count();
    result.transcript = network_->transcript().entries();
    return result;
  }

 private:
  std::unique_ptr<crypto::Rng> make_rng(std::string_view label) {
    return std::make_unique<crypto::SharedRng>(
        std::make_unique<crypto::SeededRng>(derive_seed(opts_.seed, label)));
  }

  svc::Clock clock() {
    return [this] { return clock_.load(); };
  }

  std::string listen(const std::string& node, net::Role role, net::SessionFactory factory) {
    std::string address = opts_.transport == "sim" ? node : "127.0.0.1:0";
    return network_->listen({address, role}, std::move(factory));
  }

  client::KdcExchange as_exchange(const std::string& from) {
    return svc::make_kdc_exchange(*network_, as_address_, from);
  }
  client::KdcExchange tgs_exchange(const std::string& from) {
    return svc::make_kdc_exchange(*network_, tgs_address_, from);
  }

  UserState& user(const std::string& name) {
    auto& u = users_[name];
    if (!u.agent) {
      u.rng = make_rng("user:" + name);
      u.identity.principal = {name, realm_};
      client::ClientConfig cfg;
      cfg.clock_skew = skew_;
      cfg.default_lifetime = lifetime_;
      cfg.service_lifetime = service_lifetime_;
      u.agent = std::make_unique<client::ClientAgent>(u.identity.principal, *provider_, *u.rng, cfg);
    }
    return u;
  }

  ServiceState& service(const std::string& name) {
    auto it = services_.find(name);
    if (it == services_.end()) fail(ErrorCode::UnknownService, name + " is not registered here");
    return it->second;
  }

  gss::MechanismName host_based(const std::string& name) {
    return gss::canonicalize_name(gss::import_name(name, gss::NameType::HostBasedService),
                                  gss::Mechanism::KerberosLike, realm_);
  }

  svc::ServiceClient& session(const std::string& user_name, const std::string& svc_name) {
    auto& u = user(user_name);
    auto& s = service(svc_name);
    auto& slot = u.sessions[svc_name];
    if (!slot) {
      svc::ServiceClientConfig cfg{tgs_address_, s.address, user_name};
      slot = std::make_unique<svc::ServiceClient>(*u.agent, *network_, *provider_, *u.rng, s.name,
                                                  cfg);
    }
    return *slot;
  }

  void register_protected(const std::string& name, bool is_gateway) {
    if (services_.count(name) != 0) fail(ErrorCode::DuplicatePrincipal, name);
    auto mech = host_based(name);
    auto rec = db_->register_service(*provider_, mech.principal().name, *kdc_rng_);
    ServiceState st{mech, {}, make_rng("service:" + name), is_gateway};
    auto cred = gss::acquire_credential(mech, gss::CredUsage::Accept, rec.long_term_key);
    auto cfg = std::make_shared<svc::ProtectedServiceConfig>(svc::ProtectedServiceConfig{
        name, *provider_, cred, *st.rng, clock(), skew_, enforce_address_, svc::echo_handler(),
        {}, &events_});
    if (is_gateway) {
      if (gateway_) fail(ErrorCode::UsageError, "one gateway per scenario");
      std::string policy_text;
      for (const auto& line : script_.policy_lines) policy_text += line + "\n";
      gateway_ = std::make_unique<gateway::Gateway>(gateway::parse_policy(policy_text), backends_,
                                                    *network_, "gateway");
      cfg->name = "gateway";
      st.address = listen("gw-" + name, net::Role::Gateway,
                          gateway::make_gateway_service(*gateway_, cfg));
      gateway_name_ = name;
    } else {
      st.address = listen("app-" + name, net::Role::AppServer, svc::make_protected_service(cfg));
    }
    services_.emplace(name, std::move(st));
  }

  void kinit_with(UserState& u, client::ClientIdentity identity) {
    u.agent->kinit(identity, as_exchange(identity.principal.name), clock_);
  }

  static void response_extras(StepOutcome& o, const svc::AppResponse& resp) {
    o.extra.emplace_back("status", std::to_string(resp.status));
    o.extra.emplace_back("served_from", svc::served_from_name(resp.served_from));
    o.extra.emplace_back("body_len", std::to_string(resp.body.size()));
  }

  void execute(const Step& step, StepOutcome& o) {
    const auto& a = step.args;
    const std::string& n = step.name;
    if (n == "register-user") {
      auto& u = user(a[0]);
      if (u.registered) fail(ErrorCode::DuplicatePrincipal, a[0]);
      u.identity.password = a.size() > 1 ? a[1] : "pw-" + a[0];
      u.identity.keypair = provider_->generate_keypair(*u.rng);
      auto rec = db_->register_user(*provider_, a[0], u.identity.password,
                                    u.identity.keypair.public_key, *kdc_rng_);
      u.identity.certificate = *rec.certificate;
      u.registered = true;
    } else if (n == "register-service") {
      register_protected(a[0], false);
    } else if (n == "register-gateway") {
      register_protected(a[0], true);
    } else if (n == "kinit") {
      auto& u = user(a[0]);
      client::ClientIdentity id = u.identity;
      if (!u.registered) {
        // Unregistered principal: a self-made identity the KDC has never seen.
        id.password = "pw-" + a[0];
        id.keypair = provider_->generate_keypair(*u.rng);
        id.certificate = {id.principal, id.keypair.public_key, 0};
      }
      if (a.size() > 1) id.password = a[1];
      kinit_with(u, id);
    } else if (n == "kinit-forged") {
      auto& u = user(a[0]);
      client::ClientIdentity id = u.identity;
      id.keypair = provider_->generate_keypair(*u.rng);
      kinit_with(u, id);
    } else if (n == "kinit-wrong-cert") {
      auto& u = user(a[0]);
      client::ClientIdentity id = u.identity;
      id.keypair = provider_->generate_keypair(*u.rng);
      id.certificate.public_key = id.keypair.public_key;
      kinit_with(u, id);
    } else if (n == "get-ticket") {
      auto& u = user(a[0]);
      auto mech = host_based(a[1]);
      auto sc = u.agent->get_service_ticket(mech.principal().name, u.agent->service_validity(clock_),
                                            clock_, tgs_exchange(a[0]));
      o.extra.emplace_back("till", std::to_string(sc.validity.till - kEpoch));
    } else if (n == "handshake" || n == "handshake-cached") {
      auto& sc = session(a[0], a[1]);
      auto before = sc.handshake_legs();
      sc.establish(clock_, n == "handshake");
      o.extra.emplace_back("legs", std::to_string(sc.handshake_legs() - before));
    } else if (n == "request") {
      svc::AppRequest req{"GET", a[2], a.size() > 3 ? to_bytes(a[3]) : Bytes{}};
      response_extras(o, session(a[0], a[1]).fetch(req, clock_));
    } else if (n == "fetch") {
      if (!gateway_) fail(ErrorCode::UsageError, "no gateway registered");
      svc::AppRequest req{"GET", a[1], a.size() > 2 ? to_bytes(a[2]) : Bytes{}};
      response_extras(o, session(a[0], gateway_name_).fetch(req, clock_));
    } else if (n == "fetch-plain") {
      if (!gateway_) fail(ErrorCode::UsageError, "no gateway registered");
      svc::AppRequest req{"GET", a[0], {}};
      response_extras(o, svc::plain_fetch(*network_, service(gateway_name_).address, "anonymous",
                                          req));
    } else if (n == "raw-request") {
      auto conn = network_->connect(service(a[0]).address, "anonymous");
      conn->send(codec::encode(svc::AppRequest{"GET", a[1], {}}));
      Bytes reply = conn->recv(network_->default_timeout());
      response_extras(o, decode_reply<svc::AppResponse>(reply));
    } else if (n == "advance") {
      clock_ += std::stoull(a[0]);
      o.extra.emplace_back("now", std::to_string(clock_ - kEpoch));
    } else if (n == "replay") {
      replay(a, o);
    } else if (n == "reorder") {
      reorder(a);
    }
  }

  void replay(const std::vector<std::string>& a, StepOutcome&) {
    auto& u = user(a[1]);
    if (a[0] == "tgs") {
      const Bytes& sent = u.agent->last_tgs_request();
      if (sent.empty()) fail(ErrorCode::UsageError, "no TGS request to replay");
      decode_reply<TgsReply>(tgs_exchange("attacker")(sent));
      return;
    }
    if (a.size() < 3) fail(ErrorCode::UsageError, "replay needs a service");
    auto& sc = session(a[1], a[2]);
    if (a[0] == "leg1") {
      if (sc.last_leg1().empty()) fail(ErrorCode::UsageError, "no leg-1 token to replay");
      auto conn = network_->connect(service(a[2]).address, "attacker");
      conn->send(sc.last_leg1());
      decode_reply<gss::ContextToken>(conn->recv(network_->default_timeout()));
      return;
    }
    if (sc.last_wrap().empty()) fail(ErrorCode::UsageError, "no wrap token to replay");
    try {
      decode_reply<gss::WrapToken>(sc.send_raw(sc.last_wrap()));
    } catch (...) {
      sc.reset();
      throw;
    }
  }

  void reorder(const std::vector<std::string>& a) {
    auto& sc = session(a[0], a[1]);
    if (!sc.live(clock_)) sc.establish(clock_);
    auto t1 = gss::wrap(*sc.context(), codec::encode(svc::AppRequest{"GET", a[2], {}}));
    auto t2 = gss::wrap(*sc.context(), codec::encode(svc::AppRequest{"GET", a[3], {}}));
    try {
      for (const auto* t : {&t2, &t1}) {
        auto token = decode_reply<gss::WrapToken>(sc.send_raw(codec::encode(*t)));
        gss::unwrap(*sc.context(), token);
      }
    } catch (Error& e) {
      sc.reset();
      e.with_stage("channel");
      throw;
    }
  }

  const Script& script_;
  RunOptions opts_;
  std::string realm_;
  std::string provider_name_;
  std::unique_ptr<crypto::CryptoProvider> provider_;
  std::uint64_t skew_ = 300;
  std::uint64_t lifetime_ = 28800;
  std::uint64_t service_lifetime_ = 0;
  bool enforce_address_ = false;
  std::atomic<Timestamp> clock_;

  std::unique_ptr<net::Network> network_;
  svc::EventSink events_;
  std::unique_ptr<crypto::Rng> kdc_rng_;
  std::unique_ptr<kdc::PrincipalDb> db_;
  std::unique_ptr<kdc::Kdc> kdc_;
  std::string as_address_;
  std::string tgs_address_;

  std::map<std::string, UserState> users_;
  std::map<std::string, ServiceState> services_;
  std::map<std::string, std::string> backend_addresses_;
  gateway::BackendTable backends_;
  std::shared_ptr<std::atomic<std::uint64_t>> backend_hits_;
  std::unique_ptr<gateway::Gateway> gateway_;
  std::string gateway_name_;
};

}  // namespace

RunResult run(const Script& script, const RunOptions& options) {
  Runner runner(script, options);
  return runner.run();
}

}  // namespace kerbpk::scenario
