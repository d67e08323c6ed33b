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

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "kerbpk/client.hpp"
#include "kerbpk/gateway.hpp"
#include "kerbpk/kdc.hpp"
#include "kerbpk/net.hpp"
#include "kerbpk/scenario.hpp"
#include "kerbpk/secure_context.hpp"
#include "kerbpk/services.hpp"

namespace kerbpk::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string provider = "standard";
  std::string realm = "EXAMPLE.ORG";
  std::string db = "kerbpk.db";
  std::string ccache = "kerbpk.ccache";
};

void add_provider(CLI::App* cmd, Common& c) {
  cmd->add_option("--provider", c.provider, "Crypto provider")
      ->check(CLI::IsMember({"toy", "standard"}))
      ->capture_default_str();
}

void add_realm(CLI::App* cmd, Common& c) {
  cmd->add_option("--realm", c.realm, "Realm")->envname("KERBPK_REALM")->capture_default_str();
}

void add_db(CLI::App* cmd, Common& c) {
  cmd->add_option("--db", c.db, "Principal database")->envname("KERBPK_DB")->capture_default_str();
}

void add_ccache(CLI::App* cmd, Common& c) {
  cmd->add_option("--ccache", c.ccache, "Credential cache")
      ->envname("KERBPK_CCACHE")
      ->capture_default_str();
}

std::string file_stem_for(std::string name) {
  std::replace(name.begin(), name.end(), '/', '_');
  std::replace(name.begin(), name.end(), '@', '_');
  return name;
}

// Escapes bytes for a single key=value line.
std::string printable(ByteView bytes) {
  std::string out;
  for (auto b : bytes) {
    if (b == '\n') {
      out += "\\n";
    } else if (b == '\\') {
      out += "\\\\";
    } else if (b >= 0x20 && b < 0x7f) {
      out += static_cast<char>(b);
    } else {
      static const char* hex = "0123456789abcdef";
      out += "\\x";
      out += hex[b >> 4];
      out += hex[b & 15];
    }
  }
  return out;
}

gss::MechanismName service_name(const std::string& input, const std::string& realm) {
  auto type = input.find('@') != std::string::npos ? gss::NameType::HostBasedService
                                                   : gss::NameType::PrincipalName;
  return gss::canonicalize_name(gss::import_name(input, type), gss::Mechanism::KerberosLike, realm);
}

kdc::PrincipalDb open_or_create_db(const Common& c, const crypto::CryptoProvider& provider,
                                   crypto::Rng& rng) {
  if (!fs::exists(c.db)) return kdc::PrincipalDb::create(c.realm, provider, rng);
  auto db = kdc::PrincipalDb::load(c.db);
  if (db.realm() != c.realm) {
    fail(ErrorCode::UsageError, c.db + " serves realm " + db.realm() + ", not " + c.realm);
  }
  auto tgs = db.find(db.tgs_principal().name);
  if (tgs && tgs->long_term_key.provider_id != provider.id()) {
    fail(ErrorCode::ProviderMismatch, c.db + " uses provider " + tgs->long_term_key.provider_id);
  }
  return db;
}

std::unique_ptr<crypto::CryptoProvider> provider_of(const kdc::PrincipalDb& db) {
  auto tgs = db.find(db.tgs_principal().name);
  return crypto::make_provider(tgs->long_term_key.provider_id);
}

void write_ready(const std::string& path, const std::string& bound) {
  if (path.empty()) return;
  auto tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    f << bound << '\n';
  }
  fs::rename(tmp, path);
}

void save_keytab(const fs::path& path, const kdc::PrincipalRecord& rec) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
  f << to_hex(codec::encode(rec)) << '\n';
}

kdc::PrincipalRecord load_keytab(const fs::path& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::getline(f, line);
  return codec::decode<kdc::PrincipalRecord>(from_hex(line));
}

void wait_for_stop(const std::atomic<bool>& stop) {
  while (!stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>& stop) {
  CLI::App app{"kerbpk: public-key initial authentication, tickets and protected channels",
               "kerbpk"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::function<void()> action;
  Common c;

  // kdc ---------------------------------------------------------------------
  auto* kdc_cmd = app.add_subcommand("kdc", "Key distribution center");
  kdc_cmd->require_subcommand(1);

  std::string listen = "127.0.0.1:8800";
  std::string ready_file;
  std::uint64_t skew = 300;
  std::uint64_t lifetime = 28800;
  bool enforce_address = false;

  std::string as_listen = "127.0.0.1:8801";
  std::string tgs_listen = "127.0.0.1:8802";
  auto* kdc_serve = kdc_cmd->add_subcommand("serve", "Serve AS and TGS requests");
  add_db(kdc_serve, c);
  kdc_serve->add_option("--as-listen", as_listen, "AS host:port, port 0 for ephemeral")
      ->capture_default_str();
  kdc_serve->add_option("--tgs-listen", tgs_listen, "TGS host:port, port 0 for ephemeral")
      ->capture_default_str();
  kdc_serve->add_option("--ready-file", ready_file, "Write the bound AS and TGS addresses here");
  kdc_serve->add_option("--skew", skew, "Clock skew allowance, seconds")->capture_default_str();
  kdc_serve->add_option("--lifetime", lifetime, "Maximum ticket lifetime, seconds")->capture_default_str();
  kdc_serve->add_flag("--enforce-address", enforce_address, "Bind tickets to the client address");
  kdc_serve->callback([&] {
    action = [&] {
      auto db = kdc::PrincipalDb::load(c.db);
      auto provider = provider_of(db);
      crypto::SharedRng rng(std::make_unique<crypto::SystemRng>());
      kdc::KdcConfig cfg{lifetime, skew, 2 * skew, enforce_address};
      kdc::Kdc kdc(db, *provider, cfg, rng);
      net::TcpNetwork network;
      auto as_bound = network.listen({as_listen, net::Role::KdcAs},
                                     svc::make_kdc_as_service(kdc, svc::system_now));
      auto tgs_bound = network.listen({tgs_listen, net::Role::KdcTgs},
                                      svc::make_kdc_tgs_service(kdc, svc::system_now));
      out << "as=" << as_bound << " tgs=" << tgs_bound << " realm=" << db.realm()
          << " principals=" << db.key_count() << std::endl;
      write_ready(ready_file, as_bound + "\n" + tgs_bound);
      wait_for_stop(stop);
      network.stop();
      out << "as_requests=" << kdc.as_requests() << " tgs_requests=" << kdc.tgs_requests()
          << " tickets_issued=" << kdc.tickets_issued() << std::endl;
    };
  });

  std::string user;
  std::string password;
  std::string identity_path;
  bool no_cert = false;
  auto* reg_user = kdc_cmd->add_subcommand("register-user", "Add a user with a key pair");
  add_db(reg_user, c);
  add_realm(reg_user, c);
  add_provider(reg_user, c);
  reg_user->add_option("--user", user, "User name")->required();
  reg_user->add_option("--password", password, "Password")->required();
  reg_user->add_option("--identity-out", identity_path, "Identity file (default <user>.id)");
  reg_user->add_flag("--no-cert", no_cert, "Register without a certificate");
  reg_user->callback([&] {
    action = [&] {
      auto provider = crypto::make_provider(c.provider);
      crypto::SystemRng rng;
      auto db = open_or_create_db(c, *provider, rng);
      Bytes public_key;
      crypto::KeyPair kp;
      if (!no_cert) {
        kp = provider->generate_keypair(rng);
        public_key = kp.public_key;
      }
      auto rec = db.register_user(*provider, user, password, public_key, rng);
      std::string id_path = identity_path.empty() ? file_stem_for(user) + ".id" : identity_path;
      if (rec.certificate) client::save_identity_file(id_path, {kp, *rec.certificate});
      db.save(c.db);
      out << "principal=" << rec.principal.to_string();
      if (rec.certificate) {
        out << " serial=" << rec.certificate->serial << " identity=" << id_path;
      }
      out << " key_count=" << db.key_count() << '\n';
    };
  });

  std::string service;
  std::string keytab;
  auto* reg_svc = kdc_cmd->add_subcommand("register-service", "Add a service principal");
  add_db(reg_svc, c);
  add_realm(reg_svc, c);
  add_provider(reg_svc, c);
  reg_svc->add_option("--service", service, "service@host or a principal name")->required();
  reg_svc->add_option("--keytab-out", keytab, "Service key file (default <service>.keytab)");
  reg_svc->callback([&] {
    action = [&] {
      auto provider = crypto::make_provider(c.provider);
      crypto::SystemRng rng;
      auto db = open_or_create_db(c, *provider, rng);
      auto name = service_name(service, db.realm());
      auto rec = db.register_service(*provider, name.principal().name, rng);
      std::string path = keytab.empty() ? file_stem_for(service) + ".keytab" : keytab;
      save_keytab(path, rec);
      db.save(c.db);
      out << "principal=" << rec.principal.to_string() << " keytab=" << path
          << " key_count=" << db.key_count() << '\n';
    };
  });

  // client ------------------------------------------------------------------
  auto* client_cmd = app.add_subcommand("client", "User-side operations");
  client_cmd->require_subcommand(1);
  std::string kdc_addr = "127.0.0.1:8801";
  std::string tgs_addr = "127.0.0.1:8802";

  auto* kinit = client_cmd->add_subcommand("kinit", "Obtain a ticket-granting ticket");
  add_realm(kinit, c);
  add_provider(kinit, c);
  add_ccache(kinit, c);
  kinit->add_option("--user", user, "User name")->required();
  kinit->add_option("--password", password, "Password")->required();
  kinit->add_option("--identity", identity_path, "Identity file (default <user>.id)");
  kinit->add_option("--kdc", kdc_addr, "AS host:port")->capture_default_str();
  kinit->callback([&] {
    action = [&] {
      auto provider = crypto::make_provider(c.provider);
      crypto::SystemRng rng;
      std::string id_path = identity_path.empty() ? file_stem_for(user) + ".id" : identity_path;
      auto id = client::load_identity_file(id_path);
      client::ClientIdentity identity{{user, c.realm}, password, id.keypair, id.certificate};
      client::ClientAgent agent(identity.principal, *provider, rng);
      net::TcpNetwork network;
      agent.kinit(identity, svc::make_kdc_exchange(network, kdc_addr, "client"), svc::system_now());
      client::save_ccache(c.ccache, agent.cache());
      out << "principal=" << identity.principal.to_string()
          << " tgt_till=" << agent.cache().tgt->validity.till << " ccache=" << c.ccache << '\n';
    };
  });

  auto* get_ticket = client_cmd->add_subcommand("get-ticket", "Obtain a service ticket");
  add_provider(get_ticket, c);
  add_ccache(get_ticket, c);
  get_ticket->add_option("--service", service, "service@host or a principal name")->required();
  get_ticket->add_option("--tgs", tgs_addr, "TGS host:port")->capture_default_str();
  get_ticket->callback([&] {
    action = [&] {
      auto provider = crypto::make_provider(c.provider);
      crypto::SystemRng rng;
      auto cache = client::load_ccache(c.ccache);
      client::ClientAgent agent(cache.client, *provider, rng);
      agent.set_cache(cache);
      net::TcpNetwork network;
      auto name = service_name(service, cache.client.realm);
      Timestamp now = svc::system_now();
      auto sc = agent.get_service_ticket(name.principal().name, agent.service_validity(now), now,
                                         svc::make_kdc_exchange(network, tgs_addr, "client"));
      client::save_ccache(c.ccache, agent.cache());
      out << "service=" << name.principal().to_string() << " till=" << sc.validity.till
          << " kdc_requests=" << agent.kdc_requests() << '\n';
    };
  });

  std::string server;
  std::string resource;
  std::string body;
  bool plain = false;
  unsigned repeat = 1;
  auto* fetch = client_cmd->add_subcommand("fetch", "Request a resource from a service or gateway");
  add_provider(fetch, c);
  add_ccache(fetch, c);
  fetch->add_option("--service", service, "service@host of the server");
  fetch->add_option("--server", server, "Server host:port")->required();
  fetch->add_option("--tgs", tgs_addr, "TGS host:port")->capture_default_str();
  fetch->add_option("--resource", resource, "Resource path")->required();
  fetch->add_option("--body", body, "Request body");
  fetch->add_option("--repeat", repeat, "Fetch this many times on one context")
      ->check(CLI::Range(1u, 100000u))
      ->capture_default_str();
  fetch->add_flag("--plain", plain, "Send without a security context");
  fetch->callback([&] {
    action = [&] {
      svc::AppRequest req{"GET", resource, to_bytes(body)};
      net::TcpNetwork network;
      auto print = [&](const svc::AppResponse& r) {
        out << "status=" << r.status << " served_from=" << svc::served_from_name(r.served_from)
            << " body=" << printable(r.body) << '\n';
      };
      if (plain) {
        for (unsigned i = 0; i < repeat; ++i) print(svc::plain_fetch(network, server, "client", req));
        return;
      }
      if (service.empty()) fail(ErrorCode::UsageError, "--service is required without --plain");
      auto provider = crypto::make_provider(c.provider);
      crypto::SystemRng rng;
      auto cache = client::load_ccache(c.ccache);
      client::ClientAgent agent(cache.client, *provider, rng);
      agent.set_cache(cache);
      svc::ServiceClient sc(agent, network, *provider, rng, service_name(service, cache.client.realm),
                            {tgs_addr, server, "client"});
      for (unsigned i = 0; i < repeat; ++i) print(sc.fetch(req, svc::system_now()));
      client::save_ccache(c.ccache, agent.cache());
      out << "kdc_requests=" << agent.kdc_requests() << " handshakes=" << sc.handshakes()
          << " handshake_legs=" << sc.handshake_legs() << '\n';
    };
  });

  // service -----------------------------------------------------------------
  auto* service_cmd = app.add_subcommand("service", "Application servers");
  service_cmd->require_subcommand(1);

  auto protected_config = [&](const std::string& label, crypto::CryptoProvider& provider,
                              crypto::Rng& rng) {
    auto rec = load_keytab(keytab);
    auto name = service_name(service.empty() ? rec.principal.name : service, rec.principal.realm);
    if (name.principal() != rec.principal) {
      fail(ErrorCode::PrincipalMismatch, keytab + " holds " + rec.principal.to_string());
    }
    auto cred = gss::acquire_credential(name, gss::CredUsage::Accept, rec.long_term_key);
    return std::make_shared<svc::ProtectedServiceConfig>(svc::ProtectedServiceConfig{
        label, provider, cred, rng, svc::system_now, skew, false, svc::echo_handler(), {},
        nullptr});
  };

  auto* serve_echo = service_cmd->add_subcommand("serve-echo", "Protected echo service");
  serve_echo->add_option("--service", service, "service@host");
  serve_echo->add_option("--keytab", keytab, "Service key file")->required();
  serve_echo->add_option("--listen", listen, "host:port")->capture_default_str();
  serve_echo->add_option("--ready-file", ready_file, "Write the bound address here");
  serve_echo->add_option("--skew", skew, "Clock skew allowance, seconds")->capture_default_str();
  serve_echo->callback([&] {
    action = [&] {
      auto rec = load_keytab(keytab);
      auto provider = crypto::make_provider(rec.long_term_key.provider_id);
      crypto::SharedRng rng(std::make_unique<crypto::SystemRng>());
      auto cfg = protected_config("echo", *provider, rng);
      net::serve_tcp_forever(
          listen, svc::make_protected_service(cfg),
          [&](const std::string& bound) {
            out << "listening=" << bound << " service=" << rec.principal.to_string() << std::endl;
            write_ready(ready_file, bound);
          },
          stop);
    };
  });

  std::string backend_name = "backend";
  auto* serve_backend = service_cmd->add_subcommand("serve-backend", "Plaintext internal backend");
  serve_backend->add_option("--listen", listen, "host:port")->capture_default_str();
  serve_backend->add_option("--name", backend_name, "Name echoed in responses")->capture_default_str();
  serve_backend->add_option("--ready-file", ready_file, "Write the bound address here");
  serve_backend->callback([&] {
    action = [&] {
      auto hits = std::make_shared<std::atomic<std::uint64_t>>(0);
      auto handler = [name = backend_name](const svc::AppRequest& req) {
        svc::AppResponse r;
        r.body = to_bytes("content of " + req.resource + " served by backend " + name);
        return r;
      };
      net::serve_tcp_forever(
          listen, svc::make_backend_service(handler, hits),
          [&](const std::string& bound) {
            out << "listening=" << bound << " backend=" << backend_name << std::endl;
            write_ready(ready_file, bound);
          },
          stop);
      out << "backend_hits=" << *hits << std::endl;
    };
  });

  // gateway -----------------------------------------------------------------
  std::string policy_path;
  std::string backends_path;
  auto* gw_cmd = app.add_subcommand("gateway", "Caching security gateway");
  gw_cmd->add_option("--policy", policy_path, "Policy file")->required();
  gw_cmd->add_option("--backends", backends_path, "Backend table file")->required();
  gw_cmd->add_option("--listen", listen, "host:port")->capture_default_str();
  gw_cmd->add_option("--service", service, "service@host of the gateway");
  gw_cmd->add_option("--keytab", keytab, "Gateway service key file")->required();
  gw_cmd->add_option("--ready-file", ready_file, "Write the bound address here");
  gw_cmd->add_option("--skew", skew, "Clock skew allowance, seconds")->capture_default_str();
  gw_cmd->callback([&] {
    action = [&] {
      auto policy = gateway::load_policy(policy_path);
      auto backends = gateway::load_backends(backends_path);
      auto rec = load_keytab(keytab);
      auto provider = crypto::make_provider(rec.long_term_key.provider_id);
      crypto::SharedRng rng(std::make_unique<crypto::SystemRng>());
      net::TcpNetwork backend_net;
      gateway::Gateway gw(policy, backends, backend_net);
      auto cfg = protected_config("gateway", *provider, rng);
      net::serve_tcp_forever(
          listen, gateway::make_gateway_service(gw, cfg),
          [&](const std::string& bound) {
            out << "listening=" << bound << " service=" << rec.principal.to_string()
                << " rules=" << policy.rules.size()
                << " cache=" << (policy.cache_enabled ? "on" : "off") << std::endl;
            write_ready(ready_file, bound);
          },
          stop);
      out << "backend_hits=" << gw.backend_hits() << " cache_hits=" << gw.cache_hits()
          << std::endl;
    };
  });

  // scenario ----------------------------------------------------------------
  auto* scen_cmd = app.add_subcommand("scenario", "Scripted simulations");
  scen_cmd->require_subcommand(1);
  std::string scenario_name;
  std::uint64_t seed = 1;
  std::string transport = "sim";
  std::string scen_provider;
  bool json = false;
  auto* scen_run = scen_cmd->add_subcommand("run", "Run a scenario file or bundled scenario");
  scen_run->add_option("scenario", scenario_name, "Path or bundled name")->required();
  scen_run->add_option("--seed", seed, "Seed for every party's randomness")->capture_default_str();
  scen_run->add_option("--transport", transport, "sim or tcp")
      ->check(CLI::IsMember({"sim", "tcp"}))
      ->capture_default_str();
  scen_run->add_option("--provider", scen_provider, "Override the scenario's provider")
      ->check(CLI::IsMember({"toy", "standard"}));
  scen_run->add_flag("--json", json, "Structured output");
  scen_run->callback([&] {
    action = [&] {
      auto script = scenario::load_script(scenario_name);
      scenario::RunOptions opts;
      opts.seed = seed;
      opts.transport = transport;
      if (!scen_provider.empty()) opts.provider = scen_provider;
      auto result = scenario::run(script, opts);
      out << (json ? result.report.to_json() : result.report.to_text());
    };
  });
  auto* scen_list = scen_cmd->add_subcommand("list", "List bundled scenarios");
  scen_list->callback([&] {
    action = [&] {
      for (const auto& n : scenario::bundled_names()) out << "scenario=" << n << '\n';
    };
  });

  // db ----------------------------------------------------------------------
  auto* db_cmd = app.add_subcommand("db", "Principal database");
  db_cmd->require_subcommand(1);
  auto* inspect = db_cmd->add_subcommand("inspect", "List principals and key counts");
  add_db(inspect, c);
  inspect->callback([&] {
    action = [&] {
      auto db = kdc::PrincipalDb::load(c.db);
      for (const auto& rec : db.records()) {
        out << "principal=" << rec.principal.to_string() << " kind=" << kdc::kind_name(rec.kind)
            << " provider=" << rec.long_term_key.provider_id
            << " certificate=" << (rec.certificate ? "yes" : "no") << '\n';
      }
      auto users = db.count(kdc::PrincipalKind::User);
      auto services = db.count(kdc::PrincipalKind::Service);
      out << "realm=" << db.realm() << " users=" << users << " services=" << services
          << " tgs=" << db.count(kdc::PrincipalKind::TgsService)
          << " key_count=" << db.key_count() << " pairwise_keys=" << users * services << '\n';
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const Error& e) {
    err << "error=" << e.name();
    if (!e.stage().empty()) err << " stage=" << e.stage();
    if (!e.detail().empty()) err << " detail=" << printable(to_bytes(e.detail()));
    err << '\n';
    return e.code() == ErrorCode::UsageError ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error=" << error_name(ErrorCode::InternalError)
        << " detail=" << printable(to_bytes(e.what())) << '\n';
    return kExitFailure;
  }
}

}  // namespace kerbpk::cli
