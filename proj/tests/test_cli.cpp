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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "support.hpp"

namespace kerbpk::testing {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("kerbpk_cli_" + std::to_string(::getpid()) + "_" +
           ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err, never);
    return {code, out.str(), err.str()};
  }

  Result register_user(const std::string& user, const std::string& pw = "pw") {
    return run({"kdc", "register-user", "--db", path("db"), "--provider", "toy", "--user", user,
                "--password", pw, "--identity-out", path(user + ".id")});
  }
  Result register_service(const std::string& svc) {
    return run({"kdc", "register-service", "--db", path("db"), "--provider", "toy", "--service",
                svc, "--keytab-out", path(svc + ".keytab")});
  }

  fs::path dir;
  std::atomic<bool> never{false};
};

std::string line_with(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return line;
  }
  return {};
}

TEST_F(Cli, HelpExitsZero) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("scenario"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"kdc", "register-user", "--db", path("db")}).code, 2);
  EXPECT_EQ(run({"scenario", "run", "happy_path", "--transport", "carrier-pigeon"}).code, 2);
  EXPECT_EQ(run({"kdc", "register-user", "--provider", "rot13", "--user", "a", "--password", "p"}).code, 2);
}

TEST_F(Cli, KeyCountIsLinear) {
  for (int i = 0; i < 5; ++i) ASSERT_EQ(register_user("user" + std::to_string(i)).code, 0);
  for (const char* s : {"http@a.example", "ftp@b.example", "imap@c.example"}) {
    ASSERT_EQ(register_service(s).code, 0);
  }
  auto r = run({"db", "inspect", "--db", path("db")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_with(r.out, "realm="),
            "realm=EXAMPLE.ORG users=5 services=3 tgs=1 key_count=9 pairwise_keys=15");
  EXPECT_NE(r.out.find("principal=http/a.example@EXAMPLE.ORG kind=service"), std::string::npos);
}

TEST_F(Cli, DuplicateRegistrationFails) {
  ASSERT_EQ(register_user("alice").code, 0);
  auto r = register_user("alice");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error=DuplicatePrincipal", 0), 0u) << r.err;
}

TEST_F(Cli, InspectMissingDatabase) {
  auto r = run({"db", "inspect", "--db", path("absent")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error=IoError", 0), 0u) << r.err;
}

TEST_F(Cli, ScenarioRunIsDeterministic) {
  auto a = run({"scenario", "run", "happy_path", "--seed", "1"});
  auto b = run({"scenario", "run", "happy_path", "--seed", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("kdc_requests=2 handshake_legs=2"), std::string::npos);
  auto j = run({"scenario", "run", "happy_path", "--json"});
  EXPECT_EQ(j.code, 0);
  EXPECT_EQ(j.out.front(), '{');
}

TEST_F(Cli, FailingScenarioStillReportsAndExitsZero) {
  auto r = run({"scenario", "run", "replay_attack", "--seed", "7"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("outcome=ReplayDetected"), std::string::npos);
}

TEST_F(Cli, ScenarioList) {
  auto r = run({"scenario", "list"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("happy_path"), std::string::npos);
}

TEST_F(Cli, MissingScenarioFile) {
  auto r = run({"scenario", "run", path("nope.scn")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error=ScenarioParseError", 0), 0u);
}

// KDC in a thread, client commands in-process.
TEST_F(Cli, KinitAgainstARunningKdc) {
  ASSERT_EQ(register_user("alice", "secret").code, 0);
  ASSERT_EQ(register_service("http@app.example").code, 0);
  std::atomic<bool> stop{false};
  std::ostringstream kdc_out, kdc_err;
  std::thread kdc([&] {
    cli::run({"kdc", "serve", "--db", path("db"), "--as-listen",
              "127.0.0.1:0", "--tgs-listen", "127.0.0.1:0", "--ready-file", path("ready")},
             kdc_out, kdc_err, stop);
  });
  std::string as_addr, tgs_addr;
  for (int i = 0; i < 500 && tgs_addr.empty(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    std::ifstream in(path("ready"));
    std::getline(in, as_addr);
    std::getline(in, tgs_addr);
  }
  ASSERT_FALSE(tgs_addr.empty()) << kdc_err.str();

  auto bad = run({"client", "kinit", "--provider", "toy", "--user", "alice", "--password", "wrong",
                  "--identity", path("alice.id"), "--kdc", as_addr, "--ccache", path("cc")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.err.rfind("error=WrongPassword stage=AS", 0), 0u) << bad.err;
  EXPECT_FALSE(fs::exists(path("cc")));

  auto good = run({"client", "kinit", "--provider", "toy", "--user", "alice", "--password",
                   "secret", "--identity", path("alice.id"), "--kdc", as_addr, "--ccache", path("cc")});
  EXPECT_EQ(good.code, 0) << good.err;
  EXPECT_TRUE(fs::exists(path("cc")));

  auto ticket = run({"client", "get-ticket", "--provider", "toy", "--service", "http@app.example",
                     "--tgs", tgs_addr, "--ccache", path("cc")});
  EXPECT_EQ(ticket.code, 0) << ticket.err;

  stop = true;
  kdc.join();
  EXPECT_NE(kdc_out.str().find("principals="), std::string::npos);
}

}  // namespace
}  // namespace kerbpk::testing
