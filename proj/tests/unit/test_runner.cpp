#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qscope/runner.hpp"

using namespace qscope;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("qscope_runner_" + name);
  fs::remove_all(d);
  return d;
}

Config tiny(const fs::path& dir) {
  Config c;
  c.n = 33;
  c.tag = "k2";
  c.eps = {0.0, 1e-1, 1e-2, 1e-3, 1e-4};
  c.probes = {"doubling", "ucp"};
  c.out_dir = dir.string();
  return c;
}

}  // namespace

TEST_SUITE("runner") {
  TEST_CASE("sha256 of known content") {
    const fs::path d = scratch("sha");
    fs::create_directories(d);
    std::ofstream(d / "abc", std::ios::binary) << "abc";
    CHECK(sha256_file(d / "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::ofstream(d / "empty", std::ios::binary);
    CHECK(sha256_file(d / "empty") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK_THROWS(sha256_file(d / "missing"));
    fs::remove_all(d);
  }

  TEST_CASE("worker_count honours QSCOPE_THREADS") {
    const char* old = std::getenv("QSCOPE_THREADS");
    const std::string saved = old ? old : "";
    setenv("QSCOPE_THREADS", "3", 1);
    CHECK(worker_count() == 3);
    setenv("QSCOPE_THREADS", "0", 1);
    CHECK(worker_count() >= 1);
    setenv("QSCOPE_THREADS", "junk", 1);
    CHECK(worker_count() >= 1);
    if (old)
      setenv("QSCOPE_THREADS", saved.c_str(), 1);
    else
      unsetenv("QSCOPE_THREADS");
  }

  TEST_CASE("all writes every artifact and a manifest") {
    const fs::path d = scratch("all");
    std::ostringstream log;
    REQUIRE(run("all", tiny(d), log) == 0);
    for (const char* f : {"u.txt", "forward.csv", "data_I.txt", "data_J.txt", "data_meta.txt", "w.txt", "q_rec.txt",
                          "trust.txt", "recon.csv", "stability.csv", "probes_doubling.csv", "probes_ucp.csv",
                          "manifest.json", "timings.json"})
      CHECK_MESSAGE(fs::exists(d / f), f);
    CHECK_FALSE(fs::exists(d / "manifest.json.tmp"));
    const std::string m = slurp(d / "manifest.json");
    CHECK(m.find("\"status\": \"ok\"") != std::string::npos);
    CHECK(m.find("\"subcommand\": \"all\"") != std::string::npos);
    CHECK(m.find(sha256_file(d / "u.txt")) != std::string::npos);
    CHECK(m.find("seconds") == std::string::npos);

    // a second run reproduces the manifest byte for byte
    const fs::path d2 = scratch("all2");
    Config c2 = tiny(d2);
    REQUIRE(run("all", c2, log) == 0);
    std::string m2 = slurp(d2 / "manifest.json");
    const auto fix = [](std::string s, const std::string& from, const std::string& to) {
      for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
      return s;
    };
    CHECK(fix(m2, d2.string(), d.string()) == m);
    fs::remove_all(d);
    fs::remove_all(d2);
  }

  TEST_CASE("failures are recorded") {
    const fs::path d = scratch("fail");
    std::ostringstream log;
    Config c = tiny(d);
    CHECK(run("bogus", c, log) == 2);

    c.probes.clear();
    CHECK(run("probe", c, log) == 1);
    const std::string m = slurp(d / "manifest.json");
    CHECK(m.find("\"status\": \"failed\"") != std::string::npos);
    CHECK(m.find("empty probe set") != std::string::npos);
    CHECK(log.str().find("empty probe set") != std::string::npos);
    fs::remove_all(d);
  }

  TEST_CASE("single stages") {
    const fs::path d = scratch("forward");
    std::ostringstream log;
    REQUIRE(run("forward", tiny(d), log) == 0);
    CHECK(fs::exists(d / "u.txt"));
    CHECK_FALSE(fs::exists(d / "stability.csv"));
    fs::remove_all(d);
  }
}
