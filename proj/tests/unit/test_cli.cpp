#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "fusemap/commands.hpp"

using namespace fusemap;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "fusemap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string cfg(const std::string& name) { return testing::config_path(name); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("map on a workload") {
    const Run r = run({"map", "--workload", cfg("two_einsum.json"), "--arch", cfg("toy_arch.json"), "--objective",
                       "energy", "--max-loop-depth", "2", "--inner-storage", "private"});
    REQUIRE(r.code == kExitOk);
    const auto rep = nlohmann::json::parse(r.out);
    CHECK(rep.at("command") == "map");
    CHECK(rep.at("objective") == "energy");
    CHECK(rep.at("config").at("inner_storage") == "private");
    CHECK(rep.at("mapping").at("paths").size() == 2);
    CHECK(rep.at("objective_value").at("exact") == rep.at("cost").at("energy").at("exact"));
  }

  TEST_CASE("map on a pool and the oracle agree") {
    const Run m = run({"map", "--pool", cfg("toy_latency_pool.json"), "--objective", "latency"});
    const Run o = run({"oracle", "--pool", cfg("toy_latency_pool.json"), "--objective", "latency"});
    REQUIRE(m.code == kExitOk);
    REQUIRE(o.code == kExitOk);
    const auto a = nlohmann::json::parse(m.out);
    const auto b = nlohmann::json::parse(o.out);
    CHECK(a.at("objective_value").at("exact") == "12");
    CHECK(a.at("mapping") == b.at("mapping"));
  }

  TEST_CASE("usage timeline and report files") {
    const auto dir = std::filesystem::temp_directory_path() / "fusemap_cli_test";
    std::filesystem::create_directories(dir);
    const auto csv = (dir / "usage.csv").string();
    const auto json_out = (dir / "report.json").string();
    const Run r = run({"map", "--workload", cfg("two_einsum.json"), "--arch", cfg("toy_arch.json"), "--max-loop-depth",
                       "1", "--usage-csv", csv, "--out", json_out});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.empty());
    std::ifstream c(csv);
    std::string header;
    std::getline(c, header);
    CHECK(header == "timestep,level,bytes");
    std::ifstream j(json_out);
    CHECK(nlohmann::json::parse(j).at("tool") == "fusemap");
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("baseline") {
    const Run bad = run({"baseline", "random", "--budget", "0", "--pool", cfg("toy_latency_pool.json")});
    CHECK(bad.code == kExitInputError);
    const Run missing = run({"baseline", "random", "--pool", cfg("toy_latency_pool.json")});
    CHECK(missing.code == kExitInputError);
    const Run ok = run({"baseline", "ga", "--budget", "50", "--seed", "3", "--population", "4", "--objective",
                        "latency", "--pool", cfg("toy_latency_pool.json")});
    REQUIRE(ok.code == kExitOk);
    const auto rep = nlohmann::json::parse(ok.out);
    CHECK(rep.at("seed") == 3);
    CHECK(rep.at("evaluations") == 50);
    CHECK(rep.at("objective_value").at("exact") == "12");
  }

  TEST_CASE("errors map to exit codes") {
    CHECK(run({"map", "--workload", "/nonexistent.json"}).code == kExitInputError);
    CHECK(run({"map", "--objective", "power", "--workload", cfg("two_einsum.json")}).code == kExitInputError);
    CHECK(run({"frobnicate"}).code == kExitInputError);
    CHECK(run({"oracle", "--workload", cfg("three_einsum.json"), "--arch", cfg("toy_arch.json"), "--limit", "10"})
              .code == kExitInputError);
  }

  TEST_CASE("ablation csv") {
    const Run r = run({"ablate", "--einsums", "3", "--m", "4", "--arch", cfg("toy_arch.json"), "--max-loop-depth",
                       "1", "--inner-storage", "none"});
    REQUIRE(r.code == kExitOk);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "einsum,joins_with_skip,joins_without_skip,frontier_consolidated,frontier_unconsolidated");
    CHECK(rows[1].rfind("0,0,0,", 0) == 0);
    CHECK(r.err.find("identical in every run") != std::string::npos);
  }

  TEST_CASE("scaling csv") {
    const Run r = run({"scaling", "--einsums", "2,3", "--m", "4", "--repeats", "1", "--arch", cfg("toy_arch.json"),
                       "--max-loop-depth", "1", "--inner-storage", "none"});
    REQUIRE(r.code == kExitOk);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 1 + 2 + 3);
    CHECK(rows[0] == "einsums,einsum,join_seconds,frontier_size,groups,joins_attempted");
    CHECK(rows[3].rfind("3,0,", 0) == 0);
  }
}
