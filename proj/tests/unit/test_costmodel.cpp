#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "fusemap/costmodel.hpp"
#include "fusemap/errors.hpp"
#include "fusemap/ffm.hpp"

using namespace fusemap;

namespace {

Workload matmul_pair() {
  std::ifstream in(testing::config_path("two_einsum.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  return load_workload(ss.str());
}

EinsumPath path_of(std::size_t einsum, std::vector<Loop> loops, std::vector<Storage> storage) {
  EinsumPath p{einsum, std::move(loops), std::move(storage)};
  p.canonicalize();
  return p;
}

}  // namespace

TEST_SUITE("costmodel") {
  TEST_CASE("objective names") {
    CHECK(parse_objective("edp") == Objective::edp);
    CHECK(to_string(parse_objective("latency")) == "latency");
    CHECK_THROWS_AS(parse_objective("power"), InputError);
    CHECK(objective_value(Objective::edp, Rational(3), Rational(5)) == 15);
  }

  TEST_CASE("DRAM-only matmul") {
    const Workload w = matmul_pair();
    const ArchSpec arch = testing::toy_arch(64);
    const auto p = path_of(0, {}, {{0, 0, "A"}, {0, 0, "B"}, {0, 0, "C"}});
    const CostBreakdown c = evaluate(w, arch, p);
    CHECK(c.ops == 64);
    CHECK(c.level_bytes == std::vector<std::int64_t>{192, 0});
    CHECK(c.energy == 64 + 192 * 64);
    CHECK(c.latency == 64);
  }

  TEST_CASE("tiled matmul with GLB buffers") {
    // C[M,N] = A[M,K] B[K,N] under one M loop: A and C move one row per
    // iteration, B is refetched in full each time.
    const Workload w = matmul_pair();
    const ArchSpec arch = testing::toy_arch(64);
    const auto p = path_of(0, {{"M", 4}},
                           {{0, 0, "A"}, {0, 0, "B"}, {0, 0, "C"}, {1, 1, "A"}, {1, 1, "B"}, {1, 1, "C"}});
    const AccessCounts counts = count_accesses(w, p);
    CHECK(counts.at({"A", 1}).fills == 16);
    CHECK(counts.at({"B", 1}).fills == 64);
    CHECK(counts.at({"C", 1}).drains == 16);
    CHECK(counts.at({"C", 1}).fills == 0);
    CHECK(counts.at({"A", 0}).compute == 0);
    CHECK(counts.at({"A", 1}).compute == 64);
    CHECK(counts == trace_accesses(w, p));
    const CostBreakdown c = evaluate(w, arch, p);
    CHECK(c.level_bytes == std::vector<std::int64_t>{96, 96 + 3 * 64});
    CHECK(c.energy == 64 + 96 * 64 + 288 * 2);
    CHECK(c.latency == 64);
    CHECK(evaluate(w, testing::toy_arch(64, 16), p).latency == 12);
  }

  TEST_CASE("output under a reduction loop is drained per iteration") {
    const Workload w = matmul_pair();
    const auto p = path_of(0, {{"K", 4}}, {{0, 0, "A"}, {0, 0, "B"}, {0, 0, "C"}, {1, 1, "C"}});
    CHECK(count_accesses(w, p).at({"C", 1}).drains == 64);
    CHECK(count_accesses(w, p) == trace_accesses(w, p));
  }

  TEST_CASE("closed form matches the trace on every enumerated path") {
    for (const auto& fx : testing::small_fixtures()) {
      CAPTURE(fx.name);
      for (std::size_t e = 0; e < fx.workload.size(); ++e) {
        for (const auto& p : enumerate_paths(fx.workload, fx.arch, e, fx.config)) {
          const auto traced = trace_accesses(fx.workload, p);
          REQUIRE(count_accesses(fx.workload, p) == traced);
          REQUIRE(evaluate(fx.workload, fx.arch, p).level_bytes ==
                  level_bytes(fx.workload, fx.arch, p, traced));
        }
      }
    }
  }

  TEST_CASE("trace respects its budget") {
    const Workload w = matmul_pair();
    const auto p = path_of(0, {}, {{0, 0, "A"}, {0, 0, "B"}, {0, 0, "C"}});
    CHECK_THROWS_AS(trace_accesses(w, p, 63), BudgetExceeded);
  }

  TEST_CASE("mapping cost is the sum over Einsums") {
    const Workload w = matmul_pair();
    const ArchSpec arch = testing::toy_arch(64);
    const auto a = path_of(0, {}, {{0, 0, "A"}, {0, 0, "B"}, {0, 0, "C"}});
    const auto b = path_of(1, {}, {{0, 0, "C"}, {0, 0, "D"}, {0, 0, "E"}});
    const Pmapping m = join(w, Pmapping::single(a), Pmapping::single(b));
    const CostBreakdown c = evaluate(w, arch, m);
    CHECK(c.energy == evaluate(w, arch, a).energy + evaluate(w, arch, b).energy);
    CHECK(c.latency == 128);
    CHECK(evaluate(w, arch, build_tree(w, m)) == c);
  }
}
