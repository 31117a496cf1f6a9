#include <doctest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "fusemap/compat.hpp"
#include "fusemap/errors.hpp"
#include "fusemap/ffm.hpp"
#include "fusemap/looptree.hpp"
#include "fusemap/oracle.hpp"
#include "oracles.hpp"

using namespace fusemap;

namespace {

// A[nA] = I[nI] * WA[nI, nA]; B[nB] = A[nA] * WB[nA, nB]
Workload vector_cascade() {
  return load_workload(R"({
    "ranks": {"NI": 3, "NA": 4, "NB": 2},
    "tensors": [{"name": "I", "ranks": ["NI"]}, {"name": "WA", "ranks": ["NI", "NA"]},
                {"name": "A", "ranks": ["NA"]}, {"name": "WB", "ranks": ["NA", "NB"]},
                {"name": "B", "ranks": ["NB"]}],
    "einsums": [{"name": "EA", "output": "A", "inputs": ["I", "WA"]},
                {"name": "EB", "output": "B", "inputs": ["A", "WB"]}]
  })");
}

EinsumPath path_of(std::size_t einsum, std::vector<Loop> loops, std::vector<Storage> storage) {
  EinsumPath p{einsum, std::move(loops), std::move(storage)};
  p.canonicalize();
  return p;
}

}  // namespace

TEST_SUITE("looptree") {
  TEST_CASE("tile shapes") {
    const Workload w = load_workload(R"({
      "ranks": {"NI": 6, "NA": 4, "R": 4, "S": 4},
      "tensors": [{"name": "I", "ranks": ["NI"]}, {"name": "W", "ranks": ["NI", "NA"]},
                  {"name": "X", "ranks": ["R", "S"]}, {"name": "Y", "ranks": ["R", "S"]}],
      "einsums": [{"name": "E", "output": "W", "inputs": ["I"]},
                  {"name": "F", "output": "Y", "inputs": ["X"]}]
    })");
    const std::vector<Loop> twelve{{"NA", 4}, {"NI", 3}};
    CHECK(tile_shape(w, twelve, w.tensor("I")) == std::map<std::string, std::int64_t>{{"NI", 2}});
    CHECK(tile_elements(w, {}, w.tensor("W")) == 24);
    const std::vector<Loop> quad{{"R", 2}, {"S", 2}};
    CHECK(tile_shape(w, quad, w.tensor("X")) == std::map<std::string, std::int64_t>{{"R", 2}, {"S", 2}});
    const std::vector<Loop> bad{{"R", 3}};
    CHECK_THROWS_AS(tile_shape(w, bad, w.tensor("X")), InputError);
  }

  TEST_CASE("fused join shares the backing node and the loops above it") {
    const Workload w = vector_cascade();
    const ArchSpec arch = testing::toy_arch(64);
    const auto a = path_of(0, {{"NA", 4}}, {{0, 0, "I"}, {0, 0, "WA"}, {1, 1, "A"}});
    const auto b = path_of(1, {{"NA", 4}}, {{1, 1, "A"}, {0, 0, "WB"}, {0, 0, "B"}});
    const Pmapping p = join(w, Pmapping::single(a), Pmapping::single(b));
    CHECK(p.split_depths == std::vector<std::size_t>{1});
    const Node tree = build_tree(w, p);
    CHECK(render(w, arch, tree) ==
          "DRAM: B\n"
          "DRAM: I\n"
          "DRAM: WA\n"
          "DRAM: WB\n"
          "for NA in [0,4)\n"
          "GLB: A\n"
          "split\n"
          "  branch\n"
          "    compute EA\n"
          "  branch\n"
          "    compute EB\n");
    CHECK(testing::tree_problem(w, arch, tree).empty());
    // Each fragment keeps the shared node and the loop above it.
    const auto parts = decompose(w, tree);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].paths[0] == a);
    CHECK(parts[1].paths[0] == b);
  }

  TEST_CASE("unfused join splits directly under the DRAM node") {
    const Workload w = vector_cascade();
    const ArchSpec arch = testing::toy_arch(64);
    const auto a = path_of(0, {}, {{0, 0, "I"}, {0, 0, "WA"}, {0, 0, "A"}});
    const auto b = path_of(1, {{"NB", 2}}, {{0, 0, "A"}, {0, 0, "WB"}, {0, 0, "B"}, {1, 1, "WB"}});
    const Node tree = build_tree(w, join(w, Pmapping::single(a), Pmapping::single(b)));
    CHECK(render(w, arch, tree) ==
          "DRAM: A\n"
          "split\n"
          "  branch\n"
          "    DRAM: I\n"
          "    DRAM: WA\n"
          "    compute EA\n"
          "  branch\n"
          "    DRAM: B\n"
          "    DRAM: WB\n"
          "    for NB in [0,2)\n"
          "    GLB: WB\n"
          "    compute EB\n");
    CHECK(leaves(tree) == std::vector<std::size_t>{0, 1});
  }

  TEST_CASE("incompatible joins throw") {
    const Workload w = vector_cascade();
    const auto a = path_of(0, {{"NA", 4}}, {{0, 0, "I"}, {0, 0, "WA"}, {1, 1, "A"}});
    const auto b2 = path_of(1, {{"NA", 2}}, {{1, 1, "A"}, {0, 0, "WB"}, {0, 0, "B"}});
    const auto dram = path_of(1, {}, {{0, 0, "A"}, {0, 0, "WB"}, {0, 0, "B"}});
    CHECK_THROWS_AS(join(w, Pmapping::single(a), Pmapping::single(b2)), IncompatibleJoin);
    CHECK_THROWS_AS(join(w, Pmapping::single(a), Pmapping::single(dram)), IncompatibleJoin);
    CHECK_THROWS_AS(join(w, Pmapping::single(a), Pmapping::single(a)), IncompatibleJoin);
  }

  TEST_CASE("path validation") {
    const Workload w = vector_cascade();
    const ArchSpec arch = testing::toy_arch(64);
    CHECK_NOTHROW(validate_path(w, arch, path_of(0, {{"NA", 4}}, {{0, 0, "I"}, {0, 0, "WA"}, {1, 1, "A"}})));
    // WA is private to EA and must be backed in DRAM.
    CHECK_THROWS_AS(validate_path(w, arch, path_of(0, {}, {{0, 0, "I"}, {0, 1, "WA"}, {0, 0, "A"}})), InputError);
    // NI does not index A, so it may not sit above A's backing node.
    CHECK_THROWS_AS(validate_path(w, arch, path_of(0, {{"NI", 3}}, {{0, 0, "I"}, {0, 0, "WA"}, {1, 1, "A"}})),
                    InputError);
    CHECK_THROWS_AS(validate_path(w, arch, path_of(0, {{"NA", 3}}, {{0, 0, "I"}, {0, 0, "WA"}, {0, 0, "A"}})),
                    InputError);
    CHECK_THROWS_AS(validate_path(w, arch, path_of(0, {}, {{0, 0, "I"}, {0, 0, "WA"}, {0, 2, "A"}})), InputError);
  }

  TEST_CASE("joining every compatible pair gives exactly the enumerated trees") {
    const Workload w = testing::chain_444(2);
    const ArchSpec arch = testing::toy_arch(64);
    const SearchConfig cfg = testing::fixture_config();
    const auto left = enumerate_paths(w, arch, 0, cfg);
    const auto right = enumerate_paths(w, arch, 1, cfg);
    std::set<std::string> joined;
    std::int64_t compatible_pairs = 0;
    for (const auto& a : left) {
      const CompatKey ka = compat_key_producer(a, "Z1");
      for (const auto& b : right) {
        const bool ok = compatible(ka, compat_key_consumer(b, "Z1"));
        try {
          const Pmapping p = join(w, Pmapping::single(a), Pmapping::single(b));
          REQUIRE(ok);
          const Node tree = build_tree(w, p);
          REQUIRE(testing::tree_problem(w, arch, tree).empty());
          REQUIRE(decompose_tree(w, tree) == p);
          joined.insert(render(w, arch, tree));
          ++compatible_pairs;
        } catch (const IncompatibleJoin&) {
          REQUIRE_FALSE(ok);
        }
      }
    }
    CHECK(static_cast<std::int64_t>(joined.size()) == compatible_pairs);
    CHECK(compatible_pairs == count_mapspace(build_pool(w, arch, cfg)));
  }

  TEST_CASE("decompose then join is the identity on sampled 3-Einsum trees") {
    const Workload w = testing::chain_444(3);
    const ArchSpec arch = testing::toy_arch(64);
    const CandidatePool pool = build_pool(w, arch, testing::fixture_config());
    std::mt19937_64 rng(11);
    std::int64_t seen = 0;
    for_each_combination(pool, [&](const std::vector<std::size_t>& choice) {
      if (rng() % 200 != 0) return;
      Pmapping m = Pmapping::single(*pool.per_einsum[0][choice[0]].path);
      for (std::size_t e = 1; e < 3; ++e) m = join(w, m, Pmapping::single(*pool.per_einsum[e][choice[e]].path));
      const Node tree = build_tree(w, m);
      const auto parts = decompose(w, tree);
      Pmapping again = parts[0];
      for (std::size_t e = 1; e < parts.size(); ++e) again = join(w, again, parts[e]);
      REQUIRE(build_tree(w, again) == tree);
      ++seen;
    });
    CHECK(seen > 100);
  }
}
