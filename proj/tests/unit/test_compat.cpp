#include <doctest.h>

#include "fixtures.hpp"
#include "fusemap/compat.hpp"
#include "fusemap/errors.hpp"

using namespace fusemap;

namespace {

EinsumPath path_of(std::size_t einsum, std::vector<Loop> loops, std::vector<Storage> storage) {
  EinsumPath p{einsum, std::move(loops), std::move(storage)};
  p.canonicalize();
  return p;
}

}  // namespace

TEST_SUITE("compat") {
  TEST_CASE("keys of a fused exchange") {
    const Workload w = testing::chain_444(2);
    const ArchSpec arch = testing::toy_arch(64);
    const auto p1 = path_of(0, {{"M", 2}, {"N1", 2}, {"N0", 4}},
                            {{0, 0, "I"}, {0, 0, "W1"}, {2, 1, "Z1"}});
    const auto p2 = path_of(1, {{"M", 2}, {"N1", 2}}, {{2, 1, "Z1"}, {0, 0, "W2"}, {0, 0, "Z2"}});
    const auto out = output_key(w, p1);
    const auto in = input_key(w, p2);
    REQUIRE(out);
    REQUIRE(in);
    CHECK(out->depth() == 2);
    CHECK(compatible(*out, *in));
    CHECK(compatible(*in, *out));
    CHECK_FALSE(compatible(*out, *out));
    CHECK(undirected(*in) == undirected(*out));
    CHECK(render_key(arch, out) == "Z1@GLB[M:2,N1:2]");
    CHECK(render_key(arch, std::nullopt) == "none");
    CHECK_FALSE(input_key(w, p1));
    CHECK_FALSE(output_key(w, p2));
  }

  TEST_CASE("differing level or loops are incompatible") {
    const auto dram = path_of(0, {{"M", 2}}, {{0, 0, "Z1"}});
    const auto glb = path_of(1, {{"M", 2}}, {{1, 1, "Z1"}});
    const auto glb_shallow = path_of(1, {{"M", 2}}, {{0, 1, "Z1"}});
    const auto other_trip = path_of(0, {{"M", 4}}, {{1, 1, "Z1"}});
    const auto prod = compat_key_producer(other_trip, "Z1");
    CHECK_FALSE(compatible(compat_key_producer(dram, "Z1"), compat_key_consumer(glb, "Z1")));
    CHECK_FALSE(compatible(prod, compat_key_consumer(glb, "Z1")));
    CHECK_FALSE(compatible(compat_key_producer(glb, "Z1"), compat_key_consumer(glb_shallow, "Z1")));
    CHECK(compatible(compat_key_producer(glb, "Z1"), compat_key_consumer(glb, "Z1")));
    CHECK_THROWS_AS(compat_key_producer(dram, "Z2"), InputError);
  }

  TEST_CASE("grouping ignores direction") {
    const auto a = path_of(0, {{"M", 2}}, {{1, 1, "Z1"}});
    const auto b = path_of(1, {{"M", 2}}, {{1, 1, "Z1"}});
    const auto c = path_of(1, {}, {{0, 0, "Z1"}});
    const std::vector<CompatKey> keys{compat_key_producer(a, "Z1"), compat_key_consumer(c, "Z1"),
                                      compat_key_consumer(b, "Z1")};
    const auto groups = group_by_key(keys);
    REQUIRE(groups.size() == 2);
    CHECK(groups.at(undirected(keys[0])) == std::vector<std::size_t>{0, 2});
    CHECK(groups.at(undirected(keys[1])) == std::vector<std::size_t>{1});
  }
}
