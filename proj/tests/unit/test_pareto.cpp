#include <doctest.h>

#include <algorithm>
#include <random>

#include "fusemap/errors.hpp"
#include "fusemap/pareto.hpp"
#include "oracles.hpp"

using namespace fusemap;

namespace {

CriteriaVector cv(long e, long l, std::vector<std::int64_t> r = {}) {
  return {Rational(e), Rational(l), 0, std::move(r)};
}

}  // namespace

TEST_SUITE("pareto") {
  TEST_CASE("dominance") {
    CHECK(dominates(cv(1, 2, {3}), cv(1, 2, {4})));
    CHECK_FALSE(dominates(cv(1, 2, {3}), cv(1, 2, {3})));
    CHECK_FALSE(dominates(cv(1, 3, {3}), cv(2, 2, {3})));
    CHECK(lex_less(cv(1, 9), cv(2, 0)));
    CriteriaVector tagged = cv(1, 1, {1});
    tagged.tags = 7;
    CHECK_THROWS_AS(dominates(tagged, cv(1, 1, {1})), InputError);
  }

  TEST_CASE("ties keep the smallest id") {
    const std::vector<CriteriaVector> vs{cv(1, 1, {2}), cv(1, 1, {2}), cv(2, 2, {1}), cv(3, 3, {3})};
    const std::vector<std::uint64_t> ids{5, 3, 0, 1};
    CHECK(frontier(vs, ids) == std::vector<std::size_t>{1, 2});
    const std::vector<std::uint64_t> short_ids{1};
    CHECK_THROWS_AS(frontier(vs, short_ids), InputError);
  }

  TEST_CASE("frontier equals the quadratic filter on random sets") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 1 + rng() % 40;
      const std::size_t dims = rng() % 4;
      const long range = 1 + static_cast<long>(rng() % 6);
      std::vector<CriteriaVector> vs;
      std::vector<std::uint64_t> ids;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::int64_t> r;
        for (std::size_t d = 0; d < dims; ++d) r.push_back(static_cast<std::int64_t>(rng() % range));
        vs.push_back(cv(static_cast<long>(rng() % range), static_cast<long>(rng() % range), r));
        ids.push_back(i);
      }
      std::shuffle(ids.begin(), ids.end(), rng);
      const auto got = frontier(vs, ids);
      REQUIRE(std::set<std::size_t>(got.begin(), got.end()) == testing::quadratic_frontier(vs, ids));
      for (std::size_t i = 1; i < got.size(); ++i) REQUIRE_FALSE(lex_less(vs[got[i]], vs[got[i - 1]]));
    }
  }
}
