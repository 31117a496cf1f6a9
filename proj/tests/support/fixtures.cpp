#include "fixtures.hpp"

#include "fusemap/errors.hpp"
#include "fusemap/oracle.hpp"

#ifndef FUSEMAP_CONFIG_DIR
#define FUSEMAP_CONFIG_DIR "configs"
#endif

namespace fusemap::testing {

std::string config_path(const std::string& name) { return std::string(FUSEMAP_CONFIG_DIR) + "/" + name; }

ArchSpec toy_arch(std::int64_t glb_bytes, std::int64_t parallelism) {
  ArchSpec a;
  a.levels.push_back({"DRAM", std::nullopt, Rational(8), Rational(64)});
  a.levels.push_back({"GLB", glb_bytes, Rational(64), Rational(2)});
  a.mac_energy = 1;
  a.parallelism = parallelism;
  a.frequency_hz = 1'000'000'000L;
  a.datum_bytes = 1;
  return a;
}

ArchSpec three_level_arch(std::int64_t l2_bytes, std::int64_t l1_bytes, std::int64_t parallelism) {
  ArchSpec a;
  a.levels.push_back({"DRAM", std::nullopt, Rational(8), Rational(64)});
  a.levels.push_back({"L2", l2_bytes, Rational(32), Rational(8)});
  a.levels.push_back({"L1", l1_bytes, Rational(128), Rational(1)});
  a.mac_energy = 1;
  a.parallelism = parallelism;
  a.frequency_hz = 1'000'000'000L;
  a.datum_bytes = 1;
  return a;
}

Workload chain_444(int n) {
  const std::vector<std::pair<std::int64_t, std::int64_t>> pattern{{4, 4}};
  return make_chain(n, 4, pattern);
}

SearchConfig fixture_config(Objective objective) {
  SearchConfig cfg;
  cfg.objective = objective;
  cfg.max_loop_depth = 2;
  cfg.inner_storage = InnerStorage::private_only;
  return cfg;
}

std::vector<NamedCase> small_fixtures() {
  std::vector<NamedCase> out;
  SearchConfig shallow = fixture_config();
  shallow.max_loop_depth = 1;
  out.push_back({"chain2-444", chain_444(2), toy_arch(64), fixture_config()});
  out.push_back({"chain3-444-depth1", chain_444(3), toy_arch(64), shallow});
  out.push_back({"chain2-444-3level", chain_444(2), three_level_arch(48, 16), shallow});
  const std::vector<std::pair<std::int64_t, std::int64_t>> mixed{{2, 8}, {8, 2}};
  out.push_back({"chain3-mixed", make_chain(3, 2, mixed), toy_arch(24), shallow});
  return out;
}

namespace {

std::vector<SearchConfig> ladder() {
  std::vector<SearchConfig> rungs;
  auto add = [&](bool perms, int depth, InnerStorage inner) {
    SearchConfig c;
    c.explore_permutations = perms;
    c.max_loop_depth = depth;
    c.inner_storage = inner;
    c.max_pmappings_per_einsum = 20'000;
    rungs.push_back(c);
  };
  add(true, 0, InnerStorage::all);
  add(true, 2, InnerStorage::all);
  add(true, 2, InnerStorage::private_only);
  add(false, 2, InnerStorage::private_only);
  add(false, 1, InnerStorage::private_only);
  add(true, 2, InnerStorage::none);
  add(false, 1, InnerStorage::none);
  return rungs;
}

}  // namespace

NamedCase random_case(std::mt19937_64& rng, int num_einsums, int capacity_step, std::int64_t max_mapspace) {
  const std::int64_t extents[] = {2, 4, 8};
  auto pick = [&] { return extents[std::uniform_int_distribution<int>(0, 2)(rng)]; };
  const std::int64_t m = pick();
  std::vector<std::pair<std::int64_t, std::int64_t>> pattern;
  std::int64_t k = pick();
  for (int i = 0; i < num_einsums; ++i) {
    const std::int64_t n = pick();
    pattern.push_back({n, k});
    k = n;
  }
  Workload w = make_chain(num_einsums, m, pattern);
  const bool three = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  // Capacities 1, 4, 16, ... 16384 bytes.
  const std::int64_t cap = std::int64_t{1} << (2 * capacity_step);
  ArchSpec arch = three ? three_level_arch(4 * cap, cap, 4) : toy_arch(cap, 4);
  std::string name = "chain" + std::to_string(num_einsums) + "-m" + std::to_string(m);
  for (const auto& [n, kk] : pattern) name += "-" + std::to_string(kk) + "x" + std::to_string(n);
  name += three ? "-3level" : "-2level";
  name += "-cap" + std::to_string(cap);
  int rung = 0;
  for (const SearchConfig& cfg : ladder()) {
    try {
      const std::int64_t size = count_mapspace(build_pool(w, arch, cfg));
      if (size <= max_mapspace) return {name + "-rung" + std::to_string(rung), w, arch, cfg};
    } catch (const BudgetExceeded&) {
    }
    ++rung;
  }
  throw BudgetExceeded("no rung of the ladder fits " + name);
}

}  // namespace fusemap::testing
