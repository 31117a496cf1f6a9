#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fusemap/ffm.hpp"

namespace fusemap::testing {

std::string config_path(const std::string& name);

/// DRAM + GLB; the GLB holds `glb_bytes`.
ArchSpec toy_arch(std::int64_t glb_bytes, std::int64_t parallelism = 1);
/// DRAM + L2 + L1.
ArchSpec three_level_arch(std::int64_t l2_bytes, std::int64_t l1_bytes, std::int64_t parallelism = 1);

/// make_chain(n, 4, {(4, 4)}): every rank has extent 4.
Workload chain_444(int n);

/// Limits under which the 3-Einsum 4x4x4 chain stays below 10^6 mappings.
SearchConfig fixture_config(Objective objective = Objective::edp);

struct NamedCase {
  std::string name;
  Workload workload;
  ArchSpec arch;
  SearchConfig config;
};

/// Small instances whose whole mapspace can be enumerated quickly.
std::vector<NamedCase> small_fixtures();

/// A random chain of 2-4 Einsums with extents in {2, 4, 8} on 2 or 3
/// levels. `capacity_step` in [0, 7] sweeps the bounded levels from
/// infeasibly small to ample. The search limits are the first rung of a
/// fixed ladder whose mapspace is at most `max_mapspace`.
NamedCase random_case(std::mt19937_64& rng, int num_einsums, int capacity_step, std::int64_t max_mapspace);

}  // namespace fusemap::testing
