#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fusemap/ffm.hpp"

namespace fusemap {

struct OracleResult {
  bool feasible = false;
  /// Index into the unpruned pool per Einsum.
  std::vector<std::size_t> choice;
  Rational objective;
  CostBreakdown cost;
  std::vector<std::int64_t> usage;
  std::int64_t mapspace_size = 0;
  std::int64_t feasible_count = 0;
  Pmapping mapping;
  Node tree;
};

/// Number of key-compatible full combinations in a pool.
std::int64_t count_mapspace(const CandidatePool& pool);

/// Calls `visit(choice)` for every key-compatible full combination, in
/// lexicographic order of candidate indices.
void for_each_combination(const CandidatePool& pool, const std::function<void(const std::vector<std::size_t>&)>& visit);

/// Exhaustive search over every compatible combination of unpruned paths.
/// Each combination is joined into a tree, then checked with max_usage and
/// costed with evaluate on that tree. Throws BudgetExceeded past `limit`.
OracleResult oracle(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg,
                    std::int64_t limit = 1'000'000);

/// Exhaustive search over an abstract pool using its stated criteria.
/// One exhaustive pass scored under several objectives; cfg.objective is ignored.
std::vector<OracleResult> oracle_objectives(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg,
                                            std::span<const Objective> objectives, std::int64_t limit = 1'000'000);
OracleResult oracle_pool(const CandidatePool& pool, Objective objective, std::int64_t limit = 1'000'000);

}  // namespace fusemap
