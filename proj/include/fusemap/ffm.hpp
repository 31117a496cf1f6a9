#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fusemap/arch.hpp"
#include "fusemap/compat.hpp"
#include "fusemap/costmodel.hpp"
#include "fusemap/looptree.hpp"
#include "fusemap/reservation.hpp"
#include "fusemap/workload.hpp"

namespace fusemap {

/// Which tensors may also be kept below their backing level.
enum class InnerStorage { all, private_only, none };
InnerStorage parse_inner_storage(std::string_view text);
std::string_view to_string(InnerStorage mode);

struct SearchConfig {
  Objective objective = Objective::edp;
  /// Loops per rank variable = max_loops_per_level x number of bounded levels.
  int max_loops_per_level = 1;
  bool explore_permutations = true;
  /// Loops per Einsum path; 0 for no limit.
  int max_loop_depth = 0;
  InnerStorage inner_storage = InnerStorage::all;
  /// Raw paths per Einsum before BudgetExceeded.
  std::int64_t max_pmappings_per_einsum = 2'000'000;
  /// 0 picks FUSEMAP_THREADS or the hardware concurrency.
  int threads = 0;

  nlohmann::json to_json() const;
};

/// Every structurally valid path of one Einsum within the configured limits:
/// divisor tilings with trips >= 2, loop orders, storage placements and
/// backing levels, after the relevancy filter.
std::vector<EinsumPath> enumerate_paths(const Workload& w, const ArchSpec& arch, std::size_t einsum,
                                        const SearchConfig& cfg);

/// A pmapping of one Einsum as seen by the search.
struct Candidate {
  std::size_t einsum = 0;
  std::size_t id = 0;
  std::string label;
  /// Interned key ids; -1 when no tensor is exchanged on that side.
  int key_in = -1;
  int key_out = -1;
  std::size_t depth_in = 0;
  std::size_t depth_out = 0;
  Rational energy;
  Rational latency;
  /// One profile per bounded level, folded to max(depth_in, depth_out).
  std::vector<ReservationProfile> profiles;
  /// Bounded-level reservations, unconsolidated.
  std::vector<Reservation> raw;
  std::optional<EinsumPath> path;
  std::optional<CostBreakdown> cost;
};

struct CandidatePool {
  std::vector<std::string> einsum_names;
  std::vector<std::vector<Candidate>> per_einsum;
  /// key_names[i] for interned key id i.
  std::vector<std::string> key_names;
  /// Capacity of each bounded level (levels 1..L-1).
  std::vector<std::int64_t> capacities;
  /// Bytes a level would hold if every Einsum kept every tensor whole there;
  /// no mapping uses more. Empty for abstract pools.
  std::vector<std::int64_t> usage_bounds;

  /// Levels whose reservations can decide feasibility. A level whose usage
  /// bound fits its capacity is left out of the pruning criteria.
  std::vector<bool> constrained_levels() const;

  std::size_t size() const { return per_einsum.size(); }
  std::size_t total_candidates() const;
};

/// Every enumerated path, evaluated, with interned keys.
CandidatePool build_pool(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg);

/// Drops candidates that oversubscribe a level on their own and those
/// dominated within their (key_in, key_out) group. Only the components the
/// objective depends on are compared: energy, latency, or both for EDP.
CandidatePool prune_pool(const CandidatePool& pool, Objective objective = Objective::edp);

/// Abstract pool: {"einsums": [{"name", "candidates": [{"name", "energy",
/// "latency", "key_in", "key_out"}]}]}. Keys are free-form strings.
CandidatePool load_pool(const nlohmann::json& doc);

/// Pruned candidates of one Einsum.
std::vector<Candidate> enumerate_pmappings(const Workload& w, const ArchSpec& arch, std::size_t einsum,
                                           const SearchConfig& cfg);

struct StepStats {
  std::size_t einsum = 0;
  std::size_t groups = 0;
  std::size_t frontier_size = 0;
  std::int64_t joins_attempted = 0;
  std::int64_t joins_skipped = 0;
  double elapsed_seconds = 0;
  std::size_t max_tracked_entries = 0;
  std::size_t max_open_depth = 0;
  std::size_t bound_violations = 0;
};

struct Ablation {
  bool skip_incompatible_joins = true;
  bool consolidate_reservations = true;
};

struct SearchOutcome {
  /// Candidate index (into the pool's per-Einsum list) per Einsum.
  std::vector<std::size_t> choice;
  Rational objective;
  Rational energy;
  Rational latency;
  std::vector<std::int64_t> usage;
  std::vector<StepStats> steps;
};

/// Group, prune and join left to right, comparing the same components as
/// prune_pool. Throws NoFeasibleMapping.
SearchOutcome join_search(const CandidatePool& pool, Objective objective, const Ablation& ablation = {},
                          int threads = 0);

/// Combined criteria of a full choice: summed objectives, consolidated
/// profiles. Returns nullopt when keys do not match.
struct ChainEval {
  Rational energy;
  Rational latency;
  std::vector<std::int64_t> usage;
  bool feasible = false;
};
std::optional<ChainEval> evaluate_choice(const CandidatePool& pool, const std::vector<std::size_t>& choice);

struct MappingResult {
  Pmapping mapping;
  Node tree;
  CostBreakdown cost;
  Rational objective;
  std::vector<std::int64_t> usage;
  std::vector<std::string> labels;
  std::vector<StepStats> steps;
  std::size_t pool_raw = 0;
  std::size_t pool_pruned = 0;
};

MappingResult map(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg);
MappingResult map_ablated(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg, const Ablation& ablation);

/// Turns a full choice over a workload pool into a mapping with its tree.
MappingResult assemble(const Workload& w, const ArchSpec& arch, const CandidatePool& pool,
                       const std::vector<std::size_t>& choice, Objective objective);

int resolve_threads(int requested);

}  // namespace fusemap
