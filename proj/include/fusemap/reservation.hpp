#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fusemap/arch.hpp"
#include "fusemap/looptree.hpp"
#include "fusemap/workload.hpp"

namespace fusemap {

/// Buffer space claimed by one storage node of one Einsum.
struct Reservation {
  std::size_t einsum = 0;
  std::string tensor;
  std::size_t level = 0;
  std::size_t slot = 0;
  std::int64_t bytes = 0;

  friend auto operator<=>(const Reservation&, const Reservation&) = default;
};

/// Reservations at bounded levels (level >= 1), in path storage order.
std::vector<Reservation> reservations_of(const Workload& w, const ArchSpec& arch, const EinsumPath& path);

/// Peak occupancy of `level` over the execution of a tree: reservations add
/// down a branch, splits take the max over branches, and a node sitting
/// directly on a split is held in every branch from its first to its last user.
std::int64_t max_usage(const Workload& w, const ArchSpec& arch, const Node& tree, std::size_t level);

/// max_usage for every level (0 for the unbounded outermost level).
std::vector<std::int64_t> max_usage_all(const Workload& w, const ArchSpec& arch, const Node& tree);

bool fits(const ArchSpec& arch, const std::vector<std::int64_t>& usage);

/// Consolidated reservations of one level along an open spine of depth N.
/// live[t] (1 <= t <= N): bytes held by nodes with t - 1 loops above them
/// that stay allocated while later Einsums run under at least t shared loops.
/// closed[t] (0 <= t <= N): peak of finished work that later Einsums sharing
/// t loops run alongside. live[0] is unused and always 0.
struct ReservationProfile {
  std::vector<std::int64_t> live{0};
  std::vector<std::int64_t> closed{0};

  std::size_t depth() const { return closed.size() - 1; }
  std::size_t tracked_entries() const { return depth() + closed.size(); }

  /// Collapses positions deeper than `d`: W = closed[N]; W = max(closed[t], live[t+1] + W).
  void fold_to(std::size_t d);
  /// Peak usage if nothing more is attached.
  std::int64_t usage() const;

  /// Flattened (live[1..N], closed[0..N]) for Pareto comparison.
  std::vector<std::int64_t> flatten() const;

  friend bool operator==(const ReservationProfile&, const ReservationProfile&) = default;
};

/// Profile of a single Einsum attached at depth `d_in` whose successor will
/// attach at depth `d_out`, folded to max(d_in, d_out).
ReservationProfile path_profile(const Workload& w, const ArchSpec& arch, const EinsumPath& path,
                                std::size_t level, std::size_t d_in, std::size_t d_out);

/// Attaches `incoming` (a path profile) below `prof` at `attach`, then folds
/// the result to `d_out`, the depth of the new open spine.
ReservationProfile consolidate_after_join(const ReservationProfile& prof, std::size_t attach,
                                          const ReservationProfile& incoming, std::size_t d_out);

/// Left-to-right consolidation over every path of a pmapping.
ReservationProfile profile_of(const Workload& w, const ArchSpec& arch, const Pmapping& p, std::size_t level);

/// Live bytes per level at every compute step of the executed tree.
struct UsageTimeline {
  std::vector<std::vector<std::int64_t>> bytes;
  std::vector<std::int64_t> peak;
};

/// Walks the tree in execution order. Each storage node instance is held for
/// every compute step of its subtree; one sitting directly on a split is held
/// from the first to the last step of an Einsum that uses its tensor.
UsageTimeline simulate_usage(const Workload& w, const ArchSpec& arch, const Node& tree,
                             std::int64_t max_steps = 1'000'000);

/// "timestep,level,bytes" rows.
void write_usage_csv(std::ostream& os, const ArchSpec& arch, const UsageTimeline& timeline);

}  // namespace fusemap
