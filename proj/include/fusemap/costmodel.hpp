#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fusemap/arch.hpp"
#include "fusemap/looptree.hpp"
#include "fusemap/rational.hpp"
#include "fusemap/workload.hpp"

namespace fusemap {

enum class Objective { energy, latency, edp };

Objective parse_objective(std::string_view text);
std::string_view to_string(Objective objective);

struct CostBreakdown {
  std::vector<std::int64_t> level_bytes;
  std::int64_t ops = 0;
  Rational energy;
  /// Cycles.
  Rational latency;

  CostBreakdown& operator+=(const CostBreakdown& other);
  friend bool operator==(const CostBreakdown&, const CostBreakdown&) = default;
};

/// Element transfers of one tensor at one level.
struct AccessCount {
  /// Elements copied into this node from the next-outer node.
  std::int64_t fills = 0;
  /// Elements written back from this node to the next-outer node.
  std::int64_t drains = 0;
  /// Operand accesses made by compute at this node (innermost node only).
  std::int64_t compute = 0;

  friend bool operator==(const AccessCount&, const AccessCount&) = default;
};

using AccessCounts = std::map<std::pair<std::string, std::size_t>, AccessCount>;

/// Closed form: every non-outermost node instance is filled (inputs) or
/// drained (outputs) once, for the whole tile; compute touches each operand
/// once per operation at its innermost node.
AccessCounts count_accesses(const Workload& w, const EinsumPath& path);

/// Executes the loop nest element by element with per-node-instance residency.
/// Throws BudgetExceeded when the iteration space exceeds `max_points`.
AccessCounts trace_accesses(const Workload& w, const EinsumPath& path, std::int64_t max_points = 1'000'000);

/// Bytes per level implied by access counts: each transfer is charged at
/// both ends, each compute access at its node.
std::vector<std::int64_t> level_bytes(const Workload& w, const ArchSpec& arch, const EinsumPath& path,
                                      const AccessCounts& counts);

CostBreakdown cost_from_counts(const Workload& w, const ArchSpec& arch, const EinsumPath& path,
                               const AccessCounts& counts);

CostBreakdown evaluate(const Workload& w, const ArchSpec& arch, const EinsumPath& path);
/// Sum over Einsums; latency of a joined mapping is the sum of its branches.
CostBreakdown evaluate(const Workload& w, const ArchSpec& arch, const Pmapping& p);
CostBreakdown evaluate(const Workload& w, const ArchSpec& arch, const Node& tree);

Rational objective_value(Objective objective, const Rational& energy, const Rational& latency);
inline Rational objective_value(Objective objective, const CostBreakdown& c) {
  return objective_value(objective, c.energy, c.latency);
}

}  // namespace fusemap
