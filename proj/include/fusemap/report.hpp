#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fusemap/baselines.hpp"
#include "fusemap/ffm.hpp"
#include "fusemap/oracle.hpp"

namespace fusemap {

/// {"exact": "p/q", "value": double}
nlohmann::json rational_json(const Rational& value);

nlohmann::json cost_json(const ArchSpec& arch, const CostBreakdown& cost);
nlohmann::json usage_json(const ArchSpec& arch, const std::vector<std::int64_t>& usage);
nlohmann::json path_json(const Workload& w, const ArchSpec& arch, const EinsumPath& path);

/// Per-step statistics without wall-clock times, so reports are reproducible.
nlohmann::json steps_json(const std::vector<StepStats>& steps);

nlohmann::json map_report(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg, const MappingResult& r);
nlohmann::json pool_report(const CandidatePool& pool, Objective objective, const SearchOutcome& out,
                           const nlohmann::json& input);
nlohmann::json oracle_report(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg, const OracleResult& r);
nlohmann::json baseline_report(const CandidatePool& pool, Objective objective, const std::string& method,
                               std::uint64_t seed, const BaselineResult& r, const nlohmann::json& input);

/// Per-step rows: "einsum,groups,frontier_size,joins_attempted,joins_skipped,join_seconds".
void write_steps_csv(std::ostream& os, const std::vector<StepStats>& steps);

}  // namespace fusemap
