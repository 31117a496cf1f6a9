#include "fusemap/report.hpp"

#include <ostream>

namespace fusemap {

using nlohmann::json;

json rational_json(const Rational& value) { return {{"exact", to_string(value)}, {"value", to_double(value)}}; }

json cost_json(const ArchSpec& arch, const CostBreakdown& cost) {
  json bytes = json::object();
  for (std::size_t l = 0; l < arch.num_levels() && l < cost.level_bytes.size(); ++l) {
    bytes[arch.levels[l].name] = cost.level_bytes[l];
  }
  const Rational edp = cost.energy * cost.latency;
  return {{"bytes_per_level", bytes},
          {"ops", cost.ops},
          {"energy", rational_json(cost.energy)},
          {"latency_cycles", rational_json(cost.latency)},
          {"latency_seconds", rational_json(cost.latency / arch.frequency_hz)},
          {"edp", rational_json(edp)}};
}

json usage_json(const ArchSpec& arch, const std::vector<std::int64_t>& usage) {
  json out = json::object();
  for (std::size_t l = 1; l < arch.num_levels() && l < usage.size(); ++l) {
    out[arch.levels[l].name] = {{"bytes", usage[l]}, {"capacity", *arch.levels[l].capacity_bytes}};
  }
  return out;
}

json path_json(const Workload& w, const ArchSpec& arch, const EinsumPath& path) {
  json loops = json::array();
  for (const auto& l : path.loops) loops.push_back({{"var", l.var}, {"trip", l.trip}});
  json storage = json::array();
  for (const auto& s : path.storage) {
    storage.push_back({{"tensor", s.tensor}, {"level", arch.levels.at(s.level).name}, {"slot", s.slot}});
  }
  return {{"einsum", w.einsum(path.einsum).name}, {"loops", loops}, {"storage", storage}};
}

json steps_json(const std::vector<StepStats>& steps) {
  json out = json::array();
  for (const auto& s : steps) {
    out.push_back({{"einsum", s.einsum},
                   {"groups", s.groups},
                   {"frontier_size", s.frontier_size},
                   {"joins_attempted", s.joins_attempted},
                   {"joins_skipped", s.joins_skipped},
                   {"max_tracked_entries", s.max_tracked_entries},
                   {"bound_violations", s.bound_violations}});
  }
  return out;
}

namespace {

json header(const std::string& command) {
  return {{"tool", "fusemap"}, {"version", FUSEMAP_VERSION}, {"command", command}};
}

}  // namespace

json map_report(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg, const MappingResult& r) {
  json rep = header("map");
  rep["seed"] = nullptr;
  rep["workload"] = w.to_json();
  rep["arch"] = arch.to_json();
  rep["config"] = cfg.to_json();
  rep["objective"] = std::string(to_string(cfg.objective));
  rep["objective_value"] = rational_json(r.objective);
  json paths = json::array();
  for (const auto& p : r.mapping.paths) paths.push_back(path_json(w, arch, p));
  rep["mapping"] = {{"tree", render(w, arch, r.tree)},
                    {"paths", paths},
                    {"split_depths", r.mapping.split_depths},
                    {"pmappings", r.labels}};
  rep["cost"] = cost_json(arch, r.cost);
  rep["usage"] = usage_json(arch, r.usage);
  rep["pool"] = {{"enumerated", r.pool_raw}, {"after_pruning", r.pool_pruned}};
  rep["steps"] = steps_json(r.steps);
  return rep;
}

json pool_report(const CandidatePool& pool, Objective objective, const SearchOutcome& out, const json& input) {
  json rep = header("map");
  rep["seed"] = nullptr;
  rep["pool"] = input;
  rep["objective"] = std::string(to_string(objective));
  rep["objective_value"] = rational_json(out.objective);
  json picks = json::array();
  for (std::size_t e = 0; e < out.choice.size(); ++e) picks.push_back(pool.per_einsum[e][out.choice[e]].label);
  rep["mapping"] = {{"pmappings", picks}};
  rep["cost"] = {{"energy", rational_json(out.energy)}, {"latency_cycles", rational_json(out.latency)},
                 {"edp", rational_json(out.energy * out.latency)}};
  rep["steps"] = steps_json(out.steps);
  return rep;
}

json oracle_report(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg, const OracleResult& r) {
  json rep = header("oracle");
  rep["seed"] = nullptr;
  rep["workload"] = w.to_json();
  rep["arch"] = arch.to_json();
  rep["config"] = cfg.to_json();
  rep["objective"] = std::string(to_string(cfg.objective));
  rep["mapspace_size"] = r.mapspace_size;
  rep["feasible_mappings"] = r.feasible_count;
  rep["feasible"] = r.feasible;
  if (r.feasible) {
    rep["objective_value"] = rational_json(r.objective);
    rep["mapping"] = {{"tree", render(w, arch, r.tree)}};
    rep["cost"] = cost_json(arch, r.cost);
    rep["usage"] = usage_json(arch, r.usage);
  }
  return rep;
}

json baseline_report(const CandidatePool& pool, Objective objective, const std::string& method, std::uint64_t seed,
                     const BaselineResult& r, const json& input) {
  json rep = header("baseline");
  rep["method"] = method;
  rep["seed"] = seed;
  rep["input"] = input;
  rep["objective"] = std::string(to_string(objective));
  rep["evaluations"] = r.evaluations;
  rep["feasible"] = r.objective.has_value();
  if (r.objective) {
    rep["objective_value"] = rational_json(*r.objective);
    json picks = json::array();
    for (std::size_t e = 0; e < r.choice.size(); ++e) picks.push_back(pool.per_einsum[e][r.choice[e]].label);
    rep["mapping"] = {{"pmappings", picks}};
    rep["cost"] = {{"energy", rational_json(r.energy)}, {"latency_cycles", rational_json(r.latency)}};
  }
  return rep;
}

void write_steps_csv(std::ostream& os, const std::vector<StepStats>& steps) {
  os << "einsum,groups,frontier_size,joins_attempted,joins_skipped,join_seconds\n";
  for (const auto& s : steps) {
    os << s.einsum << "," << s.groups << "," << s.frontier_size << "," << s.joins_attempted << "," << s.joins_skipped
       << "," << s.elapsed_seconds << "\n";
  }
}

}  // namespace fusemap
