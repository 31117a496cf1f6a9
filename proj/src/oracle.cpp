#include "fusemap/oracle.hpp"

#include <functional>
#include <map>

#include "fusemap/errors.hpp"

namespace fusemap {

std::int64_t count_mapspace(const CandidatePool& pool) {
  // ways[k]: prefixes ending in open key k.
  std::map<int, std::int64_t> ways{{-1, 1}};
  for (const auto& list : pool.per_einsum) {
    std::map<int, std::int64_t> next;
    for (const auto& c : list) {
      const auto it = ways.find(c.key_in);
      if (it == ways.end()) continue;
      auto& slot = next[c.key_out];
      slot = std::min<std::int64_t>(slot + it->second, INT64_MAX / 4);
    }
    ways = std::move(next);
  }
  const auto it = ways.find(-1);
  return it == ways.end() ? 0 : it->second;
}

void for_each_combination(const CandidatePool& pool, const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::map<int, std::vector<std::size_t>>> by_key(pool.size());
  for (std::size_t e = 0; e < pool.size(); ++e) {
    for (std::size_t i = 0; i < pool.per_einsum[e].size(); ++i) by_key[e][pool.per_einsum[e][i].key_in].push_back(i);
  }
  std::vector<std::size_t> choice(pool.size());
  std::function<void(std::size_t, int)> dfs = [&](std::size_t e, int key) {
    if (e == pool.size()) {
      if (key == -1) visit(choice);
      return;
    }
    const auto it = by_key[e].find(key);
    if (it == by_key[e].end()) return;
    for (auto i : it->second) {
      choice[e] = i;
      dfs(e + 1, pool.per_einsum[e][i].key_out);
    }
  };
  dfs(0, -1);
}

namespace {

void check_size(std::int64_t size, std::int64_t limit) {
  if (size > limit) {
    throw BudgetExceeded("oracle: mapspace of " + std::to_string(size) + " mappings exceeds the limit of " +
                         std::to_string(limit));
  }
}

bool better(const Rational& obj, const Rational& e, const Rational& l, const std::vector<std::size_t>& choice,
            const OracleResult& best) {
  if (!best.feasible) return true;
  if (obj != best.objective) return obj < best.objective;
  if (e != best.cost.energy) return e < best.cost.energy;
  if (l != best.cost.latency) return l < best.cost.latency;
  return choice < best.choice;
}

}  // namespace

std::vector<OracleResult> oracle_objectives(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg,
                                            std::span<const Objective> objectives, std::int64_t limit) {
  const CandidatePool pool = build_pool(w, arch, cfg);
  std::vector<OracleResult> best(objectives.size());
  const std::int64_t size = count_mapspace(pool);
  check_size(size, limit);
  for (auto& b : best) b.mapspace_size = size;
  for_each_combination(pool, [&](const std::vector<std::size_t>& choice) {
    Pmapping m = Pmapping::single(*pool.per_einsum[0][choice[0]].path);
    for (std::size_t e = 1; e < choice.size(); ++e) {
      m = join(w, m, Pmapping::single(*pool.per_einsum[e][choice[e]].path));
    }
    Node tree = build_tree(w, m);
    const auto usage = max_usage_all(w, arch, tree);
    if (!fits(arch, usage)) return;
    const CostBreakdown cost = evaluate(w, arch, tree);
    for (std::size_t k = 0; k < objectives.size(); ++k) {
      OracleResult& b = best[k];
      ++b.feasible_count;
      const Rational obj = objective_value(objectives[k], cost);
      if (!better(obj, cost.energy, cost.latency, choice, b)) continue;
      b.feasible = true;
      b.choice = choice;
      b.objective = obj;
      b.cost = cost;
      b.usage = usage;
      b.mapping = m;
      b.tree = tree;
    }
  });
  return best;
}

OracleResult oracle(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg, std::int64_t limit) {
  const Objective objective = cfg.objective;
  return oracle_objectives(w, arch, cfg, std::span(&objective, 1), limit).front();
}

OracleResult oracle_pool(const CandidatePool& pool, Objective objective, std::int64_t limit) {
  OracleResult best;
  best.mapspace_size = count_mapspace(pool);
  check_size(best.mapspace_size, limit);
  for_each_combination(pool, [&](const std::vector<std::size_t>& choice) {
    const auto ev = evaluate_choice(pool, choice);
    if (!ev || !ev->feasible) return;
    ++best.feasible_count;
    const Rational obj = objective_value(objective, ev->energy, ev->latency);
    if (!better(obj, ev->energy, ev->latency, choice, best)) return;
    best.feasible = true;
    best.choice = choice;
    best.objective = obj;
    best.cost.energy = ev->energy;
    best.cost.latency = ev->latency;
    best.usage = ev->usage;
  });
  return best;
}

}  // namespace fusemap
