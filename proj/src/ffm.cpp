#include "fusemap/ffm.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <thread>

#include "fusemap/errors.hpp"
#include "fusemap/pareto.hpp"

namespace fusemap {

using nlohmann::json;

InnerStorage parse_inner_storage(std::string_view text) {
  if (text == "all") return InnerStorage::all;
  if (text == "private") return InnerStorage::private_only;
  if (text == "none") return InnerStorage::none;
  throw InputError("inner_storage: expected all, private or none, got '" + std::string(text) + "'");
}

std::string_view to_string(InnerStorage mode) {
  switch (mode) {
    case InnerStorage::all:
      return "all";
    case InnerStorage::private_only:
      return "private";
    case InnerStorage::none:
      return "none";
  }
  return "all";
}

json SearchConfig::to_json() const {
  return {{"objective", std::string(to_string(objective))},
          {"max_loops_per_level", max_loops_per_level},
          {"explore_permutations", explore_permutations},
          {"max_loop_depth", max_loop_depth},
          {"inner_storage", std::string(to_string(inner_storage))},
          {"max_pmappings_per_einsum", max_pmappings_per_einsum}};
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FUSEMAP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

std::size_t CandidatePool::total_candidates() const {
  std::size_t n = 0;
  for (const auto& c : per_einsum) n += c.size();
  return n;
}

std::vector<bool> CandidatePool::constrained_levels() const {
  std::vector<bool> out(capacities.size(), true);
  for (std::size_t l = 0; l < out.size() && l < usage_bounds.size(); ++l) out[l] = usage_bounds[l] > capacities[l];
  return out;
}

CandidatePool build_pool(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg) {
  CandidatePool pool;
  std::int64_t everything = 0;
  for (const auto& e : w.einsums()) {
    for (const auto& t : e.tensors()) everything += w.tensor_elements(t) * arch.datum_bytes;
  }
  for (std::size_t l = 1; l < arch.num_levels(); ++l) {
    pool.capacities.push_back(*arch.levels[l].capacity_bytes);
    pool.usage_bounds.push_back(everything);
  }
  std::vector<std::vector<EinsumPath>> paths;
  for (std::size_t i = 0; i < w.size(); ++i) {
    pool.einsum_names.push_back(w.einsum(i).name);
    paths.push_back(enumerate_paths(w, arch, i, cfg));
  }
  // Intern keys boundary by boundary, in key order.
  std::vector<std::map<CompatKey, int>> ids(w.size());
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const auto& shared = w.boundary_tensor(i);
    if (!shared) continue;
    std::set<CompatKey> keys;
    for (const auto& p : paths[i]) keys.insert(undirected(compat_key_producer(p, *shared)));
    for (const auto& p : paths[i + 1]) keys.insert(undirected(compat_key_consumer(p, *shared)));
    for (const auto& k : keys) {
      ids[i][k] = static_cast<int>(pool.key_names.size());
      pool.key_names.push_back(render_key(arch, k));
    }
  }
  pool.per_einsum.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto& out = pool.per_einsum[i];
    out.reserve(paths[i].size());
    for (std::size_t id = 0; id < paths[i].size(); ++id) {
      EinsumPath& path = paths[i][id];
      Candidate c;
      c.einsum = i;
      c.id = id;
      c.label = w.einsum(i).name + "#" + std::to_string(id);
      if (const auto k = input_key(w, path)) {
        c.key_in = ids[i - 1].at(undirected(*k));
        c.depth_in = k->depth();
      }
      if (const auto k = output_key(w, path)) {
        c.key_out = ids[i].at(undirected(*k));
        c.depth_out = k->depth();
      }
      CostBreakdown cost = evaluate(w, arch, path);
      c.energy = cost.energy;
      c.latency = cost.latency;
      c.cost = std::move(cost);
      for (std::size_t l = 1; l < arch.num_levels(); ++l) {
        c.profiles.push_back(path_profile(w, arch, path, l, c.depth_in, c.depth_out));
      }
      c.raw = reservations_of(w, arch, path);
      c.path = std::move(path);
      out.push_back(std::move(c));
    }
  }
  return pool;
}

namespace {

std::vector<std::int64_t> flat_profiles(const std::vector<ReservationProfile>& profiles,
                                        const std::vector<bool>& constrained) {
  std::vector<std::int64_t> out;
  for (std::size_t l = 0; l < profiles.size(); ++l) {
    if (!constrained[l]) continue;
    const auto f = profiles[l].flatten();
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

bool within_capacity(const std::vector<ReservationProfile>& profiles, const std::vector<std::int64_t>& caps) {
  for (std::size_t l = 0; l < profiles.size(); ++l) {
    if (profiles[l].usage() > caps.at(l)) return false;
  }
  return true;
}

std::vector<std::int64_t> raw_sizes(const Candidate& c, const std::vector<bool>& constrained) {
  std::vector<std::int64_t> out;
  for (const auto& r : c.raw) {
    if (r.level >= 1 && r.level - 1 < constrained.size() && constrained[r.level - 1]) out.push_back(r.bytes);
  }
  return out;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t raw_layout(const Candidate& c) {
  std::uint64_t h = 0;
  for (const auto& r : c.raw) {
    h = mix(h, std::hash<std::string>{}(r.tensor));
    h = mix(h, r.level);
    h = mix(h, r.slot);
  }
  return h;
}

// Objective components kept for pruning: a summable objective needs only its
// own sum, EDP needs both.
CriteriaVector criteria(Objective objective, const Rational& energy, const Rational& latency,
                        std::vector<std::int64_t> reservations) {
  return {objective == Objective::latency ? Rational(0) : energy, objective == Objective::energy ? Rational(0) : latency,
          0, std::move(reservations)};
}

CandidatePool prune_pool_impl(const CandidatePool& pool, Objective objective, bool consolidated) {
  const std::vector<bool> constrained = pool.constrained_levels();
  CandidatePool out = pool;
  for (auto& list : out.per_einsum) {
    std::map<std::tuple<int, int, std::uint64_t>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!within_capacity(list[i].profiles, pool.capacities)) continue;
      const std::uint64_t layout = consolidated ? 0 : raw_layout(list[i]);
      groups[{list[i].key_in, list[i].key_out, layout}].push_back(i);
    }
    std::vector<std::size_t> keep;
    for (const auto& [_, members] : groups) {
      std::vector<CriteriaVector> vs;
      std::vector<std::uint64_t> ids;
      for (auto i : members) {
        vs.push_back(criteria(objective, list[i].energy, list[i].latency,
                              consolidated ? flat_profiles(list[i].profiles, constrained) : raw_sizes(list[i], constrained)));
        ids.push_back(list[i].id);
      }
      for (auto k : frontier(vs, ids)) keep.push_back(members[k]);
    }
    std::sort(keep.begin(), keep.end());
    std::vector<Candidate> kept;
    kept.reserve(keep.size());
    for (auto i : keep) kept.push_back(std::move(list[i]));
    list = std::move(kept);
  }
  return out;
}

}  // namespace

CandidatePool prune_pool(const CandidatePool& pool, Objective objective) {
  return prune_pool_impl(pool, objective, true);
}

CandidatePool load_pool(const json& doc) {
  if (!doc.is_object() || !doc.contains("einsums") || !doc["einsums"].is_array() || doc["einsums"].empty()) {
    throw InputError("pool: missing field 'einsums'");
  }
  CandidatePool pool;
  std::set<std::string> names;
  const json& es = doc["einsums"];
  for (const auto& e : es) {
    for (const auto& c : e.value("candidates", json::array())) {
      for (const char* k : {"key_in", "key_out"}) {
        if (c.contains(k) && !c[k].is_null()) names.insert(c[k].get<std::string>());
      }
    }
  }
  std::map<std::string, int> ids;
  for (const auto& n : names) {
    ids[n] = static_cast<int>(pool.key_names.size());
    pool.key_names.push_back(n);
  }
  pool.per_einsum.resize(es.size());
  for (std::size_t i = 0; i < es.size(); ++i) {
    const std::string where = "einsums[" + std::to_string(i) + "]";
    if (!es[i].contains("name") || !es[i]["name"].is_string()) throw InputError(where + ": missing field 'name'");
    pool.einsum_names.push_back(es[i]["name"].get<std::string>());
    if (!es[i].contains("candidates") || !es[i]["candidates"].is_array() || es[i]["candidates"].empty()) {
      throw InputError(where + ": missing field 'candidates'");
    }
    const json& cs = es[i]["candidates"];
    for (std::size_t j = 0; j < cs.size(); ++j) {
      const std::string cw = where + ".candidates[" + std::to_string(j) + "]";
      Candidate c;
      c.einsum = i;
      c.id = j;
      c.label = cs[j].value("name", pool.einsum_names.back() + "#" + std::to_string(j));
      c.energy = cs[j].contains("energy") ? rational_from_json(cs[j]["energy"]) : Rational(0);
      c.latency = cs[j].contains("latency") ? rational_from_json(cs[j]["latency"]) : Rational(0);
      if (c.energy < 0 || c.latency < 0) throw InputError(cw + ": energy and latency must be nonnegative");
      if (cs[j].contains("key_in") && !cs[j]["key_in"].is_null()) {
        if (i == 0) throw InputError(cw + ".key_in: the first Einsum has no predecessor");
        c.key_in = ids.at(cs[j]["key_in"].get<std::string>());
      }
      if (cs[j].contains("key_out") && !cs[j]["key_out"].is_null()) {
        if (i + 1 == es.size()) throw InputError(cw + ".key_out: the last Einsum has no successor");
        c.key_out = ids.at(cs[j]["key_out"].get<std::string>());
      }
      pool.per_einsum[i].push_back(std::move(c));
    }
  }
  return pool;
}

std::vector<Candidate> enumerate_pmappings(const Workload& w, const ArchSpec& arch, std::size_t einsum,
                                           const SearchConfig& cfg) {
  return prune_pool(build_pool(w, arch, cfg), cfg.objective).per_einsum.at(einsum);
}

namespace {

struct Partial {
  std::vector<std::uint32_t> choice;
  Rational energy;
  Rational latency;
  std::vector<ReservationProfile> profiles;
  std::vector<std::int64_t> raw;
  std::uint64_t layout = 0;
  int key = -1;
};

struct JoinCounters {
  std::int64_t attempted = 0;
  std::int64_t skipped = 0;
  std::size_t max_tracked = 0;
  std::size_t max_depth = 0;
  std::size_t violations = 0;
};

// Ties are broken in the order pruning compares: the objective's own cost
// components, then usage of constrained levels, then candidate ids, which do
// not depend on how the pool was pruned.
bool better(const CandidatePool& pool, Objective objective, const std::vector<bool>& constrained,
            const Rational& obj_a, const Partial& a, const Rational& obj_b, const Partial& b) {
  if (obj_a != obj_b) return obj_a < obj_b;
  const CriteriaVector ca = criteria(objective, a.energy, a.latency, {});
  const CriteriaVector cb = criteria(objective, b.energy, b.latency, {});
  if (ca.energy != cb.energy) return ca.energy < cb.energy;
  if (ca.latency != cb.latency) return ca.latency < cb.latency;
  for (std::size_t l = 0; l < a.profiles.size(); ++l) {
    if (!constrained[l]) continue;
    const std::int64_t ua = a.profiles[l].usage();
    const std::int64_t ub = b.profiles[l].usage();
    if (ua != ub) return ua < ub;
  }
  for (std::size_t e = 0; e < a.choice.size(); ++e) {
    const std::size_t ia = pool.per_einsum[e][a.choice[e]].id;
    const std::size_t ib = pool.per_einsum[e][b.choice[e]].id;
    if (ia != ib) return ia < ib;
  }
  return false;
}

// Joins every left partial of `lefts` with the right candidates it may meet.
void join_groups(const CandidatePool& pool, const std::vector<Candidate>& rights,
                 const std::map<int, std::vector<std::size_t>>& right_by_key, const std::vector<Partial>& lefts,
                 const std::vector<std::size_t>& left_members, int left_key, const Ablation& ablation,
                 std::vector<Partial>& out, JoinCounters& counters) {
  auto attach = [&](const Partial& l, const Candidate& r) {
    Partial p;
    p.profiles.reserve(l.profiles.size());
    for (std::size_t lv = 0; lv < l.profiles.size(); ++lv) {
      p.profiles.push_back(consolidate_after_join(l.profiles[lv], r.depth_in, r.profiles[lv], r.depth_out));
      const auto& prof = p.profiles.back();
      counters.max_tracked = std::max(counters.max_tracked, prof.tracked_entries());
      counters.max_depth = std::max(counters.max_depth, prof.depth());
      if (prof.tracked_entries() > 2 * r.depth_out + 1) ++counters.violations;
    }
    if (!within_capacity(p.profiles, pool.capacities)) return;
    p.choice = l.choice;
    p.choice.push_back(static_cast<std::uint32_t>(&r - rights.data()));
    p.energy = l.energy + r.energy;
    p.latency = l.latency + r.latency;
    p.key = r.key_out;
    if (!ablation.consolidate_reservations) {
      p.raw = l.raw;
      const auto sizes = raw_sizes(r, pool.constrained_levels());
      p.raw.insert(p.raw.end(), sizes.begin(), sizes.end());
      p.layout = mix(mix(l.layout, raw_layout(r)), r.depth_in);
    }
    out.push_back(std::move(p));
  };

  std::int64_t compatible_count = 0;
  if (const auto it = right_by_key.find(left_key); it != right_by_key.end()) {
    compatible_count = static_cast<std::int64_t>(it->second.size());
  }
  const std::int64_t total_right = static_cast<std::int64_t>(rights.size());
  const std::int64_t nl = static_cast<std::int64_t>(left_members.size());
  if (ablation.skip_incompatible_joins) {
    counters.attempted += nl * compatible_count;
    counters.skipped += nl * (total_right - compatible_count);
    if (compatible_count == 0) return;
    for (auto li : left_members) {
      for (auto ri : right_by_key.at(left_key)) attach(lefts[li], rights[ri]);
    }
  } else {
    counters.attempted += nl * total_right;
    for (auto li : left_members) {
      for (const auto& r : rights) {
        if (r.key_in != left_key) continue;
        attach(lefts[li], r);
      }
    }
  }
}

std::vector<Partial> prune_partials(std::vector<Partial> partials, Objective objective, bool consolidated,
                                    const std::vector<bool>& constrained, std::size_t& groups_out) {
  std::map<std::pair<int, std::uint64_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < partials.size(); ++i) groups[{partials[i].key, partials[i].layout}].push_back(i);
  groups_out = groups.size();
  std::vector<Partial> kept;
  for (const auto& [_, members] : groups) {
    std::vector<CriteriaVector> vs;
    std::vector<std::uint64_t> ids;
    vs.reserve(members.size());
    for (auto i : members) {
      vs.push_back(criteria(objective, partials[i].energy, partials[i].latency,
                            consolidated ? flat_profiles(partials[i].profiles, constrained) : partials[i].raw));
      ids.push_back(i);
    }
    for (auto k : frontier(vs, ids)) kept.push_back(std::move(partials[members[k]]));
  }
  return kept;
}

}  // namespace

SearchOutcome join_search(const CandidatePool& pool, Objective objective, const Ablation& ablation, int threads) {
  using clock = std::chrono::steady_clock;
  if (pool.per_einsum.empty()) throw InputError("empty candidate pool");
  const int nthreads = resolve_threads(threads);
  const std::vector<bool> constrained = pool.constrained_levels();
  SearchOutcome outcome;

  std::vector<Partial> partials;
  {
    const auto t0 = clock::now();
    for (std::size_t i = 0; i < pool.per_einsum[0].size(); ++i) {
      const Candidate& c = pool.per_einsum[0][i];
      Partial p;
      p.choice = {static_cast<std::uint32_t>(i)};
      p.energy = c.energy;
      p.latency = c.latency;
      p.key = c.key_out;
      p.profiles = c.profiles;
      for (auto& prof : p.profiles) prof.fold_to(c.depth_out);
      if (!within_capacity(p.profiles, pool.capacities)) continue;
      if (!ablation.consolidate_reservations) {
        p.raw = raw_sizes(c, constrained);
        p.layout = raw_layout(c);
      }
      partials.push_back(std::move(p));
    }
    StepStats s;
    s.einsum = 0;
    partials = prune_partials(std::move(partials), objective, ablation.consolidate_reservations, constrained, s.groups);
    s.frontier_size = partials.size();
    for (const auto& p : partials) {
      for (const auto& prof : p.profiles) {
        s.max_tracked_entries = std::max(s.max_tracked_entries, prof.tracked_entries());
        s.max_open_depth = std::max(s.max_open_depth, prof.depth());
        if (prof.tracked_entries() > 2 * prof.depth() + 1) ++s.bound_violations;
      }
    }
    s.elapsed_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    outcome.steps.push_back(s);
  }

  for (std::size_t e = 1; e < pool.size(); ++e) {
    const auto t0 = clock::now();
    const auto& rights = pool.per_einsum[e];
    std::map<int, std::vector<std::size_t>> right_by_key;
    for (std::size_t i = 0; i < rights.size(); ++i) right_by_key[rights[i].key_in].push_back(i);
    std::map<int, std::vector<std::size_t>> left_by_key;
    for (std::size_t i = 0; i < partials.size(); ++i) left_by_key[partials[i].key].push_back(i);
    std::vector<std::pair<int, const std::vector<std::size_t>*>> tasks;
    for (const auto& [k, members] : left_by_key) tasks.push_back({k, &members});

    std::vector<std::vector<Partial>> results(tasks.size());
    std::vector<JoinCounters> counters(tasks.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t t = begin; t < tasks.size(); t += stride) {
        join_groups(pool, rights, right_by_key, partials, *tasks[t].second, tasks[t].first, ablation, results[t],
                    counters[t]);
      }
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(nthreads), tasks.size());
    if (workers <= 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> pool_threads;
      for (std::size_t t = 0; t < workers; ++t) pool_threads.emplace_back(work, t, workers);
    }
    std::vector<Partial> joined;
    StepStats s;
    s.einsum = e;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      for (auto& p : results[t]) joined.push_back(std::move(p));
      s.joins_attempted += counters[t].attempted;
      s.joins_skipped += counters[t].skipped;
      s.max_tracked_entries = std::max(s.max_tracked_entries, counters[t].max_tracked);
      s.max_open_depth = std::max(s.max_open_depth, counters[t].max_depth);
      s.bound_violations += counters[t].violations;
    }
    partials = prune_partials(std::move(joined), objective, ablation.consolidate_reservations, constrained, s.groups);
    s.frontier_size = partials.size();
    s.elapsed_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    outcome.steps.push_back(s);
  }

  const Partial* best = nullptr;
  Rational best_obj;
  for (const auto& p : partials) {
    if (p.key != -1) continue;
    const Rational obj = objective_value(objective, p.energy, p.latency);
    if (best == nullptr || better(pool, objective, constrained, obj, p, best_obj, *best)) {
      best = &p;
      best_obj = obj;
    }
  }
  if (best == nullptr) throw NoFeasibleMapping("no mapping fits the memory capacities");
  outcome.choice.assign(best->choice.begin(), best->choice.end());
  outcome.objective = best_obj;
  outcome.energy = best->energy;
  outcome.latency = best->latency;
  outcome.usage.assign(pool.capacities.size() + 1, 0);
  for (std::size_t l = 0; l < best->profiles.size(); ++l) outcome.usage[l + 1] = best->profiles[l].usage();
  return outcome;
}

std::optional<ChainEval> evaluate_choice(const CandidatePool& pool, const std::vector<std::size_t>& choice) {
  if (choice.size() != pool.size()) return std::nullopt;
  ChainEval ev;
  std::vector<ReservationProfile> profiles;
  for (std::size_t e = 0; e < choice.size(); ++e) {
    const Candidate& c = pool.per_einsum[e].at(choice[e]);
    if (e == 0) {
      if (c.key_in != -1) return std::nullopt;
      profiles = c.profiles;
      for (auto& p : profiles) p.fold_to(c.depth_out);
    } else {
      const Candidate& prev = pool.per_einsum[e - 1][choice[e - 1]];
      if (prev.key_out != c.key_in) return std::nullopt;
      for (std::size_t l = 0; l < profiles.size(); ++l) {
        profiles[l] = consolidate_after_join(profiles[l], c.depth_in, c.profiles[l], c.depth_out);
      }
    }
    ev.energy += c.energy;
    ev.latency += c.latency;
  }
  if (pool.per_einsum.back()[choice.back()].key_out != -1) return std::nullopt;
  ev.usage.assign(pool.capacities.size() + 1, 0);
  ev.feasible = true;
  for (std::size_t l = 0; l < profiles.size(); ++l) {
    ev.usage[l + 1] = profiles[l].usage();
    if (ev.usage[l + 1] > pool.capacities[l]) ev.feasible = false;
  }
  return ev;
}

MappingResult assemble(const Workload& w, const ArchSpec& arch, const CandidatePool& pool,
                       const std::vector<std::size_t>& choice, Objective objective) {
  MappingResult r;
  for (std::size_t e = 0; e < choice.size(); ++e) {
    const Candidate& c = pool.per_einsum[e].at(choice[e]);
    if (!c.path) throw InputError("assemble: candidate without a path");
    const Pmapping piece = Pmapping::single(*c.path);
    r.mapping = e == 0 ? piece : join(w, r.mapping, piece);
    r.labels.push_back(c.label);
  }
  r.tree = build_tree(w, r.mapping);
  r.cost = evaluate(w, arch, r.tree);
  r.objective = objective_value(objective, r.cost);
  r.usage = max_usage_all(w, arch, r.tree);
  return r;
}

MappingResult map_ablated(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg, const Ablation& ablation) {
  const CandidatePool raw = build_pool(w, arch, cfg);
  const CandidatePool pool = prune_pool_impl(raw, cfg.objective, ablation.consolidate_reservations);
  const SearchOutcome out = join_search(pool, cfg.objective, ablation, cfg.threads);
  MappingResult r = assemble(w, arch, pool, out.choice, cfg.objective);
  if (r.objective != out.objective) throw std::logic_error("search and direct evaluation disagree");
  r.steps = out.steps;
  r.pool_raw = raw.total_candidates();
  r.pool_pruned = pool.total_candidates();
  return r;
}

MappingResult map(const Workload& w, const ArchSpec& arch, const SearchConfig& cfg) {
  return map_ablated(w, arch, cfg, Ablation{});
}

}  // namespace fusemap
