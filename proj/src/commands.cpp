#include "fusemap/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fusemap/baselines.hpp"
#include "fusemap/errors.hpp"
#include "fusemap/ffm.hpp"
#include "fusemap/oracle.hpp"
#include "fusemap/report.hpp"

namespace fusemap {

using nlohmann::json;

std::vector<std::pair<std::int64_t, std::int64_t>> scaled_chain_pattern() {
  return {{8, 8}, {2, 8}, {2, 2}, {8, 2}};
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "': JSON parse error: " + e.what());
  }
}

struct Common {
  std::string workload;
  std::string arch;
  std::string pool;
  std::string objective = "edp";
  std::string out;
  int max_loops = 1;
  bool no_permutations = false;
  int max_loop_depth = 0;
  std::string inner_storage = "all";
  std::int64_t max_pmappings = 2'000'000;
  int threads = 0;

  void add_to(CLI::App* app, bool with_pool) {
    app->add_option("--workload", workload, "Workload JSON file");
    app->add_option("--arch", arch, "Architecture JSON file (default: built-in TPUv4i-like)");
    if (with_pool) app->add_option("--pool", pool, "Explicit candidate pool JSON instead of a workload");
    app->add_option("--objective", objective, "energy, latency or edp")->check(CLI::IsMember({"energy", "latency", "edp"}));
    app->add_option("--out", out, "Output file (default: stdout)");
    app->add_option("--max-loops-per-level", max_loops, "Loops per rank variable per bounded level");
    app->add_flag("--no-permutations", no_permutations, "Only one loop order per Einsum");
    app->add_option("--max-loop-depth", max_loop_depth, "Loops per Einsum path (0: no limit)");
    app->add_option("--inner-storage", inner_storage, "Tensors that may be kept below their backing level")
        ->check(CLI::IsMember({"all", "private", "none"}));
    app->add_option("--max-pmappings", max_pmappings, "Enumeration cap per Einsum");
    app->add_option("--threads", threads, "Worker threads (overrides FUSEMAP_THREADS)");
  }

  SearchConfig config() const {
    SearchConfig cfg;
    cfg.objective = parse_objective(objective);
    cfg.max_loops_per_level = max_loops;
    cfg.explore_permutations = !no_permutations;
    cfg.max_loop_depth = max_loop_depth;
    cfg.inner_storage = parse_inner_storage(inner_storage);
    cfg.max_pmappings_per_einsum = max_pmappings;
    cfg.threads = threads;
    return cfg;
  }

  ArchSpec load_arch_or_default() const { return arch.empty() ? tpu_v4i_like() : ArchSpec::from_json(read_json(arch)); }

  Workload load_workload_file() const {
    if (workload.empty()) throw InputError("--workload is required");
    return Workload::from_json(read_json(workload));
  }
};

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      os_ = &fallback;
    } else {
      file_.open(path);
      if (!file_) throw InputError("cannot write '" + path + "'");
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

void write_json(const std::string& path, std::ostream& fallback, const json& doc) {
  Output o(path, fallback);
  o.stream() << doc.dump(2) << "\n";
}

// uniform > 0: every N and K equal to it; otherwise the rotating pattern.
Workload chain_workload(int n, std::int64_t m, std::int64_t uniform) {
  if (uniform > 0) {
    const std::vector<std::pair<std::int64_t, std::int64_t>> pattern{{uniform, uniform}};
    return make_chain(n, m, pattern);
  }
  const auto pattern = scaled_chain_pattern();
  return make_chain(n, m, pattern);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fusion-aware mapper for cascades of Einsums", "fusemap"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("fusemap ") + FUSEMAP_VERSION);

  Common map_opts;
  std::string usage_csv;
  auto* map_cmd = app.add_subcommand("map", "Find an optimal mapping");
  map_opts.add_to(map_cmd, true);
  map_cmd->add_option("--usage-csv", usage_csv, "Write the buffer usage timeline of the best mapping");

  Common oracle_opts;
  std::int64_t oracle_limit = 1'000'000;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustively search small mapspaces");
  oracle_opts.add_to(oracle_cmd, true);
  oracle_cmd->add_option("--limit", oracle_limit, "Largest mapspace to enumerate");

  Common base_opts;
  std::string method;
  std::int64_t budget = -1;
  std::uint64_t seed = 1;
  std::string trace_csv;
  AnnealParams anneal;
  GeneticParams genetic;
  bool distinct = false;
  double t0 = -1;
  auto* base_cmd = app.add_subcommand("baseline", "Random search, simulated annealing or a genetic algorithm");
  base_opts.add_to(base_cmd, true);
  base_cmd->add_option("method", method, "random, sa or ga")->required()->check(CLI::IsMember({"random", "sa", "ga"}));
  base_cmd->add_option("--budget", budget, "Number of mapping evaluations")->required();
  base_cmd->add_option("--seed", seed, "Random seed");
  base_cmd->add_option("--trace-csv", trace_csv, "Write the convergence trace");
  base_cmd->add_flag("--distinct", distinct, "Random search: avoid repeated samples");
  base_cmd->add_option("--initial-temperature", t0, "SA: starting temperature (default: objective of the start)");
  base_cmd->add_option("--cooling-rate", anneal.cooling_rate, "SA: geometric cooling factor per step");
  base_cmd->add_option("--population", genetic.population, "GA: population size");
  base_cmd->add_option("--crossover-rate", genetic.crossover_rate, "GA: crossover probability");
  base_cmd->add_option("--mutation-rate", genetic.mutation_rate, "GA: mutation probability");

  Common ablate_opts;
  // Without consolidation the frontier grows exponentially; keep the default
  // per-Einsum space small enough for that run to finish.
  ablate_opts.max_loop_depth = 1;
  ablate_opts.inner_storage = "none";
  int ablate_einsums = 8;
  std::int64_t chain_m = 8;
  std::int64_t ablate_uniform = 0;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare joins and frontier sizes with each optimization disabled");
  ablate_opts.add_to(ablate_cmd, false);
  ablate_cmd->add_option("--einsums", ablate_einsums, "Chain length when no workload is given");
  ablate_cmd->add_option("--m", chain_m, "M extent of the generated chain");
  ablate_cmd->add_option("--uniform", ablate_uniform, "Use this N and K for every Einsum (0: rotating pattern)");

  Common scaling_opts;
  std::vector<int> scaling_einsums{2, 4, 8, 16};
  int repeats = 3;
  std::int64_t scaling_m = 8;
  auto* scaling_cmd = app.add_subcommand("scaling", "Per-Einsum join time and frontier size over chain lengths");
  scaling_opts.add_to(scaling_cmd, false);
  scaling_cmd->add_option("--einsums", scaling_einsums, "Chain lengths")->delimiter(',');
  scaling_cmd->add_option("--m", scaling_m, "M extent of the generated chains");
  std::int64_t scaling_uniform = 0;
  scaling_cmd->add_option("--uniform", scaling_uniform, "Use this N and K for every Einsum (0: rotating pattern)");
  scaling_cmd->add_option("--repeats", repeats, "Runs per chain length; the median time is reported");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInputError;
  }

  try {
    if (map_cmd->parsed()) {
      const SearchConfig cfg = map_opts.config();
      if (!map_opts.pool.empty()) {
        const json input = read_json(map_opts.pool);
        const CandidatePool pool = load_pool(input);
        const SearchOutcome res = join_search(pool, cfg.objective, {}, cfg.threads);
        write_json(map_opts.out, out, pool_report(pool, cfg.objective, res, input));
        return kExitOk;
      }
      const Workload w = map_opts.load_workload_file();
      const ArchSpec arch = map_opts.load_arch_or_default();
      const MappingResult r = map(w, arch, cfg);
      write_json(map_opts.out, out, map_report(w, arch, cfg, r));
      if (!usage_csv.empty()) {
        Output o(usage_csv, out);
        write_usage_csv(o.stream(), arch, simulate_usage(w, arch, r.tree));
      }
      return kExitOk;
    }
    if (oracle_cmd->parsed()) {
      const SearchConfig cfg = oracle_opts.config();
      if (!oracle_opts.pool.empty()) {
        const json input = read_json(oracle_opts.pool);
        const CandidatePool pool = load_pool(input);
        const OracleResult r = oracle_pool(pool, cfg.objective, oracle_limit);
        json rep = {{"tool", "fusemap"}, {"version", FUSEMAP_VERSION}, {"command", "oracle"}, {"pool", input},
                    {"objective", std::string(to_string(cfg.objective))}, {"mapspace_size", r.mapspace_size},
                    {"feasible", r.feasible}};
        if (r.feasible) {
          rep["objective_value"] = rational_json(r.objective);
          json picks = json::array();
          for (std::size_t e = 0; e < r.choice.size(); ++e) picks.push_back(pool.per_einsum[e][r.choice[e]].label);
          rep["mapping"] = {{"pmappings", picks}};
        }
        write_json(oracle_opts.out, out, rep);
        return r.feasible ? kExitOk : kExitNoFeasible;
      }
      const Workload w = oracle_opts.load_workload_file();
      const ArchSpec arch = oracle_opts.load_arch_or_default();
      const OracleResult r = oracle(w, arch, cfg, oracle_limit);
      write_json(oracle_opts.out, out, oracle_report(w, arch, cfg, r));
      return r.feasible ? kExitOk : kExitNoFeasible;
    }
    if (base_cmd->parsed()) {
      if (budget <= 0) throw InputError("--budget must be a positive number of evaluations");
      const SearchConfig cfg = base_opts.config();
      json input;
      CandidatePool pool;
      if (!base_opts.pool.empty()) {
        input = read_json(base_opts.pool);
        pool = load_pool(input);
      } else {
        const Workload w = base_opts.load_workload_file();
        const ArchSpec arch = base_opts.load_arch_or_default();
        input = {{"workload", w.to_json()}, {"arch", arch.to_json()}, {"config", cfg.to_json()}};
        pool = prune_pool(build_pool(w, arch, cfg), cfg.objective);
      }
      BaselineResult r;
      if (method == "random") {
        r = random_search(pool, cfg.objective, {budget, seed, distinct});
      } else if (method == "sa") {
        anneal.budget = budget;
        anneal.seed = seed;
        if (t0 >= 0) anneal.initial_temperature = t0;
        r = simulated_annealing(pool, cfg.objective, anneal);
      } else {
        genetic.budget = budget;
        genetic.seed = seed;
        r = genetic_algorithm(pool, cfg.objective, genetic);
      }
      write_json(base_opts.out, out, baseline_report(pool, cfg.objective, method, seed, r, input));
      if (!trace_csv.empty()) {
        Output o(trace_csv, out);
        write_trace_csv(o.stream(), r.trace);
      }
      return r.objective ? kExitOk : kExitNoFeasible;
    }
    if (ablate_cmd->parsed()) {
      const SearchConfig cfg = ablate_opts.config();
      const Workload w = ablate_opts.workload.empty() ? chain_workload(ablate_einsums, chain_m, ablate_uniform)
                                                      : ablate_opts.load_workload_file();
      const ArchSpec arch = ablate_opts.load_arch_or_default();
      const MappingResult full = map(w, arch, cfg);
      const MappingResult no_skip = map_ablated(w, arch, cfg, {false, true});
      const MappingResult no_consolidation = map_ablated(w, arch, cfg, {true, false});
      Output o(ablate_opts.out, out);
      o.stream() << "einsum,joins_with_skip,joins_without_skip,frontier_consolidated,frontier_unconsolidated\n";
      for (std::size_t i = 0; i < full.steps.size(); ++i) {
        o.stream() << full.steps[i].einsum << "," << full.steps[i].joins_attempted << ","
                   << no_skip.steps[i].joins_attempted << "," << full.steps[i].frontier_size << ","
                   << no_consolidation.steps[i].frontier_size << "\n";
      }
      const bool same = full.mapping == no_skip.mapping && full.mapping == no_consolidation.mapping &&
                        full.objective == no_skip.objective && full.objective == no_consolidation.objective;
      err << "best objective " << to_string(full.objective) << (same ? " (identical in every run)" : " (runs differ)")
          << "\n";
      return kExitOk;
    }
    if (scaling_cmd->parsed()) {
      const SearchConfig cfg = scaling_opts.config();
      const ArchSpec arch = scaling_opts.load_arch_or_default();
      if (repeats < 1) throw InputError("--repeats must be positive");
      Output o(scaling_opts.out, out);
      o.stream() << "einsums,einsum,join_seconds,frontier_size,groups,joins_attempted\n";
      for (int n : scaling_einsums) {
        const Workload w = chain_workload(n, scaling_m, scaling_uniform);
        const CandidatePool pool = prune_pool(build_pool(w, arch, cfg), cfg.objective);
        std::vector<std::vector<double>> times(static_cast<std::size_t>(n));
        SearchOutcome last;
        for (int rep = 0; rep < repeats; ++rep) {
          last = join_search(pool, cfg.objective, {}, cfg.threads);
          for (std::size_t i = 0; i < last.steps.size(); ++i) times[i].push_back(last.steps[i].elapsed_seconds);
        }
        for (std::size_t i = 0; i < last.steps.size(); ++i) {
          o.stream() << n << "," << last.steps[i].einsum << "," << median(times[i]) << ","
                     << last.steps[i].frontier_size << "," << last.steps[i].groups << ","
                     << last.steps[i].joins_attempted << "\n";
        }
      }
      return kExitOk;
    }
  } catch (const NoFeasibleMapping& e) {
    err << "no feasible mapping: " << e.what() << "\n";
    return kExitNoFeasible;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const IncompatibleJoin& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace fusemap
