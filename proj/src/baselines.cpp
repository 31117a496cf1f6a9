#include "fusemap/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "fusemap/errors.hpp"

namespace fusemap {

void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << "evaluations,best_objective\n";
  for (const auto& [n, best] : trace.samples) {
    os << n << ",";
    if (best) {
      os << to_double(*best);
    } else {
      os << "inf";
    }
    os << "\n";
  }
}

ChainSampler::ChainSampler(const CandidatePool& pool) : pool_(pool) {
  const std::size_t n = pool.size();
  // Keys reachable from the left and completable to the right.
  std::vector<std::set<int>> from_left(n + 1), to_right(n + 1);
  from_left[0] = {-1};
  for (std::size_t e = 0; e < n; ++e) {
    for (const auto& c : pool.per_einsum[e]) {
      if (from_left[e].contains(c.key_in)) from_left[e + 1].insert(c.key_out);
    }
  }
  to_right[n] = {-1};
  for (std::size_t e = n; e-- > 0;) {
    for (const auto& c : pool.per_einsum[e]) {
      if (to_right[e + 1].contains(c.key_out)) to_right[e].insert(c.key_in);
    }
  }
  viable_.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t i = 0; i < pool.per_einsum[e].size(); ++i) {
      const auto& c = pool.per_einsum[e][i];
      if (from_left[e].contains(c.key_in) && to_right[e + 1].contains(c.key_out)) viable_[e].push_back(i);
    }
    if (viable_[e].empty()) empty_ = true;
  }
}

std::size_t ChainSampler::draw(std::size_t e, int key_in, int key_out, bool match_in, bool match_out,
                               std::mt19937_64& rng) const {
  std::vector<std::size_t> options;
  for (auto i : viable_[e]) {
    const auto& c = pool_.per_einsum[e][i];
    if (match_in && c.key_in != key_in) continue;
    if (match_out && c.key_out != key_out) continue;
    options.push_back(i);
  }
  if (options.empty()) throw NoFeasibleMapping("no compatible pmapping to draw");
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

std::vector<std::size_t> ChainSampler::random_chain(std::mt19937_64& rng) const {
  if (empty_) throw NoFeasibleMapping("the pool has no complete compatible chain");
  std::vector<std::size_t> choice(pool_.size());
  for (std::size_t e = 0; e < pool_.size(); ++e) {
    const int key = e == 0 ? -1 : pool_.per_einsum[e - 1][choice[e - 1]].key_out;
    choice[e] = draw(e, key, -1, e > 0, false, rng);
  }
  return choice;
}

void ChainSampler::repair_forward(std::vector<std::size_t>& choice, std::size_t e, std::mt19937_64& rng) const {
  for (std::size_t k = std::max<std::size_t>(e, 1); k < pool_.size(); ++k) {
    const int need = pool_.per_einsum[k - 1][choice[k - 1]].key_out;
    if (pool_.per_einsum[k][choice[k]].key_in == need) break;
    choice[k] = draw(k, need, -1, true, false, rng);
  }
}

void ChainSampler::repick(std::vector<std::size_t>& choice, std::size_t e, std::mt19937_64& rng) const {
  choice[e] = draw(e, -1, -1, false, false, rng);
  for (std::size_t k = e; k-- > 0;) {
    const int need = pool_.per_einsum[k + 1][choice[k + 1]].key_in;
    if (pool_.per_einsum[k][choice[k]].key_out == need) break;
    choice[k] = draw(k, -1, need, false, true, rng);
  }
  repair_forward(choice, e + 1, rng);
}

bool ChainSampler::compatible_chain(const std::vector<std::size_t>& choice) const {
  if (choice.size() != pool_.size()) return false;
  int key = -1;
  for (std::size_t e = 0; e < choice.size(); ++e) {
    if (choice[e] >= pool_.per_einsum[e].size()) return false;
    const auto& c = pool_.per_einsum[e][choice[e]];
    if (c.key_in != key) return false;
    key = c.key_out;
  }
  return key == -1;
}

bool accept_move(double delta, double temperature, std::mt19937_64& rng) {
  if (delta <= 0) return true;
  if (temperature <= 0 || std::isinf(delta)) return false;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < std::exp(-delta / temperature);
}

std::vector<std::size_t> crossover(const ChainSampler& sampler, const std::vector<std::size_t>& a,
                                   const std::vector<std::size_t>& b, std::size_t cut, std::mt19937_64& rng) {
  std::vector<std::size_t> child(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(cut));
  child.insert(child.end(), b.begin() + static_cast<std::ptrdiff_t>(cut), b.end());
  sampler.repair_forward(child, cut, rng);
  return child;
}

namespace {

struct Scored {
  std::vector<std::size_t> choice;
  std::optional<Rational> objective;
  Rational energy;
  Rational latency;
};

class Evaluator {
 public:
  Evaluator(const CandidatePool& pool, Objective objective, std::int64_t budget)
      : pool_(pool), objective_(objective), budget_(budget) {
    if (budget <= 0) throw InputError("budget must be positive");
  }

  bool exhausted() const { return result_.evaluations >= budget_; }

  Scored score(const std::vector<std::size_t>& choice) {
    Scored s{choice, std::nullopt, 0, 0};
    const auto ev = evaluate_choice(pool_, choice);
    if (ev && ev->feasible) {
      s.objective = objective_value(objective_, ev->energy, ev->latency);
      s.energy = ev->energy;
      s.latency = ev->latency;
    }
    ++result_.evaluations;
    if (s.objective && (!result_.objective || *s.objective < *result_.objective)) {
      result_.objective = s.objective;
      result_.choice = s.choice;
      result_.energy = s.energy;
      result_.latency = s.latency;
    }
    if (result_.choice.empty()) result_.choice = choice;
    result_.trace.samples.push_back({result_.evaluations, result_.objective});
    return s;
  }

  BaselineResult take() { return std::move(result_); }

 private:
  const CandidatePool& pool_;
  Objective objective_;
  std::int64_t budget_;
  BaselineResult result_;
};

double as_double(const std::optional<Rational>& v) {
  return v ? to_double(*v) : std::numeric_limits<double>::infinity();
}

// Strictly better, with infeasible worst.
bool fitter(const Scored& a, const Scored& b) {
  if (!a.objective) return false;
  if (!b.objective) return true;
  return *a.objective < *b.objective;
}

}  // namespace

BaselineResult random_search(const CandidatePool& pool, Objective objective, const RandomParams& params) {
  Evaluator ev(pool, objective, params.budget);
  ChainSampler sampler(pool);
  std::mt19937_64 rng(params.seed);
  std::set<std::vector<std::size_t>> seen;
  while (!ev.exhausted()) {
    auto chain = sampler.random_chain(rng);
    if (params.distinct) {
      for (int tries = 0; seen.contains(chain) && tries < 1000; ++tries) chain = sampler.random_chain(rng);
      seen.insert(chain);
    }
    ev.score(chain);
  }
  return ev.take();
}

BaselineResult simulated_annealing(const CandidatePool& pool, Objective objective, const AnnealParams& params) {
  Evaluator ev(pool, objective, params.budget);
  ChainSampler sampler(pool);
  std::mt19937_64 rng(params.seed);
  Scored current = ev.score(sampler.random_chain(rng));
  double temperature = params.initial_temperature.value_or(current.objective ? as_double(current.objective) : 1.0);
  std::uniform_int_distribution<std::size_t> which(0, pool.size() - 1);
  while (!ev.exhausted()) {
    auto next_choice = current.choice;
    sampler.repick(next_choice, which(rng), rng);
    Scored next = ev.score(next_choice);
    const double a = as_double(current.objective);
    const double b = as_double(next.objective);
    const double delta = std::isinf(a) ? (std::isinf(b) ? 0.0 : -1.0) : b - a;
    if (accept_move(delta, temperature, rng)) current = std::move(next);
    temperature *= params.cooling_rate;
  }
  return ev.take();
}

BaselineResult genetic_algorithm(const CandidatePool& pool, Objective objective, const GeneticParams& params) {
  if (params.population < 2) throw InputError("population must be at least 2");
  if (params.tournament < 1 || params.elitism >= params.population) throw InputError("bad tournament or elitism size");
  Evaluator ev(pool, objective, params.budget);
  ChainSampler sampler(pool);
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<Scored> population;
  if (!params.initial_population.empty()) {
    for (const auto& g : params.initial_population) {
      if (!sampler.compatible_chain(g)) throw InputError("initial population contains an incompatible genome");
      if (ev.exhausted()) break;
      population.push_back(ev.score(g));
    }
  } else {
    // Seed with compatible chains that also fit in memory.
    std::int64_t attempts = 0;
    while (population.size() < params.population && !ev.exhausted()) {
      if (attempts++ >= params.seeding_attempts) {
        throw BudgetExceeded("could not seed a population of feasible mappings within " +
                             std::to_string(params.seeding_attempts) + " attempts");
      }
      const auto chain = sampler.random_chain(rng);
      const auto check = evaluate_choice(pool, chain);
      if (!check || !check->feasible) continue;
      population.push_back(ev.score(chain));
    }
  }

  auto select = [&]() -> const Scored& {
    std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
    const Scored* best = &population[pick(rng)];
    for (std::size_t i = 1; i < params.tournament; ++i) {
      const Scored& c = population[pick(rng)];
      if (fitter(c, *best)) best = &c;
    }
    return *best;
  };

  while (!ev.exhausted() && !population.empty()) {
    std::vector<std::size_t> order(population.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fitter(population[a], population[b]);
    });
    std::vector<Scored> next;
    for (std::size_t i = 0; i < params.elitism && i < order.size(); ++i) next.push_back(population[order[i]]);
    while (next.size() < population.size() && !ev.exhausted()) {
      const Scored& a = select();
      const Scored& b = select();
      std::vector<std::size_t> child = a.choice;
      if (pool.size() > 1 && coin(rng) < params.crossover_rate) {
        std::uniform_int_distribution<std::size_t> cut(1, pool.size() - 1);
        child = crossover(sampler, a.choice, b.choice, cut(rng), rng);
      }
      if (coin(rng) < params.mutation_rate) {
        std::uniform_int_distribution<std::size_t> which(0, pool.size() - 1);
        sampler.repick(child, which(rng), rng);
      }
      next.push_back(ev.score(child));
    }
    if (next.size() < population.size()) break;
    population = std::move(next);
  }
  return ev.take();
}

}  // namespace fusemap
