#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "fusemap/ffm.hpp"

namespace fusemap {

/// Best objective after each evaluation; nullopt until a feasible mapping is seen.
struct Trace {
  std::vector<std::pair<std::int64_t, std::optional<Rational>>> samples;
};

void write_trace_csv(std::ostream& os, const Trace& trace);

struct BaselineResult {
  std::vector<std::size_t> choice;
  std::optional<Rational> objective;
  Rational energy;
  Rational latency;
  std::int64_t evaluations = 0;
  Trace trace;
};

/// Chains through the pool by key, with helpers to draw compatible choices.
/// Only candidates that appear in at least one complete chain are drawn.
class ChainSampler {
 public:
  explicit ChainSampler(const CandidatePool& pool);

  bool empty() const { return empty_; }
  std::vector<std::size_t> random_chain(std::mt19937_64& rng) const;
  /// Re-picks Einsum `e` and repairs the neighbors until keys match again.
  void repick(std::vector<std::size_t>& choice, std::size_t e, std::mt19937_64& rng) const;
  /// Re-picks later Einsums, starting at `e`, until keys match again.
  void repair_forward(std::vector<std::size_t>& choice, std::size_t e, std::mt19937_64& rng) const;
  bool compatible_chain(const std::vector<std::size_t>& choice) const;

 private:
  std::size_t draw(std::size_t e, int key_in, int key_out, bool match_in, bool match_out, std::mt19937_64& rng) const;

  const CandidatePool& pool_;
  std::vector<std::vector<std::size_t>> viable_;
  bool empty_ = false;
};

/// Accepts improvements always and a worse move with probability exp(-delta / t).
/// A temperature of zero never accepts a worse move.
bool accept_move(double delta, double temperature, std::mt19937_64& rng);

struct RandomParams {
  std::int64_t budget = 1000;
  std::uint64_t seed = 1;
  /// Skip chains already evaluated (up to a bounded number of redraws).
  bool distinct = false;
};

struct AnnealParams {
  std::int64_t budget = 1000;
  std::uint64_t seed = 1;
  /// Empty: objective of the random starting mapping.
  std::optional<double> initial_temperature;
  double cooling_rate = 0.98;
};

struct GeneticParams {
  std::int64_t budget = 1000;
  std::uint64_t seed = 1;
  std::size_t population = 104;
  double crossover_rate = 0.7;
  double mutation_rate = 0.2;
  std::size_t tournament = 2;
  std::size_t elitism = 1;
  std::int64_t seeding_attempts = 100'000;
  std::vector<std::vector<std::size_t>> initial_population;
};

BaselineResult random_search(const CandidatePool& pool, Objective objective, const RandomParams& params);
BaselineResult simulated_annealing(const CandidatePool& pool, Objective objective, const AnnealParams& params);
BaselineResult genetic_algorithm(const CandidatePool& pool, Objective objective, const GeneticParams& params);

/// One-point crossover at Einsum boundary `cut`, repairing keys after the cut.
std::vector<std::size_t> crossover(const ChainSampler& sampler, const std::vector<std::size_t>& a,
                                   const std::vector<std::size_t>& b, std::size_t cut, std::mt19937_64& rng);

}  // namespace fusemap
