#include "fusemap/pareto.hpp"

#include <algorithm>
#include <numeric>

#include "fusemap/errors.hpp"

namespace fusemap {

bool lex_less(const CriteriaVector& a, const CriteriaVector& b) {
  if (a.energy != b.energy) return a.energy < b.energy;
  if (a.latency != b.latency) return a.latency < b.latency;
  return a.reservations < b.reservations;
}

bool dominates(const CriteriaVector& a, const CriteriaVector& b) {
  if (a.tags != b.tags || a.reservations.size() != b.reservations.size()) {
    throw InputError("dominates: criteria vectors with different reservation layouts");
  }
  bool strict = false;
  if (a.energy > b.energy || a.latency > b.latency) return false;
  strict = a.energy < b.energy || a.latency < b.latency;
  for (std::size_t i = 0; i < a.reservations.size(); ++i) {
    if (a.reservations[i] > b.reservations[i]) return false;
    if (a.reservations[i] < b.reservations[i]) strict = true;
  }
  return strict;
}

namespace {

// a <= b in every component.
bool covers(const CriteriaVector& a, const CriteriaVector& b) {
  if (a.energy > b.energy || a.latency > b.latency) return false;
  for (std::size_t i = 0; i < a.reservations.size(); ++i) {
    if (a.reservations[i] > b.reservations[i]) return false;
  }
  return true;
}

}  // namespace

std::vector<std::size_t> frontier(std::span<const CriteriaVector> vs, std::span<const std::uint64_t> ids) {
  if (ids.size() != vs.size()) throw InputError("frontier: one payload id per vector required");
  for (const auto& v : vs) {
    if (v.tags != vs.front().tags || v.reservations.size() != vs.front().reservations.size()) {
      throw InputError("frontier: criteria vectors with different reservation layouts");
    }
  }
  std::vector<std::size_t> order(vs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (lex_less(vs[a], vs[b])) return true;
    if (lex_less(vs[b], vs[a])) return false;
    return ids[a] < ids[b];
  });
  // In lexicographic order no later vector can dominate an earlier one, so
  // each vector only needs checking against those already kept.
  std::vector<std::size_t> kept;
  if (!vs.empty() && vs.front().reservations.empty()) {
    const Rational* best_latency = nullptr;
    for (auto i : order) {
      if (best_latency != nullptr && !(vs[i].latency < *best_latency)) continue;
      kept.push_back(i);
      best_latency = &vs[i].latency;
    }
    return kept;
  }
  for (auto i : order) {
    bool covered = false;
    for (auto k : kept) {
      if (covers(vs[k], vs[i])) {
        covered = true;
        break;
      }
    }
    if (!covered) kept.push_back(i);
  }
  return kept;
}

}  // namespace fusemap
