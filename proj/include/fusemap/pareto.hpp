#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fusemap/rational.hpp"

namespace fusemap {

/// Objective components plus flattened reservation sizes. `tags` identifies
/// the layout of `reservations`; only vectors with equal tags are comparable.
struct CriteriaVector {
  Rational energy;
  Rational latency;
  std::uint64_t tags = 0;
  std::vector<std::int64_t> reservations;

  friend bool operator==(const CriteriaVector&, const CriteriaVector&) = default;
};

/// Lexicographic order over (energy, latency, reservations).
bool lex_less(const CriteriaVector& a, const CriteriaVector& b);

/// a <= b everywhere and a < b somewhere. Throws InputError on differing tags.
bool dominates(const CriteriaVector& a, const CriteriaVector& b);

/// Indices of the non-dominated vectors, sorted by (vector, payload id). Of
/// several identical vectors only the one with the smallest id is kept.
std::vector<std::size_t> frontier(std::span<const CriteriaVector> vs, std::span<const std::uint64_t> ids);

}  // namespace fusemap
