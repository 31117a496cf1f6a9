#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fusemap/arch.hpp"
#include "fusemap/looptree.hpp"
#include "fusemap/workload.hpp"

namespace fusemap {

enum class Direction { producer, consumer };

/// How a pmapping exchanges a shared tensor: backing level and the loops above
/// the backing node, outermost first.
struct CompatKey {
  std::string tensor;
  std::size_t level = 0;
  std::vector<Loop> loops_above;
  Direction direction = Direction::producer;

  std::size_t depth() const { return loops_above.size(); }

  friend auto operator<=>(const CompatKey&, const CompatKey&) = default;
};

/// Throws InputError if the path does not store `shared`.
CompatKey compat_key_producer(const EinsumPath& path, std::string_view shared);
CompatKey compat_key_consumer(const EinsumPath& path, std::string_view shared);

/// Same tensor, backing level and loops; opposite directions.
bool compatible(const CompatKey& a, const CompatKey& b);

/// Key for the tensor this Einsum reads from its predecessor, if any.
std::optional<CompatKey> input_key(const Workload& w, const EinsumPath& path);
/// Key for the tensor this Einsum hands to its successor, if any.
std::optional<CompatKey> output_key(const Workload& w, const EinsumPath& path);

/// Same key with the direction cleared, so producer and consumer views of a
/// matching exchange compare equal.
CompatKey undirected(CompatKey key);

/// Partition of `keys` (by undirected value) into index lists, in key order.
std::map<CompatKey, std::vector<std::size_t>> group_by_key(std::span<const CompatKey> keys);

/// "A@GLB[nA:4]" style text; "none" for an absent key.
std::string render_key(const ArchSpec& arch, const std::optional<CompatKey>& key);

}  // namespace fusemap
