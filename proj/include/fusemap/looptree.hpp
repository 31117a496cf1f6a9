#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fusemap/arch.hpp"
#include "fusemap/workload.hpp"

namespace fusemap {

struct Loop {
  std::string var;
  std::int64_t trip = 1;

  friend auto operator<=>(const Loop&, const Loop&) = default;
};

/// A storage node on one Einsum's root-to-leaf path. `slot` is the number of
/// loops of that path above the node.
struct Storage {
  std::size_t slot = 0;
  std::size_t level = 0;
  std::string tensor;

  friend auto operator<=>(const Storage&, const Storage&) = default;
};

/// Root-to-leaf view of a single Einsum: its loop nest and where each of its
/// tensors is kept. Storage is kept sorted by (slot, level, tensor).
struct EinsumPath {
  std::size_t einsum = 0;
  std::vector<Loop> loops;
  std::vector<Storage> storage;

  void canonicalize();
  /// Outermost storage node of a tensor, if it is stored at all.
  const Storage* backing(std::string_view tensor) const;
  const Storage* find(std::string_view tensor, std::size_t level) const;

  friend bool operator==(const EinsumPath&, const EinsumPath&) = default;
  friend auto operator<=>(const EinsumPath&, const EinsumPath&) = default;
};

/// Residual extent of each rank variable of `tensor` under `loops_above`.
std::map<std::string, std::int64_t> tile_shape(const Workload& w, std::span<const Loop> loops_above,
                                               const Tensor& tensor);
std::int64_t tile_elements(const Workload& w, std::span<const Loop> loops_above, const Tensor& tensor);

/// Throws InputError when the path breaks a structural rule: non-divisor
/// tiling, storage at an unknown level, a tensor missing from the outermost
/// level, a duplicate (tensor, level) node, inner levels above outer ones.
void validate_path(const Workload& w, const ArchSpec& arch, const EinsumPath& path);

struct LoopNode {
  std::string var;
  std::int64_t trip = 1;
  friend bool operator==(const LoopNode&, const LoopNode&) = default;
};
struct StorageNode {
  std::size_t level = 0;
  std::string tensor;
  friend bool operator==(const StorageNode&, const StorageNode&) = default;
};
struct ComputeNode {
  std::size_t einsum = 0;
  friend bool operator==(const ComputeNode&, const ComputeNode&) = default;
};
struct SplitNode {
  friend bool operator==(const SplitNode&, const SplitNode&) = default;
};

/// LoopTree node. Loop and storage nodes have one child, splits two or more,
/// compute nodes none.
struct Node {
  std::variant<LoopNode, StorageNode, ComputeNode, SplitNode> kind;
  std::vector<Node> children;

  friend bool operator==(const Node&, const Node&) = default;
};

/// A mapping of consecutive Einsums [first, first + paths.size()). The loops
/// above the backing node of the tensor shared by paths[i] and paths[i+1]
/// are common to both; split_depths[i] is their count (0 when nothing is
/// shared). The tree places a split directly below that backing node.
struct Pmapping {
  std::vector<EinsumPath> paths;
  std::vector<std::size_t> split_depths;

  static Pmapping single(EinsumPath path);
  std::size_t first_einsum() const { return paths.front().einsum; }
  std::size_t last_einsum() const { return paths.back().einsum; }

  friend bool operator==(const Pmapping&, const Pmapping&) = default;
};

/// Appends `right` (one Einsum) to `left`. Throws IncompatibleJoin when the
/// producer and consumer views of the shared tensor differ.
Pmapping join(const Workload& w, const Pmapping& left, const Pmapping& right);

/// Canonical LoopTree of a pmapping.
Node build_tree(const Workload& w, const Pmapping& p);

/// Inverse of build_tree: recovers the per-Einsum paths and split depths.
Pmapping decompose_tree(const Workload& w, const Node& tree);

/// Single-Einsum fragments of a tree, ready to be re-joined left to right.
std::vector<Pmapping> decompose(const Workload& w, const Node& tree);

/// Indented, one node per line.
std::string render(const Workload& w, const ArchSpec& arch, const Node& tree);

/// Einsums under a node, in left-to-right order.
std::vector<std::size_t> leaves(const Node& tree);

}  // namespace fusemap
