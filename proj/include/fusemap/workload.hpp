#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace fusemap {

enum class TensorRole { input, intermediate, output };

std::string_view to_string(TensorRole role);

struct Rank {
  std::string name;
  std::int64_t extent = 1;
};

/// A tensor indexed by rank variables. `vars[j]` indexes rank `ranks[j]`.
struct Tensor {
  std::string name;
  std::vector<std::string> ranks;
  std::vector<std::string> vars;
  TensorRole role = TensorRole::input;

  bool indexed_by(std::string_view var) const;
};

struct Einsum {
  std::string name;
  std::string output;
  std::vector<std::string> inputs;
  /// Rank variables in order of first appearance (output first, then inputs).
  std::vector<std::string> vars;

  /// Output followed by inputs.
  std::vector<std::string> tensors() const;
  bool uses(std::string_view tensor) const;
  bool has_var(std::string_view var) const;
};

/// A validated, dependency-ordered cascade of Einsums. Immutable once built.
class Workload {
 public:
  static Workload from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  std::span<const Einsum> einsums() const { return einsums_; }
  const Einsum& einsum(std::size_t index) const { return einsums_.at(index); }
  std::size_t size() const { return einsums_.size(); }
  std::size_t index_of(std::string_view einsum) const;

  std::span<const Tensor> tensors() const { return tensors_; }
  const Tensor& tensor(std::string_view name) const;
  bool has_tensor(std::string_view name) const;

  std::span<const Rank> ranks() const { return ranks_; }
  std::int64_t var_extent(std::string_view var) const;

  /// Number of elements of a tensor.
  std::int64_t tensor_elements(std::string_view name) const;

  /// Product of the extents of every rank variable of an Einsum.
  std::int64_t operation_count(std::size_t einsum) const;

  /// The intermediate produced by `prev` and consumed by `next`, if any.
  /// Throws InputError for prev == next or several shared intermediates.
  std::optional<std::string> shared_tensor(std::size_t prev, std::size_t next) const;

  /// Shared intermediate between Einsum i and i+1 (none past the end).
  const std::optional<std::string>& boundary_tensor(std::size_t i) const;

 private:
  std::vector<Rank> ranks_;
  std::map<std::string, std::int64_t, std::less<>> var_extent_;
  std::vector<Tensor> tensors_;
  std::vector<Einsum> einsums_;
  std::vector<std::optional<std::string>> boundary_;
};

Workload load_workload(std::string_view document);

/// Chain of matrix multiplications Z_i[m, n_i] = Z_{i-1}[m, n_{i-1}] * W_i[n_{i-1}, n_i].
/// `nk_pattern` holds (N; K) pairs and rotates; each K must equal the previous N.
Workload make_chain(int num_einsums, std::int64_t m,
                    std::span<const std::pair<std::int64_t, std::int64_t>> nk_pattern);

}  // namespace fusemap
