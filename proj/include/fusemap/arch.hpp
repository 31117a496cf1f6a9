#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fusemap/rational.hpp"

namespace fusemap {

struct MemLevel {
  std::string name;
  /// Empty for the unbounded outermost level.
  std::optional<std::int64_t> capacity_bytes;
  Rational bandwidth_bytes_per_cycle;
  Rational energy_per_byte;

  bool operator==(const MemLevel&) const = default;
};

/// Memory hierarchy (outermost first) plus compute parameters.
struct ArchSpec {
  std::vector<MemLevel> levels;
  Rational mac_energy;
  std::int64_t parallelism = 1;
  Rational frequency_hz;
  std::int64_t datum_bytes = 1;

  std::size_t level_index(std::string_view name) const;
  std::size_t num_levels() const { return levels.size(); }

  static ArchSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  bool operator==(const ArchSpec&) const = default;
};

ArchSpec load_arch(std::string_view document);

/// DRAM + 128 MiB global buffer, 4 cores of 128x128 MACs at 1.05 GHz.
ArchSpec tpu_v4i_like();

}  // namespace fusemap
