#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "fusemap/workload.hpp"

namespace fusemap {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNoFeasible = 2;

/// The (N; K) rotation of the scaling workload, scaled down by 2048.
std::vector<std::pair<std::int64_t, std::int64_t>> scaled_chain_pattern();

/// Entry point of the `fusemap` tool. Reports go to --out or `out`,
/// diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fusemap
