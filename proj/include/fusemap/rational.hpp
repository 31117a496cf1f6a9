#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

#include <json.hpp>

namespace fusemap {

/// Exact rational arithmetic for energies, latencies and bandwidths.
using Rational = mpq_class;

/// Parses "3", "-2.5", "1.05e9", "12280/21" exactly. Throws InputError.
Rational parse_rational(std::string_view text);

/// Accepts JSON integers, floats (via their shortest decimal text) and strings.
Rational rational_from_json(const nlohmann::json& value);

/// Canonical "p" or "p/q" form.
std::string to_string(const Rational& value);

double to_double(const Rational& value);

}  // namespace fusemap
