#include "fusemap/rational.hpp"

#include <cctype>
#include <cstdlib>

#include "fusemap/errors.hpp"

namespace fusemap {

namespace {

Rational pow10(long exponent) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  if (exponent >= 0) return Rational(p);
  Rational r(mpz_class(1), p);
  r.canonicalize();
  return r;
}

Rational parse_decimal(std::string_view text, std::string_view whole) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  std::string digits;
  long fraction_digits = 0;
  bool seen_point = false;
  bool seen_digit = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) ++fraction_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw InputError("not a number: '" + std::string(whole) + "'");
  long exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    const std::string rest(text.substr(i));
    char* end = nullptr;
    exponent = std::strtol(rest.c_str(), &end, 10);
    if (end == rest.c_str() || *end != '\0') {
      throw InputError("bad exponent in number: '" + std::string(whole) + "'");
    }
    i = text.size();
  }
  if (i != text.size()) throw InputError("trailing characters in number: '" + std::string(whole) + "'");
  Rational value(mpz_class(digits, 10));
  value *= pow10(exponent - fraction_digits);
  if (negative) value = -value;
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view t = trim(text);
  if (const auto slash = t.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_decimal(trim(t.substr(0, slash)), text);
    const Rational den = parse_decimal(trim(t.substr(slash + 1)), text);
    if (den == 0) throw InputError("zero denominator: '" + std::string(text) + "'");
    Rational r = num / den;
    return r;
  }
  return parse_decimal(t, text);
}

Rational rational_from_json(const nlohmann::json& value) {
  if (value.is_number_integer()) {
    return Rational(mpz_class(value.dump(), 10));
  }
  if (value.is_number_float()) return parse_rational(value.dump());
  if (value.is_string()) return parse_rational(value.get<std::string>());
  throw InputError("expected a number, got " + value.dump());
}

std::string to_string(const Rational& value) { return value.get_str(); }

double to_double(const Rational& value) { return value.get_d(); }

}  // namespace fusemap
