#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace interop {

// Exact base-10 number that remembers the digit string it was parsed from.
//
// Value semantics (equality, ordering, arithmetic) ignore the spelling, so
// "0.10", "0.1" and "1e-1" compare equal, while text() reproduces the source
// token byte for byte. Results of arithmetic get a plain-notation spelling.
//
// Exponents are limited to +/-100000 to keep alignment bounded.
class Decimal {
 public:
  using Coefficient = boost::multiprecision::cpp_int;

  Decimal() : text_("0") {}

  // Accepts the JSON number grammar. Throws std::invalid_argument otherwise.
  static Decimal parse(std::string_view text);
  static std::optional<Decimal> try_parse(std::string_view text);

  // Shortest round-trip spelling of a binary double.
  static Decimal from_double(double value);

  static Decimal from_parts(Coefficient coefficient, std::int64_t exponent);

  const std::string& text() const { return text_; }
  int sign() const { return coefficient_.sign(); }
  bool is_zero() const { return coefficient_.is_zero(); }

  // Normalized representation: value = coefficient * 10^exponent, with no
  // trailing zeros in the coefficient (zero is 0 * 10^0).
  const Coefficient& coefficient() const { return coefficient_; }
  std::int64_t exponent() const { return exponent_; }

  double to_double() const;

  Decimal abs() const;
  Decimal operator-() const;

  friend Decimal operator*(const Decimal& a, const Decimal& b);
  friend Decimal operator+(const Decimal& a, const Decimal& b);
  friend Decimal operator-(const Decimal& a, const Decimal& b);

  friend bool operator==(const Decimal& a, const Decimal& b);
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

 private:
  void normalize();
  static std::string format_plain(const Coefficient& coefficient, std::int64_t exponent);

  Coefficient coefficient_{0};
  std::int64_t exponent_ = 0;
  std::string text_;
};

}  // namespace interop
