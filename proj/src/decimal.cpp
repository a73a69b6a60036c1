#include "interop/decimal.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <system_error>

namespace interop {

namespace {

constexpr std::int64_t kMaxExponent = 100000;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

Decimal::Coefficient pow10(std::int64_t n) {
  return boost::multiprecision::pow(Decimal::Coefficient(10), static_cast<unsigned>(n));
}

std::int64_t digit_count(const Decimal::Coefficient& c) {
  if (c.is_zero()) return 1;
  std::string s = Decimal::Coefficient(boost::multiprecision::abs(c)).str();
  return static_cast<std::int64_t>(s.size());
}

// Scales both operands to the smaller exponent.
std::pair<Decimal::Coefficient, Decimal::Coefficient> align(const Decimal& a, const Decimal& b,
                                                            std::int64_t& exponent) {
  exponent = std::min(a.exponent(), b.exponent());
  Decimal::Coefficient ca = a.coefficient() * pow10(a.exponent() - exponent);
  Decimal::Coefficient cb = b.coefficient() * pow10(b.exponent() - exponent);
  return {std::move(ca), std::move(cb)};
}

}  // namespace

std::optional<Decimal> Decimal::try_parse(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  bool negative = false;
  if (i < n && text[i] == '-') {
    negative = true;
    ++i;
  }
  if (i >= n || !is_digit(text[i])) return std::nullopt;

  std::string digits;
  if (text[i] == '0') {
    ++i;
    if (i < n && is_digit(text[i])) return std::nullopt;  // leading zero
  } else {
    while (i < n && is_digit(text[i])) digits.push_back(text[i++]);
  }

  std::int64_t exponent = 0;
  if (i < n && text[i] == '.') {
    ++i;
    if (i >= n || !is_digit(text[i])) return std::nullopt;
    while (i < n && is_digit(text[i])) {
      digits.push_back(text[i++]);
      --exponent;
    }
  }
  if (i < n && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool exp_negative = false;
    if (i < n && (text[i] == '+' || text[i] == '-')) exp_negative = text[i++] == '-';
    if (i >= n || !is_digit(text[i])) return std::nullopt;
    std::int64_t e = 0;
    while (i < n && is_digit(text[i])) {
      e = e * 10 + (text[i++] - '0');
      if (e > 10 * kMaxExponent) return std::nullopt;
    }
    exponent += exp_negative ? -e : e;
  }
  if (i != n) return std::nullopt;

  const auto first = digits.find_first_not_of('0');
  digits = first == std::string::npos ? std::string{} : digits.substr(first);

  Decimal d;
  d.coefficient_ = digits.empty() ? Coefficient(0) : Coefficient(digits);
  if (negative) d.coefficient_ = -d.coefficient_;
  d.exponent_ = exponent;
  d.normalize();
  if (d.exponent_ > kMaxExponent || d.exponent_ < -kMaxExponent) return std::nullopt;
  d.text_ = std::string(text);
  return d;
}

Decimal Decimal::parse(std::string_view text) {
  auto d = try_parse(text);
  if (!d) throw std::invalid_argument("not a decimal number: '" + std::string(text) + "'");
  return *std::move(d);
}

Decimal Decimal::from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite double has no decimal form");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::invalid_argument("to_chars failed");
  return parse(std::string_view(buf, static_cast<std::size_t>(end - buf)));
}

Decimal Decimal::from_parts(Coefficient coefficient, std::int64_t exponent) {
  Decimal d;
  d.coefficient_ = std::move(coefficient);
  d.exponent_ = exponent;
  d.normalize();
  d.text_ = format_plain(d.coefficient_, d.exponent_);
  return d;
}

void Decimal::normalize() {
  if (coefficient_.is_zero()) {
    exponent_ = 0;
    return;
  }
  while (true) {
    Coefficient q, r;
    boost::multiprecision::divide_qr(coefficient_, Coefficient(10), q, r);
    if (!r.is_zero()) break;
    coefficient_ = std::move(q);
    ++exponent_;
  }
}

std::string Decimal::format_plain(const Coefficient& coefficient, std::int64_t exponent) {
  if (coefficient.is_zero()) return "0";
  std::string sign = coefficient.sign() < 0 ? "-" : "";
  std::string s = Coefficient(boost::multiprecision::abs(coefficient)).str();
  const auto len = static_cast<std::int64_t>(s.size());

  auto scientific = [&] {
    std::string out = sign + s.substr(0, 1);
    if (len > 1) out += "." + s.substr(1);
    const std::int64_t adjusted = exponent + len - 1;
    out += adjusted < 0 ? "e-" : "e+";
    out += std::to_string(adjusted < 0 ? -adjusted : adjusted);
    return out;
  };

  if (exponent >= 0) {
    if (exponent > 30) return scientific();
    return sign + s + std::string(static_cast<std::size_t>(exponent), '0');
  }
  const std::int64_t frac = -exponent;
  if (frac < len) {
    return sign + s.substr(0, static_cast<std::size_t>(len - frac)) + "." +
           s.substr(static_cast<std::size_t>(len - frac));
  }
  if (frac - len > 60) return scientific();
  return sign + "0." + std::string(static_cast<std::size_t>(frac - len), '0') + s;
}

double Decimal::to_double() const { return std::strtod(text_.c_str(), nullptr); }

Decimal Decimal::abs() const { return sign() < 0 ? -*this : *this; }

Decimal Decimal::operator-() const { return from_parts(-coefficient_, exponent_); }

Decimal operator*(const Decimal& a, const Decimal& b) {
  return Decimal::from_parts(a.coefficient_ * b.coefficient_, a.exponent_ + b.exponent_);
}

Decimal operator+(const Decimal& a, const Decimal& b) {
  std::int64_t e = 0;
  auto [ca, cb] = align(a, b, e);
  return Decimal::from_parts(ca + cb, e);
}

Decimal operator-(const Decimal& a, const Decimal& b) {
  std::int64_t e = 0;
  auto [ca, cb] = align(a, b, e);
  return Decimal::from_parts(ca - cb, e);
}

bool operator==(const Decimal& a, const Decimal& b) {
  return a.exponent_ == b.exponent_ && a.coefficient_ == b.coefficient_;
}

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
  const int sa = a.sign();
  const int sb = b.sign();
  if (sa != sb) return sa <=> sb;
  if (sa == 0) return std::strong_ordering::equal;

  // Same sign: compare magnitudes by adjusted exponent first.
  const std::int64_t adj_a = a.exponent_ + digit_count(a.coefficient_);
  const std::int64_t adj_b = b.exponent_ + digit_count(b.coefficient_);
  std::strong_ordering magnitude = adj_a <=> adj_b;
  if (magnitude == std::strong_ordering::equal) {
    std::int64_t e = 0;
    auto [ca, cb] = align(a, b, e);
    ca = boost::multiprecision::abs(ca);
    cb = boost::multiprecision::abs(cb);
    magnitude = ca < cb ? std::strong_ordering::less
                        : (cb < ca ? std::strong_ordering::greater : std::strong_ordering::equal);
  }
  if (sa > 0) return magnitude;
  return 0 <=> magnitude;
}

}  // namespace interop
