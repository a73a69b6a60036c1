#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.
// None of them goes through the library's Decimal or stats code.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

namespace testsupport {

namespace fs = std::filesystem;

// ---- decimal strings ------------------------------------------------------

// Plain decimal text ("-12.5", "0.001", "7") with optional exponent, split
// into sign, digit string and number of fraction digits.
struct Digits {
  bool negative = false;
  std::string digits;  // no sign, no point
  int scale = 0;       // value = digits * 10^-scale
};

inline Digits split_decimal(const std::string& text) {
  Digits d;
  std::size_t i = 0;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) d.negative = text[i++] == '-';
  long long exp = 0;
  bool frac = false;
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch >= '0' && ch <= '9') {
      d.digits.push_back(ch);
      if (frac) ++d.scale;
    } else if (ch == '.') {
      frac = true;
    } else if (ch == 'e' || ch == 'E') {
      exp = std::stoll(text.substr(i + 1));
      break;
    } else {
      throw std::invalid_argument("not a decimal: " + text);
    }
  }
  if (d.digits.empty()) throw std::invalid_argument("not a decimal: " + text);
  d.scale -= static_cast<int>(exp);
  if (d.scale < 0) {
    d.digits.append(static_cast<std::size_t>(-d.scale), '0');
    d.scale = 0;
  }
  return d;
}

// Canonical plain spelling: no leading zeros, no trailing fraction zeros,
// "0" for zero.
inline std::string normalize_decimal(const std::string& text) {
  Digits d = split_decimal(text);
  while (d.scale > 0 && d.digits.size() > 1 && d.digits.back() == '0') {
    d.digits.pop_back();
    --d.scale;
  }
  if (d.scale > 0 && d.digits == "0") d.scale = 0;
  if (static_cast<int>(d.digits.size()) <= d.scale) {
    d.digits.insert(0, static_cast<std::size_t>(d.scale) - d.digits.size() + 1, '0');
  }
  std::string ip = d.digits.substr(0, d.digits.size() - static_cast<std::size_t>(d.scale));
  std::string fp = d.digits.substr(d.digits.size() - static_cast<std::size_t>(d.scale));
  ip.erase(0, std::min(ip.find_first_not_of('0'), ip.size() - 1));
  if (fp.size() == 1 && fp == "0") fp.clear();
  const bool zero = ip == "0" && fp.find_first_not_of('0') == std::string::npos;
  std::string out = (d.negative && !zero) ? "-" : "";
  out += ip;
  if (!fp.empty()) out += "." + fp;
  return out;
}

// Long multiplication on digit strings, result normalized.
inline std::string schoolbook_multiply(const std::string& a, const std::string& b) {
  const Digits x = split_decimal(a);
  const Digits y = split_decimal(b);
  std::vector<int> acc(x.digits.size() + y.digits.size(), 0);
  for (std::size_t i = x.digits.size(); i-- > 0;) {
    for (std::size_t j = y.digits.size(); j-- > 0;) {
      acc[i + j + 1] += (x.digits[i] - '0') * (y.digits[j] - '0');
    }
  }
  for (std::size_t k = acc.size(); k-- > 1;) {
    acc[k - 1] += acc[k] / 10;
    acc[k] %= 10;
  }
  std::string digits;
  for (const int v : acc) digits.push_back(static_cast<char>('0' + v));
  const int scale = x.scale + y.scale;
  std::string text = (x.negative != y.negative) ? "-" : "";
  text += digits.substr(0, digits.size() - static_cast<std::size_t>(scale));
  if (scale > 0) text += "." + digits.substr(digits.size() - static_cast<std::size_t>(scale));
  return normalize_decimal(text);
}

// Adds one unit in the last written digit: "1.25" -> "1.26", "-0.9" -> "-1.0".
// Magnitude grows, so the edit is always a real change.
inline std::string bump_last_digit(const std::string& text) {
  std::string out = text;
  std::size_t end = out.find_first_of("eE");
  if (end == std::string::npos) end = out.size();
  std::size_t i = end;
  while (i-- > 0) {
    if (out[i] == '.') continue;
    if (out[i] == '-' || out[i] == '+') break;
    if (out[i] == '9') {
      out[i] = '0';
      continue;
    }
    ++out[i];
    return out;
  }
  out.insert(i + 1, "1");
  return out;
}

// Decimal value of one unit in the last written digit of a plain number.
inline std::string last_digit_unit(const std::string& text) {
  const auto point = text.find('.');
  if (point == std::string::npos) return "1";
  const std::size_t frac = text.size() - point - 1;
  return "0." + std::string(frac - 1, '0') + "1";
}

// Spellings of the same value: extra fraction zeros, exponent forms.
inline std::vector<std::string> equivalent_spellings(const std::string& plain) {
  std::vector<std::string> out;
  const auto point = plain.find('.');
  const std::string sign = plain[0] == '-' ? "-" : "";
  const std::string body = sign.empty() ? plain : plain.substr(1);
  if (body == "0") {
    out = {plain + ".0", plain + "e0", plain + "E7", plain + ".000e-3"};
  } else if (point == std::string::npos) {
    out.push_back(plain + ".0");
    out.push_back(plain + "e0");
    out.push_back(plain + "0e-1");
    out.push_back(plain + "00E-2");
  } else {
    out.push_back(plain + "0");
    out.push_back(plain + "000");
    const auto bpoint = body.find('.');
    std::string digits = body.substr(0, bpoint) + body.substr(bpoint + 1);
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    const std::size_t frac = body.size() - bpoint - 1;
    out.push_back(sign + digits + "e-" + std::to_string(frac));
    if (digits != "0") out.push_back(sign + digits + "0E-" + std::to_string(frac + 1));
  }
  return out;
}

// ---- pass@k brute force ---------------------------------------------------

// Share of the k-subsets of n samples (the first c correct) holding at least
// one correct sample, by visiting every subset (Gosper's hack).
inline double brute_force_pass_at_k(int n, int c, int k) {
  if (k == 0 || k > n || n > 62) throw std::invalid_argument("bad brute-force arguments");
  const std::uint64_t correct = c == 0 ? 0 : ((std::uint64_t{1} << c) - 1);
  const std::uint64_t limit = std::uint64_t{1} << n;
  std::uint64_t mask = (std::uint64_t{1} << k) - 1;
  std::uint64_t hits = 0, total = 0;
  while (mask < limit) {
    ++total;
    if ((mask & correct) != 0) ++hits;
    const std::uint64_t low = mask & (~mask + 1);
    const std::uint64_t ripple = mask + low;
    mask = ripple | (((ripple ^ mask) >> 2) / low);
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

// ---- unit conversions -----------------------------------------------------

// The flawed pipeline the v4 negative corpus reproduces: hectares read into
// a binary double and divided by the acre area in square metres.
inline std::string double_converted_acres(const std::string& hectares) {
  const double ha = std::stod(hectares);
  const double acres = ha * 10000.0 / 4046.8564224;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), acres);
  return std::string(buf, res.ptr);
}

// ---- binomial -------------------------------------------------------------

// Central (1 - level) acceptance region for Binomial(n, p): smallest lo and
// largest hi with P(X < lo) <= level/2 and P(X > hi) <= level/2.
inline std::pair<long, long> binomial_region(long n, double p, double level) {
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
  long lo = 0;
  while (lo < n && boost::math::cdf(dist, static_cast<double>(lo)) <= level / 2) ++lo;
  long hi = n;
  while (hi > 0 && boost::math::cdf(boost::math::complement(dist, static_cast<double>(hi - 1))) <= level / 2) --hi;
  return {lo, hi};
}

// ---- files ----------------------------------------------------------------

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

// Unique scratch directory removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag = "interop-test") {
    std::random_device rd;
    for (int attempt = 0; attempt < 100; ++attempt) {
      path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rd()));
      if (fs::create_directory(path_)) return;
    }
    throw std::runtime_error("cannot create scratch directory");
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

}  // namespace testsupport
