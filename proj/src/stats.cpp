#include "interop/stats.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace interop::stats {

Proportion::Proportion(std::int64_t successes, std::int64_t trials) : c(successes), n(trials) {
  if (n < 1) throw std::invalid_argument("proportion needs n >= 1");
  if (c < 0 || c > n) throw std::invalid_argument("proportion needs 0 <= c <= n");
}

double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k) {
  if (n < 1 || c < 0 || c > n) throw std::invalid_argument("pass@k needs 0 <= c <= n, n >= 1");
  if (k < 1 || k > n) throw std::invalid_argument("pass@k needs 1 <= k <= n");
  if (k == 1) return static_cast<double>(c) / static_cast<double>(n);
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (std::int64_t i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  return 1.0 - miss;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  static const boost::math::normal standard;
  return boost::math::quantile(standard, p);
}

ZTest two_prop_test(const Proportion& a, const Proportion& b, bool corrected) {
  const double n1 = static_cast<double>(a.n);
  const double n2 = static_cast<double>(b.n);
  const double pooled = static_cast<double>(a.c + b.c) / (n1 + n2);
  if (pooled <= 0.0 || pooled >= 1.0) return {};

  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
  const double diff = a.p() - b.p();
  double gap = std::abs(diff);
  if (corrected) gap = std::max(0.0, gap - 0.5 * (1.0 / n1 + 1.0 / n2));
  const double z = std::copysign(gap, diff) / se;
  // Upper tail via erfc keeps precision far out in the tail.
  const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  return {gap == 0.0 ? 0.0 : z, std::min(1.0, p)};
}

double cohens_h(double p1, double p2) {
  if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0)) {
    throw std::invalid_argument("cohen's h needs proportions in [0, 1]");
  }
  return 2.0 * std::asin(std::sqrt(p1)) - 2.0 * std::asin(std::sqrt(p2));
}

double power_two_prop(double h, std::int64_t n_per_group, double alpha) {
  if (n_per_group < 2) throw std::invalid_argument("power needs n >= 2 per group");
  return power_two_prop_unequal(h, n_per_group, n_per_group, alpha);
}

double power_two_prop_unequal(double h, std::int64_t n1, std::int64_t n2, double alpha) {
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("power needs non-empty groups");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  const double crit = normal_quantile(1.0 - alpha / 2.0);
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  const double shift = std::abs(h) * std::sqrt(a * b / (a + b));
  return normal_cdf(shift - crit) + normal_cdf(-shift - crit);
}

ComparisonResult compare(const Proportion& a, const Proportion& b, double alpha, bool corrected) {
  ComparisonResult r;
  const auto t = two_prop_test(a, b, corrected);
  r.z = t.z;
  r.p_value = t.p_value;
  r.h = cohens_h(a.p(), b.p());
  r.power = power_two_prop_unequal(r.h, a.n, b.n, alpha);
  r.alpha = alpha;
  r.corrected = corrected;
  return r;
}

std::string format_p_value(double p) {
  if (p < 2.2e-16) return "< 2.2e-16";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", p);
  return buf;
}

}  // namespace interop::stats
