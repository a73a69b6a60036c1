#pragma once

#include <cstdint>
#include <string>

namespace interop::stats {

// c successes out of n trials.
struct Proportion {
  std::int64_t c = 0;
  std::int64_t n = 1;

  Proportion() = default;
  // Throws std::invalid_argument unless 0 <= c <= n and n >= 1.
  Proportion(std::int64_t successes, std::int64_t trials);

  double p() const { return static_cast<double>(c) / static_cast<double>(n); }
};

// Unbiased pass@k estimator 1 - C(n-c, k) / C(n, k), via the product
// 1 - prod_{i=n-c+1}^{n} (1 - k/i). Exactly c/n for k = 1.
// Throws std::invalid_argument on 0 <= c <= n, 1 <= k <= n violations.
double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k);

struct ZTest {
  double z = 0.0;
  double p_value = 1.0;
};

// Pooled two-proportion z-test, two-sided. With the continuity correction
// the gap |p1 - p2| shrinks by (1/n1 + 1/n2) / 2, floored at zero. A pooled
// proportion of 0 or 1 gives z = 0, p = 1.
ZTest two_prop_test(const Proportion& a, const Proportion& b, bool corrected = true);

// 2 asin(sqrt(p1)) - 2 asin(sqrt(p2)).
double cohens_h(double p1, double p2);

// Two-sided power of the two-proportion test for effect size h with
// n_per_group observations in each group.
double power_two_prop(double h, std::int64_t n_per_group, double alpha = 0.05);
// Unequal groups: the shift becomes |h| sqrt(n1 n2 / (n1 + n2)).
double power_two_prop_unequal(double h, std::int64_t n1, std::int64_t n2, double alpha = 0.05);

double normal_cdf(double x);
double normal_quantile(double p);

struct ComparisonResult {
  double z = 0.0;
  double p_value = 1.0;
  double h = 0.0;
  double power = 0.0;
  double alpha = 0.05;
  bool corrected = true;

  bool reject_null() const { return p_value < alpha; }
};

// Test, effect size and power for two pooled proportions.
ComparisonResult compare(const Proportion& a, const Proportion& b, double alpha = 0.05, bool corrected = true);

// R-style p-value text: "< 2.2e-16" below machine epsilon, else 4
// significant digits.
std::string format_p_value(double p);

}  // namespace interop::stats
