#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "interop/stats.hpp"
#include "support.hpp"

namespace stats = interop::stats;
using stats::Proportion;

TEST_CASE("pass@k") {
  CHECK(stats::pass_at_k(10, 3, 1) == doctest::Approx(0.3));
  CHECK(stats::pass_at_k(222, 222, 1) == 1.0);
  CHECK(stats::pass_at_k(222, 0, 1) == 0.0);
  CHECK(stats::pass_at_k(5, 1, 5) == 1.0);
  CHECK(stats::pass_at_k(4, 2, 2) == doctest::Approx(1.0 - 1.0 / 6.0));
  CHECK_THROWS_AS(stats::pass_at_k(5, 6, 1), std::invalid_argument);
  CHECK_THROWS_AS(stats::pass_at_k(5, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(stats::pass_at_k(5, 2, 6), std::invalid_argument);
  CHECK_THROWS_AS(stats::pass_at_k(0, 0, 1), std::invalid_argument);
}

TEST_CASE("pass@k matches subset enumeration") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const int n = std::uniform_int_distribution<int>(1, 16)(rng);
    const int c = std::uniform_int_distribution<int>(0, n)(rng);
    const int k = std::uniform_int_distribution<int>(1, n)(rng);
    CAPTURE(n);
    CAPTURE(c);
    CAPTURE(k);
    CHECK(std::abs(stats::pass_at_k(n, c, k) - testsupport::brute_force_pass_at_k(n, c, k)) <= 1e-12);
  }
}

TEST_CASE("pass@k is monotone in c and k") {
  for (int n = 1; n <= 25; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        const double v = stats::pass_at_k(n, c, k);
        if (c < n) CHECK(stats::pass_at_k(n, c + 1, k) >= v - 1e-15);
        if (k < n) CHECK(stats::pass_at_k(n, c, k + 1) >= v - 1e-15);
      }
    }
  }
}

TEST_CASE("proportion validation") {
  CHECK_THROWS_AS(Proportion(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(Proportion(-1, 5), std::invalid_argument);
  CHECK_THROWS_AS(Proportion(6, 5), std::invalid_argument);
  CHECK(Proportion(2, 8).p() == 0.25);
}

TEST_CASE("corrected two-proportion test against published counts") {
  const auto p = [](long a, long b) { return stats::two_prop_test({a, 666}, {b, 666}).p_value; };
  CHECK(p(664, 663) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p(664, 666) == doctest::Approx(0.4792).epsilon(0.001));
  CHECK(p(663, 666) == doctest::Approx(0.2477).epsilon(0.001));
  CHECK(p(664, 0) < 2.2e-16);
  CHECK(p(596, 608) == doctest::Approx(0.3065).epsilon(0.001));
  CHECK(std::abs(p(596, 620) - 0.02542) < 0.0005);
  CHECK(std::abs(p(596, 501) - 1.41e-11) < 1e-12);
  CHECK(std::abs(p(608, 501) - 7.293e-15) < 1e-15);
  CHECK(std::abs(p(620, 597) - 0.03185) < 0.0005);
}

TEST_CASE("uncorrected test on a textbook case") {
  // 45/100 vs 30/100: pooled 0.375, z = 0.15 / sqrt(0.375*0.625*0.02) = 2.1909
  const auto t = stats::two_prop_test({45, 100}, {30, 100}, false);
  CHECK(t.z == doctest::Approx(2.19089).epsilon(1e-5));
  CHECK(t.p_value == doctest::Approx(0.028460).epsilon(1e-4));
}

TEST_CASE("degenerate pooled proportions") {
  CHECK(stats::two_prop_test({0, 10}, {0, 20}).p_value == 1.0);
  CHECK(stats::two_prop_test({10, 10}, {20, 20}).p_value == 1.0);
  CHECK(stats::two_prop_test({10, 10}, {20, 20}).z == 0.0);
}

TEST_CASE("z-test symmetry and correction ordering") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const long n1 = std::uniform_int_distribution<long>(1, 800)(rng);
    const long n2 = std::uniform_int_distribution<long>(1, 800)(rng);
    const Proportion a(std::uniform_int_distribution<long>(0, n1)(rng), n1);
    const Proportion b(std::uniform_int_distribution<long>(0, n2)(rng), n2);
    const auto ab = stats::two_prop_test(a, b);
    const auto ba = stats::two_prop_test(b, a);
    CHECK(ab.z == doctest::Approx(-ba.z));
    CHECK(ab.p_value == doctest::Approx(ba.p_value));
    CHECK(ab.p_value >= 0.0);
    CHECK(ab.p_value <= 1.0);
    CHECK(ab.p_value >= stats::two_prop_test(a, b, false).p_value - 1e-15);
  }
}

TEST_CASE("cohen's h") {
  CHECK(stats::cohens_h(664.0 / 666, 0.0) == doctest::Approx(3.0319).epsilon(1e-4));
  CHECK(stats::cohens_h(596.0 / 666, 620.0 / 666) == doctest::Approx(-0.12846).epsilon(1e-3));
  CHECK(stats::cohens_h(596.0 / 666, 501.0 / 666) == doctest::Approx(0.38166).epsilon(1e-3));
  CHECK(stats::cohens_h(1.0, 0.0) == doctest::Approx(std::numbers::pi));
  CHECK_THROWS_AS(stats::cohens_h(1.5, 0.2), std::invalid_argument);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double a = u(rng), b = u(rng);
    const double h = stats::cohens_h(a, b);
    CHECK(h == doctest::Approx(-stats::cohens_h(b, a)));
    CHECK(std::abs(h) <= std::numbers::pi);
  }
}

TEST_CASE("power") {
  CHECK(stats::power_two_prop(0.128, 666) == doctest::Approx(0.6465).epsilon(1e-3));
  CHECK(stats::power_two_prop(3.03, 666) == doctest::Approx(1.0));
  CHECK(stats::power_two_prop(0.0, 666) == doctest::Approx(0.05));
  // Textbook: h = 0.2, n = 393 per group gives 80% power at alpha 0.05.
  CHECK(stats::power_two_prop(0.2, 393) == doctest::Approx(0.80).epsilon(0.005));
  double prev = 0.0;
  for (double h = 0.0; h < 1.0; h += 0.05) {
    const double pw = stats::power_two_prop(h, 100);
    CHECK(pw >= prev);
    prev = pw;
  }
  prev = 0.0;
  for (long n = 2; n < 2000; n += 37) {
    const double pw = stats::power_two_prop(0.1, n);
    CHECK(pw >= prev);
    prev = pw;
  }
  CHECK(stats::power_two_prop_unequal(0.3, 100, 100) == doctest::Approx(stats::power_two_prop(0.3, 100)));
  CHECK_THROWS_AS(stats::power_two_prop(0.2, 1), std::invalid_argument);
  CHECK_THROWS_AS(stats::power_two_prop(0.2, 100, 1.5), std::invalid_argument);
}

TEST_CASE("normal helpers") {
  CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959963984540054));
  CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975));
  CHECK(stats::normal_cdf(0.0) == 0.5);
}

TEST_CASE("compare bundles test, effect size and power") {
  const auto r = stats::compare({596, 666}, {501, 666});
  CHECK(r.p_value == doctest::Approx(1.41048e-11).epsilon(1e-3));
  CHECK(r.h == doctest::Approx(0.38166).epsilon(1e-3));
  CHECK(r.power > 0.99);
  CHECK(r.reject_null());
  const auto same = stats::compare({620, 666}, {620, 666});
  CHECK(same.p_value == 1.0);
  CHECK(same.h == 0.0);
  CHECK_FALSE(same.reject_null());
}

TEST_CASE("p-value formatting") {
  CHECK(stats::format_p_value(1e-20) == "< 2.2e-16");
  CHECK(stats::format_p_value(0.0) == "< 2.2e-16");
  CHECK(stats::format_p_value(0.47917) == "0.4792");
  CHECK(stats::format_p_value(1.41048e-11) == "1.41e-11");
  CHECK(stats::format_p_value(1.0) == "1");
}
