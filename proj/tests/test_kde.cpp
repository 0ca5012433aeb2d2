#include "bootlin/errors.hpp"
#include "bootlin/kde.hpp"
#include "bootlin/prng.hpp"
#include "bootlin/quadrature.hpp"
#include "bootlin/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace bootlin;

namespace {

Sample
normal_sample(std::uint64_t seed, std::uint32_t purpose, std::size_t n)
{
  RngStream root(seed);
  RngStream s = root.derive(purpose);
  return Sample(s.standard_normal(n));
}

} // namespace

TEST_CASE("sample validation")
{
  CHECK_THROWS_AS(Sample(std::vector<double>{}), domain_error);
  CHECK_THROWS_AS(Sample({ 1.0, std::nan("") }), domain_error);
  const Sample s({ 3.0, -1.0, 2.0 });
  CHECK(s.min() == -1.0);
  CHECK(s.max() == 3.0);
  CHECK(s.size() == 3);
}

TEST_CASE("bandwidth rules: fixed and undersmoothed")
{
  const Sample s({ 1.0, 2.0, 5.0 });
  CHECK(select_bandwidth(BandwidthRule::fixed(0.3), s) == doctest::Approx(0.3));

  // 1024^0.1 = 2 exactly, so the undersmoothed bandwidth halves
  RngStream root(0);
  RngStream t = root.derive(1);
  const Sample big(t.standard_normal(1024));
  const auto rule = BandwidthRule::undersmoothed(BandwidthRule::fixed(0.5), 0.1);
  CHECK(select_bandwidth(rule, big) == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(BandwidthRule::fixed(-1.0), domain_error);
  CHECK_THROWS_AS(BandwidthRule::undersmoothed(BandwidthRule::silverman(), 0.0),
                  domain_error);
}

TEST_CASE("silverman matches its formula")
{
  const Sample s = normal_sample(17, 0, 400);
  const double h = select_bandwidth(BandwidthRule::silverman(), s);
  // recompute from scratch on the same draws
  const double sd = stats::sample_sd(s.points());
  const double iq = stats::iqr(s.points()) / 1.34;
  const double expected = 0.9 * std::min(sd, iq) * std::pow(400.0, -0.2);
  CHECK(h == doctest::Approx(expected).epsilon(1e-12));

  const Sample tiny({ 1.0, 2.0 });
  CHECK_THROWS_AS((void)select_bandwidth(BandwidthRule::silverman(), tiny),
                  insufficient_data);
  CHECK_THROWS_AS((void)select_bandwidth(BandwidthRule::sheather_jones(), tiny),
                  insufficient_data);
}

TEST_CASE("sheather-jones lands near the optimal-rate scale on normal data")
{
  const Sample s = normal_sample(23, 0, 500);
  const auto sel =
    select_bandwidth_detailed(BandwidthRule::sheather_jones(), s);
  CHECK(!sel.used_fallback);
  const double hs = select_bandwidth(BandwidthRule::silverman(), s);
  CHECK(sel.h > 0.3 * hs);
  CHECK(sel.h < 2.0 * hs);
}

TEST_CASE("bandwidth rule strings round-trip")
{
  for (const std::string text :
       { "silverman", "sj", "fixed:0.3", "us:sj:0.1", "us:fixed:0.5:0.1" }) {
    CHECK(BandwidthRule::from_string(text).to_string() == text);
  }
  CHECK_THROWS_AS((void)BandwidthRule::from_string("nope"), domain_error);
  CHECK_THROWS_AS((void)BandwidthRule::from_string("us:0.1"), domain_error);
}

TEST_CASE("kde evaluation")
{
  const Kernel g(KernelId::gauss);
  CHECK_THROWS_AS((void)fit(Sample({ 0.0 }), g, 0.0), domain_error);

  const DensityEstimate single = fit(Sample({ 0.0 }), g, 1.0);
  CHECK(single.eval(0.0) == doctest::Approx(0.3989422804).epsilon(1e-9));

  const DensityEstimate two = fit(Sample({ -1.0, 1.0 }), g, 1.0);
  CHECK(two.eval(0.0) == doctest::Approx(0.2419707245).epsilon(1e-9));

  // reflection and translation equivariance
  const Sample s = normal_sample(9, 0, 40);
  std::vector<double> reflected(s.points());
  for (double& v : reflected) {
    v = -v;
  }
  const DensityEstimate d = fit(s, g, 0.5);
  const DensityEstimate dr = fit(Sample(reflected), g, 0.5);
  CHECK(d.eval(0.7) == doctest::Approx(dr.eval(-0.7)).epsilon(1e-14));

  std::vector<double> shifted(s.points());
  for (double& v : shifted) {
    v += 4.2;
  }
  const DensityEstimate ds = fit(Sample(shifted), g, 0.5);
  CHECK(d.eval(0.7) == doctest::Approx(ds.eval(0.7 + 4.2)).epsilon(1e-12));
}

TEST_CASE("kde integrates to one and gaussian kde is nonnegative")
{
  const Kernel g(KernelId::gauss);
  const Sample s = normal_sample(9, 1, 60);
  const DensityEstimate d = fit(s, g, 0.4);
  const double mass = quad::integrate_or_throw(
    [&](double x) { return d.eval(x); }, d.support_lo(), d.support_hi(), 1e-9);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  RngStream probe = RngStream(33).derive(0);
  for (int i = 0; i < 200; ++i) {
    const double x = 12.0 * (probe.next_uniform01() - 0.5);
    CHECK(d.eval(x) >= 0.0);
  }
}

TEST_CASE("fourth-order kde can be negative")
{
  const Kernel g4(KernelId::gauss4);
  const DensityEstimate d = fit(Sample({ 0.0 }), g4, 1.0);
  // (3/2 - 9/2) phi(3) < 0
  CHECK(d.eval(3.0) < 0.0);
  CHECK(d.eval(3.0) ==
        doctest::Approx(-3.0 * stats::normal_pdf(3.0)).epsilon(1e-12));
}

TEST_CASE("integral of the squared density")
{
  const Kernel g(KernelId::gauss);
  const DensityEstimate single = fit(Sample({ 0.0 }), g, 1.0);
  CHECK(integral_of_square(single) ==
        doctest::Approx(0.28209479177).epsilon(1e-10));

  const Sample s = normal_sample(3, 0, 50);
  const DensityEstimate d = fit(s, g, 0.4);
  const double closed = integral_of_square(d);
  const double direct = quad::integrate_or_throw(
    [&](double x) {
      const double v = d.eval(x);
      return v * v;
    },
    d.support_lo(), d.support_hi(), 1e-10);
  CHECK(closed == doctest::Approx(direct).epsilon(1e-8));

  // scaling: data c X with bandwidth c h divides the value by c
  const double c = 2.5;
  std::vector<double> scaled(s.points());
  for (double& v : scaled) {
    v *= c;
  }
  const DensityEstimate dc = fit(Sample(scaled), g, 0.4 * c);
  CHECK(integral_of_square(dc) == doctest::Approx(closed / c).epsilon(1e-12));
}

TEST_CASE("mean under the empirical distribution")
{
  const Kernel g(KernelId::gauss);
  const Sample point({ 0.0 });
  const DensityEstimate single = fit(point, g, 1.0);
  CHECK(mean_under_empirical(single, point) ==
        doctest::Approx(0.3989422804).epsilon(1e-9));

  const Sample s = normal_sample(3, 1, 30);
  const DensityEstimate d = fit(s, g, 0.3);
  // coincident samples: the mean is the plain pair double sum
  const auto& x = s.points();
  double direct = 0.0;
  for (double xi : x) {
    for (double xj : x) {
      direct += g.eval((xi - xj) / 0.3);
    }
  }
  direct /= static_cast<double>(x.size() * x.size()) * 0.3;
  CHECK(mean_under_empirical(d, s) == doctest::Approx(direct).epsilon(1e-12));

  // a sample one hundred bandwidths away sees nothing
  const DensityEstimate narrow = fit(point, g, 0.01);
  const Sample far({ 1.0 }); // gap = 100 h
  CHECK(mean_under_empirical(narrow, far) < 1e-300);
}

TEST_CASE("cross inner product")
{
  const Kernel g(KernelId::gauss);
  const Sample s = normal_sample(5, 0, 25);
  const DensityEstimate a = fit(s, g, 0.5);
  CHECK(cross_inner_product(a, a) ==
        doctest::Approx(integral_of_square(a)).epsilon(1e-12));

  const DensityEstimate p0 = fit(Sample({ 0.0 }), g, 1.0);
  const DensityEstimate p1 = fit(Sample({ 0.0 }), g, 1.0);
  CHECK(cross_inner_product(p0, p1) ==
        doctest::Approx(0.28209479177).epsilon(1e-10));

  const Sample t = normal_sample(5, 1, 15);
  const DensityEstimate b = fit(t, g, 0.8);
  CHECK(cross_inner_product(a, b) ==
        doctest::Approx(cross_inner_product(b, a)).epsilon(1e-13));

  // quadrature fallback agrees with the closed form on plain KDEs
  const Kernel g4(KernelId::gauss4);
  const DensityEstimate c4 = fit(s, g4, 0.5);
  const double quad_val = cross_inner_product(c4, b);
  const double direct = quad::integrate_or_throw(
    [&](double x) { return c4.eval(x) * b.eval(x); }, -10.0, 10.0, 1e-10);
  CHECK(quad_val == doctest::Approx(direct).epsilon(1e-7));
}

TEST_CASE("plug-in minus empirical-mean identity")
{
  const Kernel g(KernelId::gauss);
  const Sample s = normal_sample(29, 0, 45);
  const double h = 0.35;
  const DensityEstimate d = fit(s, g, h);
  const double lhs = integral_of_square(d) - mean_under_empirical(d, s);
  const auto& x = s.points();
  const double n = static_cast<double>(x.size());
  double rhs = 0.0;
  for (double xi : x) {
    for (double xj : x) {
      rhs += g.self_convolution((xi - xj) / h) - g.eval((xi - xj) / h);
    }
  }
  rhs /= n * n * h;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("targeting solves the score equation")
{
  const Kernel g(KernelId::gauss);
  const Sample s = normal_sample(41, 0, 200);
  const double h = select_bandwidth(BandwidthRule::silverman(), s);
  const DensityEstimate initial = fit(s, g, h);

  SUBCASE("huge tolerance keeps the initial estimate")
  {
    const DensityEstimate out = tmle_target(initial, s, /*tol=*/10.0);
    REQUIRE(out.fluctuation().has_value());
    CHECK(out.fluctuation()->epsilon == 0.0);
    CHECK(out.fluctuation()->normalizer == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.eval(0.3) == doctest::Approx(initial.eval(0.3)).epsilon(1e-12));
  }

  SUBCASE("default tolerance zeroes the empirical score")
  {
    const DensityEstimate out = tmle_target(initial, s);
    REQUIRE(out.fluctuation().has_value());
    const double psi = integral_of_square(out);
    const double emp = mean_under_empirical(out, s);
    CHECK(std::abs(2.0 * (emp - psi)) <= 1e-8);
    const double mass = quad::integrate_or_throw(
      [&](double x) { return out.eval(x); }, out.support_lo(),
      out.support_hi(), 1e-9);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS((void)tmle_target(out, s), domain_error);
  }
}
