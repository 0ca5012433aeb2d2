#include "bootlin/errors.hpp"
#include "bootlin/prng.hpp"
#include "bootlin/stats.hpp"
#include "bootlin/vstat.hpp"

#include <doctest.h>

#include <cmath>

using namespace bootlin;
using namespace bootlin::vstat;

TEST_CASE("v statistic is a plain double mean")
{
  const SymKernelFn product{ [](double x, double y) { return x * y; }, 0.0 };
  CHECK(v_statistic(product, { 1.0, 2.0 }, { 1.0, 2.0 }) ==
        doctest::Approx(2.25));
  CHECK_THROWS_AS((void)v_statistic(product, {}, { 1.0 }), domain_error);

  const GaussianPairKernel f{ Kernel(KernelId::gauss), 0.7,
                              PairKernel::kernel_h };
  const SymKernelFn fn = f.fn();
  // single point: the diagonal value
  CHECK(v_statistic(fn, { 1.3 }, { 1.3 }) == doctest::Approx(f.tau()));
  // symmetric in swapping the point sets
  const std::vector<double> xs{ 0.1, -0.4, 2.0 };
  const std::vector<double> ys{ 1.0, 0.5 };
  CHECK(v_statistic(fn, xs, ys) == doctest::Approx(v_statistic(fn, ys, xs)));
}

TEST_CASE("pair kernel diagonal values")
{
  const Kernel g(KernelId::gauss);
  const GaussianPairKernel f1{ g, 0.3, PairKernel::kernel_h };
  const GaussianPairKernel f2{ g, 0.3, PairKernel::selfconv_h };
  CHECK(f1.tau() == doctest::Approx(g.eval(0.0) / 0.3));
  CHECK(f2.tau() == doctest::Approx(g.self_convolution(0.0) / 0.3));
}

TEST_CASE("signed v integral single-point arithmetic")
{
  const GaussianPairKernel f{ Kernel(KernelId::gauss), 1.0,
                              PairKernel::kernel_h };
  const Sample sample({ 0.0 });
  // K_h(0) - 2 N(0; 0, 2) + N(0; 0, 3)
  const double expected = 0.3989422804 - 2.0 * 0.2820947918 + 0.2303294330;
  CHECK(signed_v_integral(f, sample) ==
        doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("signed v integral rejects unregistered combinations")
{
  const GaussianPairKernel f{ Kernel(KernelId::gauss4), 1.0,
                              PairKernel::kernel_h };
  CHECK_THROWS_AS((void)signed_v_integral(f, Sample({ 0.0 })),
                  unsupported_operation);
}

TEST_CASE("signed v integral concentrates at tau over n")
{
  // scaled-down version of the diagonal-law check (the full one runs in
  // diag and in the acceptance suite)
  const std::size_t reps = 200;
  const std::size_t n = 100;
  const GaussianPairKernel f{ Kernel(KernelId::gauss), 0.3,
                              PairKernel::kernel_h };
  RngStream root(2024);
  std::vector<double> values(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream s = root.derive(static_cast<std::uint32_t>(r));
    values[r] = signed_v_integral(f, Sample(s.standard_normal(n)));
  }
  const double m = stats::mean(values);
  const double se =
    stats::sample_sd(values) / std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(m - f.tau() / static_cast<double>(n)) <=
        3.0 * se + 2.0 / static_cast<double>(n));
}

TEST_CASE("one-step remainder is a negated squared distance")
{
  RngStream root(8);
  RngStream s = root.derive(0);
  const Sample sample(s.standard_normal(40));
  const DensityEstimate d = fit(sample, Kernel(KernelId::gauss), 0.5);
  const double r = onestep_remainder(d);
  CHECK(r <= 0.0);
  // a dense well-tuned estimate is close to the truth, so the remainder is
  // small but still negative
  RngStream t = root.derive(1);
  const Sample big(t.standard_normal(4000));
  const double h = select_bandwidth(BandwidthRule::silverman(), big);
  const double r_big = onestep_remainder(fit(big, Kernel(KernelId::gauss), h));
  CHECK(r_big <= 0.0);
  CHECK(r_big > -0.01);
  CHECK(std::abs(r_big) < std::abs(r));
}

TEST_CASE("plug-in bias term")
{
  const Kernel g(KernelId::gauss);
  const Sample point({ 0.0 });
  const DensityEstimate d = fit(point, g, 1.0);
  CHECK(plugin_bias_term(d, point) ==
        doctest::Approx(0.2820947918 - 0.3989422804).epsilon(1e-9));

  RngStream root(12);
  RngStream s = root.derive(0);
  const Sample other(s.standard_normal(5));
  CHECK_THROWS_AS((void)plugin_bias_term(d, other), domain_error);
}

TEST_CASE("expected plug-in bias matches a direct Monte Carlo mean")
{
  const std::size_t reps = 300;
  const std::size_t n = 120;
  const double h = 0.4;
  RngStream root(55);
  std::vector<double> values(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream s = root.derive(static_cast<std::uint32_t>(r));
    const Sample sample(s.standard_normal(n));
    const DensityEstimate d = fit(sample, Kernel(KernelId::gauss), h);
    values[r] = plugin_bias_term(d, sample);
  }
  const double m = stats::mean(values);
  const double se =
    stats::sample_sd(values) / std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(m - expected_plugin_bias(n, h)) <= 3.0 * se);
}

TEST_CASE("diag suite passes and the tolerance hook can break it")
{
  const auto results = run_all_diag_checks(1.0);
  CHECK(results.size() >= 6);
  for (const auto& r : results) {
    INFO(r.name, ": ", r.detail);
    CHECK(r.pass);
  }
  // zero tolerance scale forces failures
  const auto broken = run_diag_check("kernel-mass", 0.0);
  CHECK(!broken.pass);
  CHECK_THROWS_AS((void)run_diag_check("no-such-check"), domain_error);
}
