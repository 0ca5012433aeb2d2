#include "bootlin/bootstrap.hpp"
#include "bootlin/errors.hpp"
#include "bootlin/quadrature.hpp"
#include "bootlin/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace bootlin;

namespace {

const Kernel kGauss(KernelId::gauss);

Sample
normal_sample(std::uint64_t seed, std::size_t n)
{
  RngStream root(seed);
  RngStream s = root.derive(0);
  return Sample(s.standard_normal(n));
}

} // namespace

TEST_CASE("scheme and policy strings")
{
  for (const std::string text :
       { "emp", "smooth:fit", "smooth:gauss:silverman",
         "smooth:gauss:sj+tmle" }) {
    CHECK(BootstrapScheme::from_string(text).to_string() == text);
  }
  CHECK_THROWS_AS((void)BootstrapScheme::from_string("smooth"), domain_error);
  CHECK(nuisance_policy_from_string("refit") == NuisancePolicy::refit_frozen);
  CHECK(nuisance_policy_from_string("fixed") == NuisancePolicy::fixed);
  CHECK_THROWS_AS((void)nuisance_policy_from_string("x"), domain_error);
}

TEST_CASE("signed kernels cannot drive a smooth scheme")
{
  const Sample s = normal_sample(1, 20);
  const DensityEstimate d4 = fit(s, Kernel(KernelId::gauss4), 0.4);
  CHECK_THROWS_AS((void)resolve_scheme_density(BootstrapScheme::smooth_fitted(),
                                               d4, s),
                  unsupported_operation);
  const auto indep = BootstrapScheme::smooth_independent(
    Kernel(KernelId::gauss4), BandwidthRule::silverman(), false);
  const DensityEstimate d = fit(s, kGauss, 0.4);
  CHECK_THROWS_AS((void)resolve_scheme_density(indep, d, s),
                  unsupported_operation);
}

TEST_CASE("single-point empirical resample is the point itself")
{
  const Sample point({ 3.25 });
  RngStream root(9);
  RngStream s = root.derive(0);
  const Sample boot = draw_bootstrap_sample(BootstrapScheme::empirical(),
                                            point, std::nullopt, s);
  REQUIRE(boot.size() == 1);
  CHECK(boot.points()[0] == 3.25);
}

TEST_CASE("smooth draws have the convolution mean and variance")
{
  const Sample s = normal_sample(31, 12);
  const double h = 0.7;
  const DensityEstimate d = fit(s, kGauss, h);
  RngStream root(32);
  RngStream stream = root.derive(0);
  const std::size_t n_draws = 100000;
  std::vector<double> draws;
  draws.reserve(n_draws);
  const auto scheme = BootstrapScheme::smooth_fitted();
  while (draws.size() < n_draws) {
    const Sample boot = draw_bootstrap_sample(scheme, s, d, stream);
    draws.insert(draws.end(), boot.points().begin(), boot.points().end());
  }
  draws.resize(n_draws);

  const double sample_mean = stats::mean(s.points());
  double m2 = 0.0;
  for (double x : s.points()) {
    m2 += (x - sample_mean) * (x - sample_mean);
  }
  m2 /= static_cast<double>(s.size()); // 1/n convention
  const double want_var = m2 + h * h;

  const double got_mean = stats::mean(draws);
  const double got_var = stats::sample_variance(draws);
  const double mean_se = std::sqrt(want_var / static_cast<double>(n_draws));
  CHECK(std::abs(got_mean - sample_mean) < 3.0 * mean_se);
  // chi-square concentration: sd of the sample variance ~ var sqrt(2/n)
  const double var_se = want_var * std::sqrt(2.0 / static_cast<double>(n_draws));
  CHECK(std::abs(got_var - want_var) < 3.0 * var_se);
}

TEST_CASE("fixed nuisance with the plug-in construction degenerates")
{
  const Sample s = normal_sample(41, 50);
  const DensityEstimate d = fit(s, kGauss, 0.4);
  const RngStream root(7);
  const ReplicateSet reps =
    run_replicates(Construction::plugin, d, s, BootstrapScheme::empirical(),
                   NuisancePolicy::fixed, 20, root);
  const double int_sq = integral_of_square(d);
  for (std::size_t b = 0; b < reps.size(); ++b) {
    REQUIRE(reps.valid[b]);
    CHECK(reps.psi_star[b] == int_sq); // exactly, every replicate
  }
  CHECK(reps.center == doctest::Approx(int_sq));
}

TEST_CASE("single observation gives a degenerate bootstrap")
{
  const Sample point({ 1.5 });
  const DensityEstimate d = fit(point, kGauss, 1.0);
  const RngStream root(3);
  for (NuisancePolicy policy :
       { NuisancePolicy::refit_frozen, NuisancePolicy::fixed }) {
    const ReplicateSet reps =
      run_replicates(Construction::onestep, d, point,
                     BootstrapScheme::empirical(), policy, 8, root);
    for (std::size_t b = 1; b < reps.size(); ++b) {
      CHECK(reps.psi_star[b] == reps.psi_star[0]);
    }
  }
}

TEST_CASE("replicates are identical across worker counts")
{
  const Sample s = normal_sample(51, 80);
  const DensityEstimate d = fit(s, kGauss, 0.35);
  const RngStream root(99);
  const auto scheme = BootstrapScheme::smooth_fitted();
  const ReplicateSet one =
    run_replicates(Construction::onestep, d, s, scheme,
                   NuisancePolicy::refit_frozen, 3, root, /*threads=*/1);
  const ReplicateSet eight =
    run_replicates(Construction::onestep, d, s, scheme,
                   NuisancePolicy::refit_frozen, 3, root, /*threads=*/8);
  for (std::size_t b = 0; b < 3; ++b) {
    CHECK(one.psi_star[b] == eight.psi_star[b]);
    CHECK(one.sigma_star[b] == eight.sigma_star[b]);
  }
  CHECK(one.center == eight.center);
}

TEST_CASE("fixed-nuisance empirical one-step replicates satisfy the shift "
          "identity")
{
  const Sample s = normal_sample(61, 60);
  const DensityEstimate d = fit(s, kGauss, 0.3);
  const RngStream root(44);
  const auto scheme = BootstrapScheme::empirical();
  const ReplicateSet reps = run_replicates(
    Construction::onestep, d, s, scheme, NuisancePolicy::fixed, 10, root);
  const double psi_hat = estimate(Construction::onestep, d, s);
  const double pn_eta = mean_under_empirical(d, s);
  for (std::uint32_t b = 0; b < 10; ++b) {
    // replicate b draws its indices from stream.derive(b).derive(0)
    RngStream child = root.derive(b);
    RngStream index_stream = child.derive(0);
    RngStream noise_stream = child.derive(1);
    const Sample boot(Sample(
      draw_bootstrap_sample(scheme, s, std::nullopt, index_stream).points()));
    (void)noise_stream;
    const double pstar_eta = mean_under_empirical(d, boot);
    CHECK(reps.psi_star[b] - psi_hat ==
          doctest::Approx(2.0 * (pstar_eta - pn_eta)).epsilon(1e-12));
  }
}

TEST_CASE("smooth center of the plug-in equals the original estimate")
{
  const Sample s = normal_sample(71, 90);
  const double h = select_bandwidth(BandwidthRule::silverman(), s);
  const DensityEstimate d = fit(s, kGauss, h);
  const RngStream root(5);
  const ReplicateSet reps = run_replicates(
    Construction::plugin, d, s, BootstrapScheme::smooth_fitted(),
    NuisancePolicy::refit_frozen, 5, root);
  CHECK(reps.center == estimate(Construction::plugin, d, s));
}

TEST_CASE("binned engine agrees with the exact engine")
{
  const Sample s = normal_sample(81, 500);
  const double h = select_bandwidth(BandwidthRule::silverman(), s);

  for (bool tmle : { false, true }) {
    DensityEstimate d = fit(s, kGauss, h);
    if (tmle) {
      d = tmle_target(d, s);
    }
    for (const auto& scheme :
         { BootstrapScheme::empirical(), BootstrapScheme::smooth_fitted() }) {
      for (NuisancePolicy policy :
           { NuisancePolicy::refit_frozen, NuisancePolicy::fixed }) {
        const RngStream root(17);
        const ReplicateSet exact =
          run_replicates(Construction::onestep, d, s, scheme, policy, 4, root,
                         1, EngineMode::exact);
        const ReplicateSet binned =
          run_replicates(Construction::onestep, d, s, scheme, policy, 4, root,
                         1, EngineMode::binned);
        for (std::size_t b = 0; b < 4; ++b) {
          REQUIRE(exact.valid[b]);
          REQUIRE(binned.valid[b]);
          INFO("tmle=", tmle, " scheme=", scheme.to_string(),
               " policy=", to_string(policy), " b=", b);
          CHECK(binned.psi_star[b] ==
                doctest::Approx(exact.psi_star[b]).epsilon(2e-3));
          CHECK(binned.sigma_star[b] ==
                doctest::Approx(exact.sigma_star[b]).epsilon(2e-3));
        }
      }
    }
  }
}

TEST_CASE("smooth scheme without a density is rejected")
{
  const Sample s = normal_sample(33, 10);
  RngStream root(1);
  RngStream stream = root.derive(0);
  CHECK_THROWS_AS((void)draw_bootstrap_sample(BootstrapScheme::smooth_fitted(),
                                              s, std::nullopt, stream),
                  domain_error);
}

TEST_CASE("inverse-cdf draws from a targeted density match its distribution")
{
  const Sample s = normal_sample(35, 150);
  const double h = select_bandwidth(BandwidthRule::silverman(), s);
  const DensityEstimate d = tmle_target(fit(s, kGauss, h), s);
  REQUIRE(d.fluctuation().has_value());

  RngStream root(36);
  RngStream stream = root.derive(0);
  std::vector<double> draws;
  const auto scheme = BootstrapScheme::smooth_fitted();
  while (draws.size() < 60000) {
    const Sample boot = draw_bootstrap_sample(scheme, s, d, stream);
    draws.insert(draws.end(), boot.points().begin(), boot.points().end());
  }
  draws.resize(60000);

  // compare empirical tail fractions against the density's own integrals
  for (double q : { -1.0, 0.0, 0.8 }) {
    const double want = quad::integrate_or_throw(
      [&](double x) { return d.eval(x); }, d.support_lo(), q, 1e-9);
    std::size_t below = 0;
    for (double v : draws) {
      below += v <= q ? 1 : 0;
    }
    const double got = static_cast<double>(below) / 60000.0;
    const double se = std::sqrt(want * (1.0 - want) / 60000.0);
    // inverse-CDF interpolation on a 4096-point grid adds a small bias
    CHECK(std::abs(got - want) < 4.0 * se + 1e-3);
  }
}

TEST_CASE("independently configured sampling densities")
{
  const Sample s = normal_sample(37, 300);
  const double h = select_bandwidth(BandwidthRule::silverman(), s);
  const DensityEstimate d = fit(s, kGauss, h);
  const auto scheme = BootstrapScheme::smooth_independent(
    kGauss, BandwidthRule::undersmoothed(BandwidthRule::silverman(), 0.1),
    false);
  const auto density = resolve_scheme_density(scheme, d, s);
  REQUIRE(density.has_value());
  CHECK(density->bandwidth() ==
        doctest::Approx(h / std::pow(300.0, 0.1)).epsilon(1e-12));

  const RngStream root(38);
  const ReplicateSet reps =
    run_replicates(Construction::onestep, d, s, scheme,
                   NuisancePolicy::refit_frozen, 6, root);
  CHECK(reps.failures == 0);
  // centering uses the independent sampling density, not the nuisance
  const double want = 2.0 * cross_inner_product(d, *density) -
                      integral_of_square(d);
  CHECK(reps.center == doctest::Approx(want).epsilon(1e-12));

  // targeted sampling density resolves and draws as well
  const auto tmle_scheme = BootstrapScheme::smooth_independent(
    kGauss, BandwidthRule::silverman(), true);
  const auto tmle_density = resolve_scheme_density(tmle_scheme, d, s);
  REQUIRE(tmle_density.has_value());
  CHECK(tmle_density->fluctuation().has_value());
  const ReplicateSet treps =
    run_replicates(Construction::onestep, d, s, tmle_scheme,
                   NuisancePolicy::fixed, 4, root);
  CHECK(treps.failures == 0);
}

TEST_CASE("intervals for the density parameter are translation equivariant")
{
  // shifting every observation by a constant leaves the whole pipeline
  // output unchanged: same bandwidth, same resample indices, same
  // estimates, same intervals
  const Sample s = normal_sample(39, 120);
  std::vector<double> shifted(s.points());
  for (double& v : shifted) {
    v += 250.0;
  }
  const Sample t(shifted);

  auto pipeline = [](const Sample& sample) {
    const double h = select_bandwidth(BandwidthRule::silverman(), sample);
    const DensityEstimate d = fit(sample, kGauss, h);
    const double psi = estimate(Construction::onestep, d, sample);
    const ReplicateSet reps = run_replicates(
      Construction::onestep, d, sample, BootstrapScheme::empirical(),
      NuisancePolicy::refit_frozen, 60, RngStream(5));
    const IntervalSpec spec =
      IntervalSpec::equi_tailed(0.95, IntervalMethod::percentile);
    return percentile(psi, reps.valid_psi(), reps.center, spec);
  };

  const Interval a = pipeline(s);
  const Interval b = pipeline(t);
  CHECK(a.lo == doctest::Approx(b.lo).epsilon(1e-9));
  CHECK(a.hi == doctest::Approx(b.hi).epsilon(1e-9));
}

TEST_CASE("gcomp replicates: determinism and policies")
{
  RngStream root(91);
  RngStream s = root.derive(0);
  const std::size_t n = 300;
  std::vector<double> y(n), z(n);
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = s.next_standard_normal();
    a[i] = s.next_uniform01() < 0.5 ? 1 : 0;
    y[i] = z[i] + 0.5 * s.next_standard_normal();
  }
  const gcomp::CausalSample data(std::move(y), std::move(a), std::move(z));
  const gcomp::NuisanceSpec spec;
  const gcomp::GcompNuisance eta = gcomp::fit_nuisance(data, spec);

  const RngStream boot_root(12);
  const ReplicateSet r1 = run_gcomp_replicates(
    gcomp::GcompConstruction::ee, data, eta, spec,
    NuisancePolicy::refit_frozen, 25, boot_root, 1);
  const ReplicateSet r8 = run_gcomp_replicates(
    gcomp::GcompConstruction::ee, data, eta, spec,
    NuisancePolicy::refit_frozen, 25, boot_root, 8);
  for (std::size_t b = 0; b < 25; ++b) {
    CHECK(r1.psi_star[b] == r8.psi_star[b]);
  }
  CHECK(r1.center == doctest::Approx(gcomp::estimate_ee(data, eta)));

  // fixed policy reuses the fitted functions; replicates still vary
  const ReplicateSet fixed = run_gcomp_replicates(
    gcomp::GcompConstruction::onestep, data, eta, spec, NuisancePolicy::fixed,
    25, boot_root, 1);
  bool any_diff = false;
  for (std::size_t b = 1; b < 25; ++b) {
    any_diff = any_diff || fixed.psi_star[b] != fixed.psi_star[0];
  }
  CHECK(any_diff);
  CHECK(fixed.failures == 0);
}

TEST_CASE("replicate bookkeeping survives unlucky resamples")
{
  // two observations, one per arm: about 1/2 of resamples lose an arm, so
  // the failure guard must trip
  const gcomp::CausalSample tiny({ 1.0, 2.0 }, { 0, 1 }, { 0.1, 0.2 });
  const gcomp::NuisanceSpec spec;
  const gcomp::GcompNuisance eta = gcomp::nuisance_from_functions(
    [](double) { return 1.0; }, [](double) { return 0.5; }, tiny);
  const RngStream root(1);
  CHECK_THROWS_AS((void)run_gcomp_replicates(gcomp::GcompConstruction::ee,
                                             tiny, eta, spec,
                                             NuisancePolicy::fixed, 200, root,
                                             1),
                  numeric_error);
}
