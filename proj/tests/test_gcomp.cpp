#include "bootlin/errors.hpp"
#include "bootlin/gcomp.hpp"
#include "bootlin/prng.hpp"
#include "bootlin/quadrature.hpp"
#include "bootlin/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace bootlin;
using namespace bootlin::gcomp;

namespace {

double
expit(double x)
{
  return 1.0 / (1.0 + std::exp(-x));
}

//! Z ~ N(0,1), A | Z ~ Bernoulli(expit(z/2)), Y = z + sd * noise.
CausalSample
synthetic(std::size_t n, std::uint64_t seed, double noise_sd = 0.5)
{
  RngStream root(seed);
  RngStream s = root.derive(0);
  std::vector<double> y(n), z(n);
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = s.next_standard_normal();
    a[i] = s.next_uniform01() < expit(0.5 * z[i]) ? 1 : 0;
    y[i] = z[i] + noise_sd * s.next_standard_normal();
  }
  return CausalSample(std::move(y), std::move(a), std::move(z));
}

} // namespace

TEST_CASE("causal sample validation")
{
  CHECK_THROWS_AS(CausalSample({ 1.0 }, { 1, 0 }, { 0.0 }), domain_error);
  CHECK_THROWS_AS(CausalSample({ 1.0, 2.0 }, { 1, 2 }, { 0.0, 1.0 }),
                  domain_error);
  CHECK_THROWS_AS(CausalSample({ 1.0, 2.0 }, { 1, 1 }, { 0.0, 1.0 }),
                  degenerate_data);
  CHECK_THROWS_AS(CausalSample({ 1.0, 2.0 }, { 0, 0 }, { 0.0, 1.0 }),
                  degenerate_data);
}

TEST_CASE("csv ingestion")
{
  std::istringstream good("y,a,z\n1.5,1,0.2\n-0.5,0,1.0\n");
  const CausalSample s = read_causal_csv(good);
  CHECK(s.size() == 2);
  CHECK(s.y[0] == doctest::Approx(1.5));
  CHECK(s.a[1] == 0);

  std::istringstream bad_header("y,z,a\n1,1,1\n");
  CHECK_THROWS_AS((void)read_causal_csv(bad_header), io_error);
  std::istringstream bad_a("y,a,z\n1.0,2,0.0\n");
  CHECK_THROWS_AS((void)read_causal_csv(bad_a), io_error);
  std::istringstream empty("");
  CHECK_THROWS_AS((void)read_causal_csv(empty), io_error);
}

TEST_CASE("constant control outcomes give a constant regression")
{
  CausalSample data({ 5.0, 5.0, 7.0, 5.0 }, { 0, 0, 1, 0 },
                    { -1.0, 0.0, 0.5, 1.0 });
  const GcompNuisance eta = fit_nuisance(data, NuisanceSpec{});
  for (double z : { -2.0, 0.0, 3.0 }) {
    CHECK(eta.mu(z) == doctest::Approx(5.0).epsilon(1e-10));
  }
}

TEST_CASE("logistic propensity recovers a coin flip")
{
  RngStream root(77);
  RngStream s = root.derive(0);
  const std::size_t n = 10000;
  std::vector<double> y(n), z(n);
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = s.next_standard_normal();
    a[i] = s.next_uniform01() < 0.5 ? 1 : 0;
    y[i] = z[i];
  }
  const CausalSample data(std::move(y), std::move(a), std::move(z));
  const GcompNuisance eta = fit_nuisance(data, NuisanceSpec{});
  double mean_g = 0.0;
  for (double zz : data.z) {
    mean_g += eta.g(zz);
  }
  mean_g /= static_cast<double>(n);
  CHECK(std::abs(mean_g - 0.5) < 0.02);
}

TEST_CASE("truncation clamps the propensity exactly")
{
  // steep logistic fit pushed against the bounds
  RngStream root(78);
  RngStream s = root.derive(0);
  const std::size_t n = 400;
  std::vector<double> y(n), z(n);
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = s.next_standard_normal();
    a[i] = s.next_uniform01() < expit(6.0 * z[i]) ? 1 : 0;
    y[i] = z[i];
  }
  const CausalSample data(std::move(y), std::move(a), std::move(z));
  NuisanceSpec spec;
  spec.trunc_lo = 0.05;
  spec.trunc_hi = 0.95;
  const GcompNuisance eta = fit_nuisance(data, spec);
  double max_g = 0.0;
  double min_g = 1.0;
  for (double zz : data.z) {
    max_g = std::max(max_g, eta.g(zz));
    min_g = std::min(min_g, eta.g(zz));
  }
  CHECK(max_g == doctest::Approx(0.95));
  CHECK(min_g == doctest::Approx(0.05));
}

TEST_CASE("estimating equations closed form on residual-free data")
{
  // g constant 1/2, outcomes equal the regression on controls
  CausalSample data({ 3.0, 3.0, 2.0, 9.0 }, { 0, 0, 1, 1 },
                    { 0.5, -0.5, 1.0, 2.0 });
  const GcompNuisance eta = nuisance_from_functions(
    [](double) { return 3.0; }, [](double) { return 0.5; }, data);
  CHECK(estimate_ee(data, eta) == doctest::Approx(3.0).epsilon(1e-12));

  // exact regression, zero residuals: treated-arm mean of mu
  const GcompNuisance eta2 = nuisance_from_functions(
    [](double z) { return 2.0 * z; }, [](double) { return 0.5; },
    CausalSample({ 1.0, -1.0, 0.0, 0.0 }, { 0, 0, 1, 1 },
                 { 0.5, -0.5, 1.0, 2.0 }));
  const CausalSample clean({ 1.0, -1.0, 0.0, 0.0 }, { 0, 0, 1, 1 },
                           { 0.5, -0.5, 1.0, 2.0 });
  CHECK(estimate_ee(clean, eta2) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("one-step equals estimating equations when pi matches")
{
  const CausalSample data = synthetic(500, 5);
  double pibar = 0.0;
  for (int ai : data.a) {
    pibar += ai;
  }
  pibar /= static_cast<double>(data.size());
  // constant propensity at the observed treated fraction forces pi == pibar
  const GcompNuisance eta = nuisance_from_functions(
    [](double z) { return z; }, [pibar](double) { return pibar; }, data);
  CHECK(eta.pi == doctest::Approx(pibar).epsilon(1e-14));
  CHECK(estimate_onestep(data, eta) ==
        doctest::Approx(estimate_ee(data, eta)).epsilon(1e-12));
}

TEST_CASE("true nuisances recover the true value")
{
  const CausalSample data = synthetic(20000, 9);
  const GcompNuisance eta = nuisance_from_functions(
    [](double z) { return z; }, [](double z) { return expit(0.5 * z); }, data);
  // psi0 = E[Z expit(Z/2)] / E[expit(Z/2)]
  const double num = quad::integrate_or_throw(
    [](double z) { return z * expit(0.5 * z) * stats::normal_pdf(z); }, -12.0,
    12.0, 1e-10, 1e-14);
  const double den = quad::integrate_or_throw(
    [](double z) { return expit(0.5 * z) * stats::normal_pdf(z); }, -12.0,
    12.0, 1e-10, 1e-14);
  const double psi0 = num / den;
  CHECK(std::abs(estimate_ee(data, eta) - psi0) < 0.03);
  CHECK(std::abs(estimate_onestep(data, eta) - psi0) < 0.03);
}

TEST_CASE("influence rows")
{
  const CausalSample data({ 1.0, 4.0 }, { 0, 1 }, { 0.3, 0.7 });
  GcompNuisance eta = nuisance_from_functions(
    [](double) { return 0.0; }, [](double) { return 0.5; }, data);
  REQUIRE(eta.pi == doctest::Approx(0.5));
  const auto iv = influence_values_gcomp(data, eta, 0.0);
  // control row: g / (pi (1-g)) * (y - mu) = 0.5 / 0.25 * 1 = 2
  CHECK(iv[0] == doctest::Approx(2.0).epsilon(1e-12));
  // treated row with mu == psi gives zero contribution only when mu = psi
  const auto iv2 = influence_values_gcomp(data, eta, /*psi_hat=*/0.0);
  CHECK(iv2[1] == doctest::Approx(0.0).epsilon(1e-12));
  // control row with y = mu vanishes
  const CausalSample data2({ 0.0, 4.0 }, { 0, 1 }, { 0.3, 0.7 });
  const auto iv3 = influence_values_gcomp(data2, eta, 4.0);
  CHECK(iv3[0] == doctest::Approx(0.0));
}

TEST_CASE("estimating equations estimator solves its equation")
{
  const CausalSample data = synthetic(800, 13);
  const GcompNuisance eta = fit_nuisance(data, NuisanceSpec{});
  const double psi = estimate_ee(data, eta);
  double pibar = 0.0;
  for (int ai : data.a) {
    pibar += ai;
  }
  pibar /= static_cast<double>(data.size());
  GcompNuisance eta_bar = eta;
  eta_bar.pi = pibar; // the estimating function uses the treated fraction
  const auto iv = influence_values_gcomp(data, eta_bar, psi);
  CHECK(std::abs(stats::mean(iv)) < 1e-10);
}

TEST_CASE("influence values are bounded under truncation")
{
  const CausalSample data = synthetic(600, 21);
  NuisanceSpec spec;
  spec.trunc_lo = 0.05;
  spec.trunc_hi = 0.95;
  const GcompNuisance eta = fit_nuisance(data, spec);
  const double psi = estimate_onestep(data, eta);
  double m = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    m = std::max({ m, std::abs(data.y[i]), std::abs(eta.mu(data.z[i])) });
  }
  const double bound = 2.0 * m * 0.95 / (eta.pi * 0.05) +
                       (m + std::abs(psi)) / eta.pi;
  for (double v : influence_values_gcomp(data, eta, psi)) {
    CHECK(std::abs(v) <= bound);
  }
}

TEST_CASE("double-robust-style zero")
{
  // outcomes equal the regression on controls and g is the treated fraction
  const CausalSample raw = synthetic(200, 30, /*noise_sd=*/0.5);
  std::vector<double> y(raw.size());
  double pibar = 0.0;
  for (int ai : raw.a) {
    pibar += ai;
  }
  pibar /= static_cast<double>(raw.size());
  double treated_mu = 0.0;
  std::size_t treated = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    y[i] = 2.0 * raw.z[i] + 1.0; // exactly mu(z)
    if (raw.a[i] == 1) {
      treated_mu += y[i];
      ++treated;
    }
  }
  treated_mu /= static_cast<double>(treated);
  const CausalSample data(std::move(y), raw.a, raw.z);
  const GcompNuisance eta = nuisance_from_functions(
    [](double z) { return 2.0 * z + 1.0; }, [pibar](double) { return pibar; },
    data);
  CHECK(estimate_ee(data, eta) == doctest::Approx(treated_mu).epsilon(1e-12));
  CHECK(estimate_onestep(data, eta) ==
        doctest::Approx(treated_mu).epsilon(1e-12));
}

TEST_CASE("kernel regression options")
{
  const CausalSample data = synthetic(2000, 44);
  NuisanceSpec spec;
  spec.mu = MuMethod::kernel(0.5);
  spec.g = GMethod::kernel(0.6);
  const GcompNuisance eta = fit_nuisance(data, spec);
  // smooth fits should track the truth loosely in the center
  CHECK(std::abs(eta.mu(0.0)) < 0.25);
  CHECK(std::abs(eta.g(0.0) - 0.5) < 0.1);
  CHECK_THROWS_AS((void)MuMethod::kernel(0.0), domain_error);
  CHECK_THROWS_AS((void)GMethod::kernel(-1.0), domain_error);
}
