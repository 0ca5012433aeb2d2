#include "bootlin/vstat.hpp"

#include "bootlin/errors.hpp"
#include "bootlin/prng.hpp"
#include "bootlin/quadrature.hpp"
#include "bootlin/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bootlin {
namespace vstat {

SymKernelFn
GaussianPairKernel::fn() const
{
  const Kernel k = kernel;
  const double hh = h;
  if (which == PairKernel::kernel_h) {
    return { [k, hh](double x, double y) { return k.eval((x - y) / hh) / hh; },
             tau() };
  }
  return { [k, hh](double x, double y) {
             return k.self_convolution((x - y) / hh) / hh;
           },
           tau() };
}

double
GaussianPairKernel::tau() const
{
  return (which == PairKernel::kernel_h ? kernel.eval(0.0)
                                        : kernel.self_convolution(0.0)) /
         h;
}

double
GaussianPairKernel::against_population(double x) const
{
  if (kernel.id() != KernelId::gauss) {
    throw unsupported_operation(
      "population closed forms are registered for the Gaussian kernel only");
  }
  // K_h smooths the normal by h^2; the self-convolution by 2 h^2.
  const double extra = (which == PairKernel::kernel_h) ? h * h : 2.0 * h * h;
  return stats::normal_pdf(x, 0.0, 1.0 + extra);
}

double
GaussianPairKernel::population_population() const
{
  if (kernel.id() != KernelId::gauss) {
    throw unsupported_operation(
      "population closed forms are registered for the Gaussian kernel only");
  }
  const double extra = (which == PairKernel::kernel_h) ? h * h : 2.0 * h * h;
  return stats::normal_pdf(0.0, 0.0, 2.0 + extra);
}

double
v_statistic(const SymKernelFn& f, const std::vector<double>& xs,
            const std::vector<double>& ys)
{
  if (xs.empty() || ys.empty()) {
    throw domain_error("v_statistic: empty input");
  }
  double s = 0.0;
  for (double x : xs) {
    for (double y : ys) {
      s += f.f(x, y);
    }
  }
  return s / (static_cast<double>(xs.size()) * static_cast<double>(ys.size()));
}

double
signed_v_integral(const GaussianPairKernel& f, const Sample& sample)
{
  const SymKernelFn fn = f.fn();
  const double v_nn = v_statistic(fn, sample.points(), sample.points());
  double v_n0 = 0.0;
  for (double x : sample.points()) {
    v_n0 += f.against_population(x);
  }
  v_n0 /= static_cast<double>(sample.size());
  return v_nn - 2.0 * v_n0 + f.population_population();
}

double
onestep_remainder(const DensityEstimate& density)
{
  const double lo = std::min(density.support_lo(), -12.0);
  const double hi = std::max(density.support_hi(), 12.0);
  const double sq = quad::integrate_or_throw(
    [&](double x) {
      const double d = density.eval(x) - stats::normal_pdf(x);
      return d * d;
    },
    lo, hi, 1e-8);
  return -sq;
}

double
plugin_bias_term(const DensityEstimate& density, const Sample& sample)
{
  const auto& fitted = density.sample().points();
  const auto& given = sample.points();
  if (fitted.size() != given.size() ||
      !std::equal(fitted.begin(), fitted.end(), given.begin())) {
    throw domain_error("plugin_bias_term: sample must be the fitting sample");
  }
  return integral_of_square(density) - mean_under_empirical(density, sample);
}

double
expected_plugin_bias(std::size_t n, double h)
{
  const Kernel k(KernelId::gauss);
  const double nn = static_cast<double>(n);
  const double tau_diff = (k.self_convolution(0.0) - k.eval(0.0)) / h;
  const double mean_diff = stats::normal_pdf(0.0, 0.0, 2.0 + 2.0 * h * h) -
                           stats::normal_pdf(0.0, 0.0, 2.0 + h * h);
  return tau_diff / nn + (nn - 1.0) / nn * mean_diff;
}

// ---------------------------------------------------------------------------
// diag checks

namespace {

constexpr std::uint64_t kDiagSeed = 0;
constexpr std::uint32_t kDiagPurpose = 0xD1A6;

std::string
fmt(double x)
{
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

DiagResult
check_bound(const std::string& name, double observed, double bound)
{
  DiagResult r;
  r.name = name;
  r.pass = observed <= bound;
  r.detail = "|err| = " + fmt(observed) + ", bound = " + fmt(bound);
  return r;
}

DiagResult
check_kernel_mass(double tol_scale)
{
  double worst = 0.0;
  for (KernelId id : { KernelId::gauss, KernelId::gauss4 }) {
    const Kernel k(id);
    const double mass = quad::integrate_or_throw(
      [&](double u) { return k.eval(u); }, -20.0, 20.0, 1e-10);
    const double first = quad::integrate_or_throw(
      [&](double u) { return u * k.eval(u); }, -20.0, 20.0, 1e-10, 1e-12);
    worst = std::max({ worst, std::abs(mass - 1.0), std::abs(first) });
  }
  return check_bound("kernel-mass", worst, 1e-8 * tol_scale);
}

DiagResult
check_kernel_moments(double tol_scale)
{
  const Kernel k4(KernelId::gauss4);
  const double second = quad::integrate_or_throw(
    [&](double u) { return u * u * k4.eval(u); }, -20.0, 20.0, 1e-10, 1e-12);
  const double third = quad::integrate_or_throw(
    [&](double u) { return u * u * u * k4.eval(u); }, -20.0, 20.0, 1e-10,
    1e-12);
  const double worst = std::max(std::abs(second), std::abs(third));
  return check_bound("kernel-moments", worst, 1e-8 * tol_scale);
}

DiagResult
check_selfconv(double tol_scale)
{
  double worst_pointwise = 0.0; // bound 1e-8
  double worst_mass = 0.0;      // bound 1e-7
  for (KernelId id : { KernelId::gauss, KernelId::gauss4 }) {
    const Kernel k(id);
    // closed form against direct quadrature of the convolution integral
    for (double u : { 0.0, 0.7, 1.9 }) {
      const double direct = quad::integrate_or_throw(
        [&](double t) { return k.eval(t) * k.eval(u - t); }, -20.0, 20.0,
        1e-10, 1e-13);
      worst_pointwise =
        std::max(worst_pointwise, std::abs(direct - k.self_convolution(u)));
    }
    const double mass = quad::integrate_or_throw(
      [&](double u) { return k.self_convolution(u); }, -25.0, 25.0, 1e-10);
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
  }
  DiagResult r;
  r.name = "selfconv-closed-form";
  r.pass = worst_pointwise <= 1e-8 * tol_scale && worst_mass <= 1e-7 * tol_scale;
  r.detail = "pointwise |err| = " + fmt(worst_pointwise) + " (bound " +
             fmt(1e-8 * tol_scale) + "), mass |err| = " + fmt(worst_mass) +
             " (bound " + fmt(1e-7 * tol_scale) + ")";
  return r;
}

DiagResult
check_square_decomp(double tol_scale)
{
  RngStream s(kDiagSeed);
  RngStream stream = s.derive(kDiagPurpose).derive(1);
  // random smooth symmetric f with constant diagonal
  const double a = 1.0 + stream.next_uniform01();
  const double b = stream.next_uniform01();
  SymKernelFn f{ [a, b](double x, double y) {
                  return a * std::exp(-b * (x - y) * (x - y));
                },
                 a };
  const std::vector<double> xs = stream.standard_normal(40);
  const double n = static_cast<double>(xs.size());
  const double full = v_statistic(f, xs, xs);
  double off = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (i != j) {
        off += f.f(xs[i], xs[j]);
      }
    }
  }
  const double split = f.tau / n + off / (n * n);
  return check_bound("vstat-square-decomp", std::abs(full - split),
                     1e-12 * tol_scale);
}

DiagResult
check_closed_vs_quadrature(double tol_scale)
{
  RngStream s(kDiagSeed);
  RngStream stream = s.derive(kDiagPurpose).derive(2);
  const Sample sample(stream.standard_normal(25));
  double worst = 0.0;
  for (PairKernel which : { PairKernel::kernel_h, PairKernel::selfconv_h }) {
    const GaussianPairKernel f{ Kernel(KernelId::gauss), 0.5, which };
    const SymKernelFn fn = f.fn();
    // empirical-population cross term by quadrature
    double v_n0_quad = 0.0;
    for (double x : sample.points()) {
      v_n0_quad += quad::integrate_or_throw(
        [&](double y) { return fn.f(x, y) * stats::normal_pdf(y); }, -14.0,
        14.0, 1e-10, 1e-13);
    }
    v_n0_quad /= static_cast<double>(sample.size());
    double v_n0_closed = 0.0;
    for (double x : sample.points()) {
      v_n0_closed += f.against_population(x);
    }
    v_n0_closed /= static_cast<double>(sample.size());
    worst = std::max(worst, std::abs(v_n0_quad - v_n0_closed));
    // population-population term by iterated quadrature
    const double v_00_quad = quad::integrate_or_throw(
      [&](double x) {
        return stats::normal_pdf(x) *
               quad::integrate_or_throw(
                 [&](double y) { return fn.f(x, y) * stats::normal_pdf(y); },
                 -14.0, 14.0, 1e-10, 1e-13);
      },
      -14.0, 14.0, 1e-9, 1e-12);
    worst = std::max(worst, std::abs(v_00_quad - f.population_population()));
  }
  return check_bound("signed-v-closed-vs-quadrature", worst, 1e-7 * tol_scale);
}

DiagResult
check_diagonal_mean(PairKernel which, const std::string& name, double tol_scale)
{
  const std::size_t reps = 500;
  const std::size_t n = 200;
  const double h = 0.3;
  const GaussianPairKernel f{ Kernel(KernelId::gauss), h, which };
  RngStream s(kDiagSeed);
  RngStream stream =
    s.derive(kDiagPurpose).derive(which == PairKernel::kernel_h ? 3 : 4);
  std::vector<double> values(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream rep_stream = stream.derive(static_cast<std::uint32_t>(r));
    const Sample sample(rep_stream.standard_normal(n));
    values[r] = signed_v_integral(f, sample);
  }
  const double m = stats::mean(values);
  const double se = stats::sample_sd(values) / std::sqrt(static_cast<double>(reps));
  const double target = f.tau() / static_cast<double>(n);
  const double bound = (3.0 * se + 2.0 / static_cast<double>(n)) * tol_scale;
  return check_bound(name, std::abs(m - target), bound);
}

DiagResult
check_onestep_remainder(double tol_scale)
{
  RngStream s(kDiagSeed);
  RngStream stream = s.derive(kDiagPurpose).derive(5);
  const Kernel k(KernelId::gauss);
  double worst = 0.0;
  for (int d = 0; d < 5; ++d) {
    RngStream rep = stream.derive(d);
    const Sample sample(rep.standard_normal(30));
    const double h = 0.4 + 0.1 * d;
    const DensityEstimate density = fit(sample, k, h);
    // one-step value minus truth minus the centered linear term, with the
    // population pieces integrated numerically
    const double psi1 = 2.0 * mean_under_empirical(density, sample) -
                        integral_of_square(density);
    const double psi0 = 0.5 / std::sqrt(stats::pi);
    const double pop_eta = quad::integrate_or_throw(
      [&](double x) { return density.eval(x) * stats::normal_pdf(x); },
      density.support_lo() - 5.0, density.support_hi() + 5.0, 1e-10, 1e-13);
    const double linear = 2.0 * mean_under_empirical(density, sample) -
                          2.0 * pop_eta;
    const double lhs = psi1 - psi0 - linear;
    worst = std::max(worst, std::abs(lhs - onestep_remainder(density)));
  }
  return check_bound("onestep-remainder-identity", worst, 1e-6 * tol_scale);
}

DiagResult
check_plugin_bias(double tol_scale)
{
  RngStream s(kDiagSeed);
  RngStream stream = s.derive(kDiagPurpose).derive(6);
  const Sample sample(stream.standard_normal(60));
  const Kernel k(KernelId::gauss);
  const double h = 0.35;
  const DensityEstimate density = fit(sample, k, h);
  const double term = plugin_bias_term(density, sample);
  const auto& x = sample.points();
  const double n = static_cast<double>(x.size());
  double direct = 0.0;
  for (double xi : x) {
    for (double xj : x) {
      direct += k.self_convolution((xi - xj) / h) - k.eval((xi - xj) / h);
    }
  }
  direct /= n * n * h;
  return check_bound("plugin-bias-double-sum", std::abs(term - direct),
                     1e-12 * tol_scale);
}

} // namespace

std::vector<std::pair<std::string, std::string>>
diag_checks()
{
  return {
    { "kernel-mass", "unit mass and zero first moment of both kernels" },
    { "kernel-moments", "vanishing second and third moments of gauss4" },
    { "selfconv-closed-form",
      "closed-form self-convolutions match direct quadrature" },
    { "vstat-square-decomp",
      "V-statistic splits into diagonal tau/n plus off-diagonal part" },
    { "signed-v-closed-vs-quadrature",
      "Gaussian population terms match iterated quadrature" },
    { "diagonal-mean-kh",
      "Monte Carlo mean of the signed V-integral is tau/n for K_h" },
    { "diagonal-mean-kkh",
      "Monte Carlo mean of the signed V-integral is tau/n for (K*K)_h" },
    { "onestep-remainder-identity",
      "one-step remainder equals the negated squared L2 error" },
    { "plugin-bias-double-sum",
      "plug-in bias equals the explicit pair double sum" },
  };
}

DiagResult
run_diag_check(const std::string& name, double tol_scale)
{
  if (name == "kernel-mass") {
    return check_kernel_mass(tol_scale);
  }
  if (name == "kernel-moments") {
    return check_kernel_moments(tol_scale);
  }
  if (name == "selfconv-closed-form") {
    return check_selfconv(tol_scale);
  }
  if (name == "vstat-square-decomp") {
    return check_square_decomp(tol_scale);
  }
  if (name == "signed-v-closed-vs-quadrature") {
    return check_closed_vs_quadrature(tol_scale);
  }
  if (name == "diagonal-mean-kh") {
    return check_diagonal_mean(PairKernel::kernel_h, "diagonal-mean-kh",
                               tol_scale);
  }
  if (name == "diagonal-mean-kkh") {
    return check_diagonal_mean(PairKernel::selfconv_h, "diagonal-mean-kkh",
                               tol_scale);
  }
  if (name == "onestep-remainder-identity") {
    return check_onestep_remainder(tol_scale);
  }
  if (name == "plugin-bias-double-sum") {
    return check_plugin_bias(tol_scale);
  }
  throw domain_error("unknown diag check '" + name + "'");
}

std::vector<DiagResult>
run_all_diag_checks(double tol_scale)
{
  std::vector<DiagResult> out;
  for (const auto& [name, desc] : diag_checks()) {
    (void)desc;
    out.push_back(run_diag_check(name, tol_scale));
  }
  return out;
}

} // namespace vstat
} // namespace bootlin
