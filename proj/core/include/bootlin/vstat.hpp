#pragma once

#include "bootlin/kde.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bootlin {
namespace vstat {

//! Symmetric two-argument kernel with a constant diagonal value tau.
struct SymKernelFn
{
  std::function<double(double, double)> f;
  double tau = 0.0;
};

//! Which of the two scaled pair kernels a Gaussian closed form exists for:
//! f1(x,y) = K_h(x-y) or f2(x,y) = (K*K)_h(x-y).
enum class PairKernel
{
  kernel_h,
  selfconv_h,
};

//! Pair kernel bound to a concrete kernel and bandwidth. Provides the
//! callable form, its diagonal value, and (for the Gaussian) the closed
//! forms of its integrals against the standard normal population.
struct GaussianPairKernel
{
  Kernel kernel{ KernelId::gauss };
  double h = 1.0;
  PairKernel which = PairKernel::kernel_h;

  SymKernelFn fn() const;
  double tau() const;
  //! integral of f(x, .) dPhi as a function of x (Gaussian closed form).
  double against_population(double x) const;
  //! double integral of f dPhi dPhi.
  double population_population() const;
};

//! Plain double-loop V-statistic: mean of f over the product of the two
//! point sets. No approximations.
double v_statistic(const SymKernelFn& f, const std::vector<double>& xs,
                   const std::vector<double>& ys);

//! Exact value of integral of f d[(P_n - P0) x (P_n - P0)] for the
//! standard normal population: the empirical double sum minus twice the
//! empirical-population cross term plus the population-population term,
//! the latter two in closed form.
double signed_v_integral(const GaussianPairKernel& f, const Sample& sample);

//! -integral of (eta(x) - phi(x))^2 dx by adaptive quadrature: the exact
//! remainder of the one-step construction under a standard normal truth.
double onestep_remainder(const DensityEstimate& density);

//! integral_of_square - mean_under_empirical on the fitting sample; the
//! bias term that separates the plug-in constructions from the one-step.
double plugin_bias_term(const DensityEstimate& density, const Sample& sample);

//! Exact finite-sample expectation of plugin_bias_term over standard
//! normal data for the Gaussian kernel at fixed n and h.
double expected_plugin_bias(std::size_t n, double h);

// ---------------------------------------------------------------------------
// Named property checks behind the `diag` command.

struct DiagResult
{
  std::string name;
  bool pass = false;
  std::string detail;
};

//! Names and one-line descriptions of all checks, in run order.
std::vector<std::pair<std::string, std::string>> diag_checks();

//! Run one check by name. tol_scale multiplies every tolerance and exists
//! so a harness can force failures; leave it at 1.
DiagResult run_diag_check(const std::string& name, double tol_scale = 1.0);

std::vector<DiagResult> run_all_diag_checks(double tol_scale = 1.0);

} // namespace vstat
} // namespace bootlin
