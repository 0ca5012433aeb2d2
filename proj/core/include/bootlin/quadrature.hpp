#pragma once

#include <functional>

namespace bootlin {
namespace quad {

struct Result
{
  double value = 0.0;
  double error = 0.0; // estimated absolute error
  bool converged = false;
  int subdivisions = 0;
};

//! Adaptive Gauss-Kronrod (7-15) integration of f over [a, b].
//!
//! Splits the worst interval until the summed error estimate satisfies
//! err <= max(abs_tol, rel_tol * |value|) or the subdivision budget runs out.
Result integrate_adaptive(const std::function<double(double)>& f,
                          double a,
                          double b,
                          double rel_tol = 1e-8,
                          double abs_tol = 1e-12,
                          int max_subdivisions = 2000);

//! Like integrate_adaptive but throws numeric_error when not converged.
double integrate_or_throw(const std::function<double(double)>& f,
                          double a,
                          double b,
                          double rel_tol = 1e-8,
                          double abs_tol = 1e-12,
                          int max_subdivisions = 2000);

//! Fixed composite Simpson rule on n+1 equally spaced points (n even).
//! Used where a deterministic fixed-cost grid integral is preferable to
//! adaptive subdivision (renormalization of tilted densities).
double simpson(const std::function<double(double)>& f, double a, double b, int n);

} // namespace quad
} // namespace bootlin
