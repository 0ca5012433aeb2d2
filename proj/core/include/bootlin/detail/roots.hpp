#pragma once

#include <cmath>
#include <functional>

namespace bootlin {
namespace detail {

struct RootResult
{
  double x = 0.0;
  double fx = 0.0;
  bool converged = false;
};

//! Brent's method on [a, b]; requires f(a) and f(b) of opposite sign.
inline RootResult
brent(const std::function<double(double)>& f,
      double a,
      double b,
      double x_tol = 1e-14,
      int max_iter = 200)
{
  RootResult out;
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) {
    return { a, fa, true };
  }
  if (fb == 0.0) {
    return { b, fb, true };
  }
  if (fa * fb > 0.0) {
    return { b, fb, false };
  }
  double c = a;
  double fc = fa;
  double d = b - a;
  double e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * 1e-16 * std::abs(b) + 0.5 * x_tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) {
      return { b, fb, true };
    }
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      // inverse quadratic / secant step
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) {
        q = -q;
      }
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      e = b - a;
      d = e;
    }
  }
  return { b, fb, false };
}

} // namespace detail
} // namespace bootlin
