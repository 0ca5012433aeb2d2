#include "bootlin/detail/binned_sums.hpp"

#include "bootlin/errors.hpp"

#include <algorithm>
#include <cmath>

namespace bootlin {
namespace detail {

BinnedKernelGrid::BinnedKernelGrid(double lo, double hi, int nb, Kernel kernel,
                                   double h, double trunc_radius)
  : lo_(lo)
  , hi_(hi)
  , nb_(nb)
  , step_((hi - lo) / (nb - 1))
  , kernel_(kernel)
  , h_(h)
{
  if (!(hi > lo) || nb < 16) {
    throw domain_error("BinnedKernelGrid: bad grid");
  }
  if (!(h > 0.0)) {
    throw domain_error("BinnedKernelGrid: bandwidth must be positive");
  }
  const auto w = std::min<std::size_t>(
    static_cast<std::size_t>(trunc_radius * h / step_) + 1,
    static_cast<std::size_t>(nb));
  wk_.resize(w);
  wkk_.resize(w);
  for (std::size_t d = 0; d < w; ++d) {
    const double u = static_cast<double>(d) * step_ / h;
    wk_[d] = kernel_.eval(u);
    wkk_[d] = kernel_.self_convolution(u);
  }
}

std::vector<double>
BinnedKernelGrid::bin(const std::vector<double>& points) const
{
  std::vector<double> counts(nb_, 0.0);
  for (double x : points) {
    const double pos = (x - lo_) / step_;
    if (pos < 0.0 || pos > static_cast<double>(nb_ - 1)) {
      throw domain_error("BinnedKernelGrid: point outside grid");
    }
    auto k = static_cast<std::size_t>(pos);
    if (k >= static_cast<std::size_t>(nb_ - 1)) {
      k = nb_ - 2;
    }
    const double frac = pos - static_cast<double>(k);
    counts[k] += 1.0 - frac;
    counts[k + 1] += frac;
  }
  return counts;
}

void
BinnedKernelGrid::convolve(const std::vector<double>& counts,
                           const std::vector<double>& weights,
                           std::vector<double>& out) const
{
  const auto nb = static_cast<std::ptrdiff_t>(nb_);
  const auto w = static_cast<std::ptrdiff_t>(weights.size());
  out.assign(nb_, 0.0);
  const double* c = counts.data();
  double* o = out.data();
  for (std::ptrdiff_t k = 0; k < nb; ++k) {
    const double ck = c[k];
    if (ck == 0.0) {
      continue;
    }
    o[k] += ck * weights[0];
    const std::ptrdiff_t dmax = std::min(w, nb - k);
    for (std::ptrdiff_t d = 1; d < dmax; ++d) {
      o[k + d] += ck * weights[d];
    }
    const std::ptrdiff_t dmin = std::min(w, k + 1);
    for (std::ptrdiff_t d = 1; d < dmin; ++d) {
      o[k - d] += ck * weights[d];
    }
  }
}

void
BinnedKernelGrid::convolve_kernel(const std::vector<double>& counts,
                                  std::vector<double>& out) const
{
  convolve(counts, wk_, out);
}

void
BinnedKernelGrid::convolve_selfconv(const std::vector<double>& counts,
                                    std::vector<double>& out) const
{
  convolve(counts, wkk_, out);
}

double
BinnedKernelGrid::interp(const std::vector<double>& grid_vals, double x) const
{
  const double pos = (x - lo_) / step_;
  if (pos <= 0.0) {
    return grid_vals.front();
  }
  if (pos >= static_cast<double>(nb_ - 1)) {
    return grid_vals.back();
  }
  const auto k = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(k);
  return (1.0 - frac) * grid_vals[k] + frac * grid_vals[k + 1];
}

double
BinnedKernelGrid::dot(const std::vector<double>& counts,
                      const std::vector<double>& grid_vals)
{
  double s = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    s += counts[k] * grid_vals[k];
  }
  return s;
}

} // namespace detail
} // namespace bootlin
