#include "bootlin/kernels.hpp"

#include "bootlin/errors.hpp"
#include "bootlin/stats.hpp"

#include <cmath>

namespace bootlin {

namespace {

// Normal density with variance 2, i.e. the Gaussian self-convolution.
double
gauss_conv(double u)
{
  return std::exp(-0.25 * u * u) / (2.0 * std::sqrt(stats::pi));
}

} // namespace

Kernel::Kernel(KernelId id)
  : id_(id)
{
}

Kernel
Kernel::from_string(const std::string& id)
{
  if (id == "gauss") {
    return Kernel(KernelId::gauss);
  }
  if (id == "gauss4") {
    return Kernel(KernelId::gauss4);
  }
  throw domain_error("unknown kernel id '" + id + "' (expected gauss|gauss4)");
}

std::string
Kernel::name() const
{
  return id_ == KernelId::gauss ? "gauss" : "gauss4";
}

int
Kernel::order() const
{
  return id_ == KernelId::gauss ? 2 : 4;
}

bool
Kernel::supports_sampling() const
{
  return id_ == KernelId::gauss;
}

double
Kernel::eval(double u) const
{
  const double phi = stats::normal_pdf(u);
  switch (id_) {
    case KernelId::gauss:
      return phi;
    case KernelId::gauss4:
      return (1.5 - 0.5 * u * u) * phi;
  }
  return 0.0; // unreachable
}

double
Kernel::self_convolution(double u) const
{
  switch (id_) {
    case KernelId::gauss:
      return gauss_conv(u);
    case KernelId::gauss4: {
      // Fourier side: the transform of gauss4 is (1 + t^2/2) exp(-t^2/2),
      // so the convolution is a degree-4 polynomial times the variance-2
      // Gaussian.
      const double u2 = u * u;
      return (27.0 / 16.0 - 7.0 / 16.0 * u2 + u2 * u2 / 64.0) * gauss_conv(u);
    }
  }
  return 0.0; // unreachable
}

std::vector<double>
Kernel::sample_noise(RngStream& stream, std::size_t n) const
{
  if (!supports_sampling()) {
    throw unsupported_operation(
      "kernel '" + name() +
      "' is signed and not a probability density; noise sampling is only "
      "defined for nonnegative kernels");
  }
  return stream.standard_normal(n);
}

} // namespace bootlin
