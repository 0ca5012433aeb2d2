#pragma once

#include "bootlin/prng.hpp"

#include <string>
#include <vector>

namespace bootlin {

enum class KernelId
{
  gauss,  // standard normal density, order 2
  gauss4, // (3/2 - u^2/2) * phi(u), order 4, signed
};

//! Symmetric kernel of declared order with exact pointwise evaluation and
//! exact self-convolution. The order-2 Gaussian is a probability density
//! and supports noise sampling; the fourth-order variant is signed and
//! does not.
class Kernel
{
public:
  explicit Kernel(KernelId id);

  //! Parse "gauss" | "gauss4".
  static Kernel from_string(const std::string& id);

  KernelId id() const { return id_; }
  std::string name() const;
  int order() const;
  bool supports_sampling() const;

  //! K(u).
  double eval(double u) const;

  //! (K * K)(u) = integral of K(t) K(u - t) dt, in closed form.
  double self_convolution(double u) const;

  //! i.i.d. draws with density K. Throws unsupported_operation for signed
  //! kernels.
  std::vector<double> sample_noise(RngStream& stream, std::size_t n) const;

  //! |u| beyond which both K and K*K are numerically negligible
  //! (below ~1e-22 of their peak). Used for truncated summation grids.
  double support_radius() const { return 16.0; }

  bool operator==(const Kernel& other) const { return id_ == other.id_; }

private:
  KernelId id_;
};

} // namespace bootlin
