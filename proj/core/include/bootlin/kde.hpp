#pragma once

#include "bootlin/kernels.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bootlin {

//! One-dimensional i.i.d. sample. Construction validates that the sample
//! is nonempty and every point is finite.
class Sample
{
public:
  explicit Sample(std::vector<double> points);

  std::size_t size() const { return points_->size(); }
  const std::vector<double>& points() const { return *points_; }
  double min() const { return min_; }
  double max() const { return max_; }

private:
  std::shared_ptr<const std::vector<double>> points_;
  double min_;
  double max_;
};

//! How the bandwidth is chosen: fixed value, Silverman's rule of thumb,
//! Sheather-Jones solve-the-equation plug-in, or an undersmoothed version
//! of another rule (base bandwidth divided by n^exponent).
class BandwidthRule
{
public:
  enum class Kind
  {
    fixed,
    silverman,
    sheather_jones,
    undersmoothed,
  };

  static BandwidthRule fixed(double h);
  static BandwidthRule silverman();
  static BandwidthRule sheather_jones();
  static BandwidthRule undersmoothed(BandwidthRule base, double exponent);

  //! Parse "fixed:H" | "silverman" | "sj" | "us:RULE:EXP",
  //! e.g. "us:sj:0.1" is the Sheather-Jones bandwidth divided by n^0.1.
  static BandwidthRule from_string(const std::string& text);
  std::string to_string() const;

  Kind kind() const { return kind_; }
  double fixed_h() const { return fixed_h_; }
  double exponent() const { return exponent_; }
  const BandwidthRule& base() const { return *base_; }

private:
  BandwidthRule() = default;

  Kind kind_ = Kind::silverman;
  double fixed_h_ = 0.0;
  double exponent_ = 0.0;
  std::shared_ptr<const BandwidthRule> base_;
};

//! Result of bandwidth selection. `used_fallback` is set when the
//! Sheather-Jones root finder failed and Silverman's value was used.
struct BandwidthSelection
{
  double h = 0.0;
  bool used_fallback = false;
};

BandwidthSelection select_bandwidth_detailed(const BandwidthRule& rule,
                                             const Sample& sample);

//! Bandwidth only; see select_bandwidth_detailed for the fallback flag.
double select_bandwidth(const BandwidthRule& rule, const Sample& sample);

//! Exponential-tilt fluctuation applied on top of a fitted KDE:
//! eta(x) = base(x) * exp(2 * epsilon * base(x)) / normalizer.
struct Fluctuation
{
  double epsilon = 0.0;
  double anchor_psi = 0.0; // squared-density integral of the base estimate
  double normalizer = 1.0;
};

//! A fitted kernel density estimate, optionally carrying a targeting
//! fluctuation. Immutable after construction; evaluation is pure.
class DensityEstimate
{
public:
  DensityEstimate(Sample sample, Kernel kernel, double bandwidth);

  const Sample& sample() const { return sample_; }
  const Kernel& kernel() const { return kernel_; }
  double bandwidth() const { return h_; }
  const std::optional<Fluctuation>& fluctuation() const { return fluct_; }

  //! Density value at x (fluctuation-aware).
  double eval(double x) const;

  //! Value of the plain KDE underneath any fluctuation.
  double base_eval(double x) const;

  //! Integration window [min - 10h, max + 10h]; the Gaussian tails beyond
  //! it are far below every tolerance used here.
  double support_lo() const;
  double support_hi() const;

  //! Internal: attach a fluctuation (used by tmle_target).
  DensityEstimate with_fluctuation(const Fluctuation& f) const;

private:
  Sample sample_;
  Kernel kernel_;
  double h_;
  std::optional<Fluctuation> fluct_;
};

//! Fit a KDE with the given kernel and bandwidth (h > 0).
DensityEstimate fit(const Sample& sample, const Kernel& kernel, double h);

//! Integral of the squared density. Without a fluctuation this is the
//! exact double sum over pairs through the kernel self-convolution;
//! with a fluctuation it falls back to adaptive quadrature (rel 1e-8).
double integral_of_square(const DensityEstimate& density);

//! Mean of the density over the supplied sample, which may differ from
//! the fitting sample.
double mean_under_empirical(const DensityEstimate& density, const Sample& sample);

//! Integral of the product of two densities. Closed form when both are
//! unfluctuated Gaussian-kernel estimates; quadrature otherwise.
double cross_inner_product(const DensityEstimate& a, const DensityEstimate& b);

//! Tilt the density so the empirical mean of its own centered score
//! 2 eta(x) - 2 psi(eta) is within tol of zero. The tilt is exponential in
//! the initial density and renormalized on a fixed fine grid over the
//! support window. Throws targeting_failure when the score equation
//! cannot be solved to tolerance within max_iter bracket expansions.
DensityEstimate tmle_target(const DensityEstimate& initial,
                            const Sample& sample,
                            double tol = 1e-8,
                            int max_iter = 20);

namespace detail {

//! Targeting with externally supplied density values: grid_vals holds the
//! base density on the uniform targeting grid over [lo, hi], data_vals the
//! base density at the sample points. Lets the replicate engine reuse
//! binned evaluations.
struct TmleSolution
{
  Fluctuation fluctuation;
  double last_score = 0.0;
  bool converged = false;
};

TmleSolution solve_tilt(const std::vector<double>& grid_vals,
                        double lo,
                        double hi,
                        const std::vector<double>& data_vals,
                        double tol,
                        int max_iter);

} // namespace detail

} // namespace bootlin
