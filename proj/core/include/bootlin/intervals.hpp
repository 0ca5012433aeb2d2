#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bootlin {

enum class IntervalMethod
{
  wald,
  percentile,
  percentile_t,
  efron,
  bootstrap_wald,
};

IntervalMethod interval_method_from_string(const std::string& id);
std::string to_string(IntervalMethod m);

//! Tail masses and method for a two-sided interval of level
//! 1 - alpha - beta. equi_tailed(level) gives alpha = beta = (1-level)/2.
struct IntervalSpec
{
  double alpha = 0.025;
  double beta = 0.025;
  IntervalMethod method = IntervalMethod::wald;

  IntervalSpec() = default;
  IntervalSpec(double alpha, double beta, IntervalMethod method);
  static IntervalSpec equi_tailed(double level, IntervalMethod method);
};

struct Interval
{
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

//! Lower p-th quantile of a finite set of values: the order statistic of
//! rank ceil(p * B) (1-indexed), i.e. the inf-based quantile of the
//! discrete distribution. p in (0, 1].
double lower_quantile(std::vector<double> values, double p);

// The inputs below are the pieces of an EstimatorReport / ReplicateSet the
// methods actually use; keeping them scalar makes the functions usable for
// both implemented parameters.

//! [psi + z_beta sigma/sqrt(n), psi + z_{1-alpha} sigma/sqrt(n)].
Interval wald(double psi_hat, double sigma_hat, const IntervalSpec& spec,
              std::size_t n);

//! Quantiles of psi*_b - center, subtracted from psi_hat.
Interval percentile(double psi_hat, const std::vector<double>& psi_star,
                    double center, const IntervalSpec& spec);

//! Quantiles of (psi*_b - center)/sigma*_b, scaled by sigma_hat. Throws
//! studentization_error naming the first replicate with zero scale.
Interval percentile_t(double psi_hat, double sigma_hat,
                      const std::vector<double>& psi_star,
                      const std::vector<double>& sigma_star, double center,
                      const IntervalSpec& spec);

//! Raw replicate quantiles, no centering.
Interval efron(const std::vector<double>& psi_star, const IntervalSpec& spec);

//! Normal interval with the bootstrap variance
//! mean_b of n (psi*_b - center)^2.
Interval bootstrap_wald(double psi_hat, const std::vector<double>& psi_star,
                        double center, const IntervalSpec& spec, std::size_t n);

} // namespace bootlin
