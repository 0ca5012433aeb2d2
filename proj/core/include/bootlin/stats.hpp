#pragma once

#include <cstddef>
#include <vector>

namespace bootlin {
namespace stats {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818685;

//! Density of N(0, 1) at x.
double normal_pdf(double x);

//! Density of N(mean, var) at x.
double normal_pdf(double x, double mean, double var);

//! CDF of N(0, 1) at x.
double normal_cdf(double x);

//! Lower-p quantile of N(0, 1), p in (0, 1). Wichura's AS 241 algorithm
//! (about 1e-15 relative accuracy).
double normal_quantile(double p);

double mean(const std::vector<double>& x);

//! Sample variance with the n-1 denominator.
double sample_variance(const std::vector<double>& x);

double sample_sd(const std::vector<double>& x);

//! Quantile of a sample with linear interpolation between order statistics
//! (the common "type 7" definition). Used for scale estimates, not for
//! bootstrap quantiles, which have their own rank rule in intervals.hpp.
double quantile_type7(std::vector<double> x, double p);

//! Interquartile range based on quantile_type7.
double iqr(const std::vector<double>& x);

} // namespace stats
} // namespace bootlin
