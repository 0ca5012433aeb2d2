#include "bootlin/intervals.hpp"

#include "bootlin/errors.hpp"
#include "bootlin/stats.hpp"

#include <algorithm>
#include <cmath>

namespace bootlin {

IntervalMethod
interval_method_from_string(const std::string& id)
{
  if (id == "wald") {
    return IntervalMethod::wald;
  }
  if (id == "perc") {
    return IntervalMethod::percentile;
  }
  if (id == "perct") {
    return IntervalMethod::percentile_t;
  }
  if (id == "efron") {
    return IntervalMethod::efron;
  }
  if (id == "bwald") {
    return IntervalMethod::bootstrap_wald;
  }
  throw domain_error("unknown interval method '" + id +
                     "' (expected wald|perc|perct|efron|bwald)");
}

std::string
to_string(IntervalMethod m)
{
  switch (m) {
    case IntervalMethod::wald:
      return "wald";
    case IntervalMethod::percentile:
      return "perc";
    case IntervalMethod::percentile_t:
      return "perct";
    case IntervalMethod::efron:
      return "efron";
    case IntervalMethod::bootstrap_wald:
      return "bwald";
  }
  return "?";
}

IntervalSpec::IntervalSpec(double a, double b, IntervalMethod m)
  : alpha(a)
  , beta(b)
  , method(m)
{
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) ||
      !(alpha + beta < 1.0)) {
    throw domain_error("IntervalSpec: need alpha, beta in (0,1), alpha+beta < 1");
  }
}

IntervalSpec
IntervalSpec::equi_tailed(double level, IntervalMethod method)
{
  if (!(level > 0.0 && level < 1.0)) {
    throw domain_error("IntervalSpec: level must lie in (0, 1)");
  }
  const double tail = 0.5 * (1.0 - level);
  return IntervalSpec(tail, tail, method);
}

double
lower_quantile(std::vector<double> values, double p)
{
  if (values.empty()) {
    throw domain_error("lower_quantile: empty input");
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw domain_error("lower_quantile: p must lie in (0, 1]");
  }
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(p * static_cast<double>(values.size()));
  auto idx = static_cast<std::size_t>(rank);
  idx = std::min(std::max<std::size_t>(idx, 1), values.size());
  return values[idx - 1];
}

Interval
wald(double psi_hat, double sigma_hat, const IntervalSpec& spec, std::size_t n)
{
  if (sigma_hat < 0.0) {
    throw domain_error("wald: sigma must be nonnegative");
  }
  const double scale = sigma_hat / std::sqrt(static_cast<double>(n));
  return { psi_hat + stats::normal_quantile(spec.beta) * scale,
           psi_hat + stats::normal_quantile(1.0 - spec.alpha) * scale };
}

Interval
percentile(double psi_hat, const std::vector<double>& psi_star, double center,
           const IntervalSpec& spec)
{
  std::vector<double> dev(psi_star.size());
  for (std::size_t b = 0; b < psi_star.size(); ++b) {
    dev[b] = psi_star[b] - center;
  }
  const double hi_q = lower_quantile(dev, 1.0 - spec.alpha);
  const double lo_q = lower_quantile(dev, spec.beta);
  return { psi_hat - hi_q, psi_hat - lo_q };
}

Interval
percentile_t(double psi_hat, double sigma_hat,
             const std::vector<double>& psi_star,
             const std::vector<double>& sigma_star, double center,
             const IntervalSpec& spec)
{
  if (psi_star.size() != sigma_star.size()) {
    throw domain_error("percentile_t: psi_star and sigma_star sizes differ");
  }
  if (!(sigma_hat > 0.0)) {
    throw studentization_error("percentile_t: zero scale on the original data",
                               0);
  }
  std::vector<double> dev(psi_star.size());
  for (std::size_t b = 0; b < psi_star.size(); ++b) {
    if (!(sigma_star[b] > 0.0)) {
      throw studentization_error(
        "percentile_t: replicate " + std::to_string(b) + " has zero scale", b);
    }
    dev[b] = (psi_star[b] - center) / sigma_star[b];
  }
  const double hi_q = lower_quantile(dev, 1.0 - spec.alpha);
  const double lo_q = lower_quantile(dev, spec.beta);
  return { psi_hat - hi_q * sigma_hat, psi_hat - lo_q * sigma_hat };
}

Interval
efron(const std::vector<double>& psi_star, const IntervalSpec& spec)
{
  return { lower_quantile(psi_star, spec.beta),
           lower_quantile(psi_star, 1.0 - spec.alpha) };
}

Interval
bootstrap_wald(double psi_hat, const std::vector<double>& psi_star,
               double center, const IntervalSpec& spec, std::size_t n)
{
  if (psi_star.size() < 2) {
    throw domain_error("bootstrap_wald: need at least two replicates");
  }
  double s = 0.0;
  for (double v : psi_star) {
    const double d = v - center;
    s += d * d;
  }
  const double var = static_cast<double>(n) * s /
                     static_cast<double>(psi_star.size());
  const double scale = std::sqrt(var / static_cast<double>(n));
  return { psi_hat + stats::normal_quantile(spec.beta) * scale,
           psi_hat + stats::normal_quantile(1.0 - spec.alpha) * scale };
}

} // namespace bootlin
