#include "bootlin/density_param.hpp"

#include "bootlin/errors.hpp"

#include <cmath>

namespace bootlin {

Construction
construction_from_string(const std::string& id)
{
  if (id == "onestep") {
    return Construction::onestep;
  }
  if (id == "plugin") {
    return Construction::plugin;
  }
  if (id == "meanplugin") {
    return Construction::empirical_mean;
  }
  throw domain_error("unknown construction '" + id +
                     "' (expected onestep|plugin|meanplugin)");
}

std::string
to_string(Construction c)
{
  switch (c) {
    case Construction::onestep:
      return "onestep";
    case Construction::plugin:
      return "plugin";
    case Construction::empirical_mean:
      return "meanplugin";
  }
  return "?";
}

double
estimate(Construction c, const DensityEstimate& density, const Sample& sample)
{
  switch (c) {
    case Construction::onestep:
      return 2.0 * mean_under_empirical(density, sample) -
             integral_of_square(density);
    case Construction::plugin:
      return integral_of_square(density);
    case Construction::empirical_mean:
      return mean_under_empirical(density, sample);
  }
  throw domain_error("estimate: unknown construction");
}

std::vector<double>
influence_values(const DensityEstimate& density, double psi_hat,
                 const Sample& sample)
{
  std::vector<double> out(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out[i] = 2.0 * density.eval(sample.points()[i]) - 2.0 * psi_hat;
  }
  return out;
}

double
sigma_if(const std::vector<double>& if_values)
{
  if (if_values.empty()) {
    throw domain_error("sigma_if: empty influence values");
  }
  double s = 0.0;
  for (double v : if_values) {
    s += v * v;
  }
  return std::sqrt(s / static_cast<double>(if_values.size()));
}

double
center_at(Construction c, const DensityEstimate& density,
          const std::optional<DensityEstimate>& scheme_density,
          const Sample& sample)
{
  if (!scheme_density) {
    return estimate(c, density, sample);
  }
  switch (c) {
    case Construction::onestep:
      return 2.0 * cross_inner_product(density, *scheme_density) -
             integral_of_square(density);
    case Construction::plugin:
      return integral_of_square(density);
    case Construction::empirical_mean:
      return cross_inner_product(density, *scheme_density);
  }
  throw domain_error("center_at: unknown construction");
}

EstimatorReport
make_report(Construction c, const DensityEstimate& density,
            const std::optional<DensityEstimate>& scheme_density,
            const Sample& sample)
{
  EstimatorReport r;
  r.psi_hat = estimate(c, density, sample);
  r.if_values = influence_values(density, r.psi_hat, sample);
  r.sigma_hat = sigma_if(r.if_values);
  r.center_at_sampling_dist = center_at(c, density, scheme_density, sample);
  return r;
}

} // namespace bootlin
