#pragma once

#include "bootlin/kde.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bootlin {

//! Estimator constructions for the average density value.
//!
//! onestep:          2 P_n eta - integral(eta^2)
//! plugin:           integral(eta^2)
//! empirical_mean:   P_n eta (also the estimating-equations solution
//!                   for this parameter)
enum class Construction
{
  onestep,
  plugin,
  empirical_mean,
};

Construction construction_from_string(const std::string& id);
std::string to_string(Construction c);

//! Point estimate under the given construction.
double estimate(Construction c, const DensityEstimate& density,
                const Sample& sample);

//! Estimated influence function at each sample point:
//! phi(x) = 2 eta(x) - 2 psi_hat.
std::vector<double> influence_values(const DensityEstimate& density,
                                     double psi_hat, const Sample& sample);

//! Influence-function scale: sqrt of the uncentered mean of squares.
double sigma_if(const std::vector<double>& if_values);

//! Value of the construction applied to the bootstrap sampling
//! distribution: the quantity bootstrap replicates are centered around.
//! Pass the sampling density for smooth schemes, nullopt for the
//! empirical scheme.
double center_at(Construction c, const DensityEstimate& density,
                 const std::optional<DensityEstimate>& scheme_density,
                 const Sample& sample);

//! Point estimate, influence-function scale, per-point influence values,
//! and the bootstrap centering value.
struct EstimatorReport
{
  double psi_hat = 0.0;
  double sigma_hat = 0.0;
  double center_at_sampling_dist = 0.0;
  std::vector<double> if_values;
};

EstimatorReport make_report(Construction c, const DensityEstimate& density,
                            const std::optional<DensityEstimate>& scheme_density,
                            const Sample& sample);

} // namespace bootlin
