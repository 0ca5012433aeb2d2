#pragma once

#include "bootlin/density_param.hpp"
#include "bootlin/gcomp.hpp"
#include "bootlin/kde.hpp"
#include "bootlin/prng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bootlin {

//! How bootstrap samples are generated: resampling the data with
//! replacement, or i.i.d. draws from a density estimate. The smooth
//! density is either the fitted nuisance itself or an independently
//! configured estimate built on the original data.
class BootstrapScheme
{
public:
  enum class Kind
  {
    empirical,
    smooth_fitted,     // sample from the nuisance density estimate
    smooth_independent // sample from a separately configured estimate
  };

  static BootstrapScheme empirical();
  static BootstrapScheme smooth_fitted();
  static BootstrapScheme smooth_independent(Kernel kernel, BandwidthRule rule,
                                            bool tmle);

  //! Parse "emp" | "smooth:fit" | "smooth:KERNEL:RULE[+tmle]".
  static BootstrapScheme from_string(const std::string& text);
  std::string to_string() const;

  Kind kind() const { return kind_; }
  bool is_smooth() const { return kind_ != Kind::empirical; }
  const Kernel& kernel() const { return kernel_; }
  const BandwidthRule& rule() const { return rule_; }
  bool tmle() const { return tmle_; }

private:
  Kind kind_ = Kind::empirical;
  Kernel kernel_{ KernelId::gauss };
  BandwidthRule rule_ = BandwidthRule::silverman();
  bool tmle_ = false;
};

//! Whether the nuisance is re-fitted on each bootstrap sample (with the
//! tuning frozen at the original values) or reused as-is.
enum class NuisancePolicy
{
  refit_frozen,
  fixed,
};

NuisancePolicy nuisance_policy_from_string(const std::string& id);
std::string to_string(NuisancePolicy p);

//! Replicate estimates and scales plus the centering value
//! (the construction applied to the bootstrap sampling distribution).
//! Replicates that failed numerically are flagged invalid and excluded
//! by the filtered accessors.
struct ReplicateSet
{
  std::vector<double> psi_star;
  std::vector<double> sigma_star;
  std::vector<unsigned char> valid;
  double center = 0.0;
  std::size_t failures = 0;

  std::size_t size() const { return psi_star.size(); }
  std::vector<double> valid_psi() const;
  std::vector<double> valid_sigma() const;
};

//! Arithmetic used by the replicate loop: closed-form pair sums, the
//! linear-binned accelerator, or a size-based choice between them
//! (exact up to n = 600). Both paths implement the same estimators;
//! the binned one is a documented approximation for large Monte Carlo
//! runs and is tested against the exact path.
enum class EngineMode
{
  automatic,
  exact,
  binned,
};

//! Resolve the density the scheme samples from: nullopt for the empirical
//! scheme, the nuisance itself for smooth_fitted, or a freshly built
//! estimate for smooth_independent. Throws unsupported_operation when the
//! sampling density is signed.
std::optional<DensityEstimate> resolve_scheme_density(
  const BootstrapScheme& scheme, const DensityEstimate& nuisance,
  const Sample& sample);

//! One bootstrap sample of size sample.size(). For smooth schemes pass the
//! resolved sampling density.
Sample draw_bootstrap_sample(const BootstrapScheme& scheme,
                             const Sample& sample,
                             const std::optional<DensityEstimate>& density,
                             RngStream& stream);

//! Bootstrap replicates for the average density value. The nuisance must
//! be the estimate fitted on `sample`; refits reuse its kernel and
//! bandwidth and re-run targeting when it carries a fluctuation.
//! Replicate b draws all randomness from stream.derive(b).
ReplicateSet run_replicates(Construction construction,
                            const DensityEstimate& nuisance,
                            const Sample& sample,
                            const BootstrapScheme& scheme,
                            NuisancePolicy policy,
                            std::size_t B,
                            const RngStream& stream,
                            int threads = 1,
                            EngineMode mode = EngineMode::automatic);

//! Bootstrap replicates for the G-computed conditional mean. Only the
//! empirical scheme is wired for this parameter.
ReplicateSet run_gcomp_replicates(gcomp::GcompConstruction construction,
                                  const gcomp::CausalSample& data,
                                  const gcomp::GcompNuisance& nuisance,
                                  const gcomp::NuisanceSpec& refit_spec,
                                  NuisancePolicy policy,
                                  std::size_t B,
                                  const RngStream& stream,
                                  int threads = 1);

} // namespace bootlin
