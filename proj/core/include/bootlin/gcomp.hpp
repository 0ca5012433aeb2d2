#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace bootlin {
namespace gcomp {

//! Sample of (outcome, binary treatment, scalar covariate) rows.
//! Construction validates equal lengths and that both arms are nonempty.
struct CausalSample
{
  std::vector<double> y;
  std::vector<int> a;
  std::vector<double> z;

  CausalSample(std::vector<double> y, std::vector<int> a, std::vector<double> z);
  std::size_t size() const { return y.size(); }
};

//! Parse CSV with header "y,a,z"; a must be literally 0 or 1.
CausalSample read_causal_csv(std::istream& in);
CausalSample read_causal_csv(const std::string& path);

struct MuMethod
{
  enum class Kind
  {
    linear,
    kernel,
  };
  Kind kind = Kind::linear;
  double h = 0.0; // kernel only

  static MuMethod linear() { return {}; }
  static MuMethod kernel(double h);
  static MuMethod from_string(const std::string& text); // "linear"|"kernel:H"
  std::string to_string() const;
};

struct GMethod
{
  enum class Kind
  {
    logistic,
    kernel,
  };
  Kind kind = Kind::logistic;
  double h = 0.0;

  static GMethod logistic() { return {}; }
  static GMethod kernel(double h);
  static GMethod from_string(const std::string& text); // "logistic"|"kernel:H"
  std::string to_string() const;
};

//! Outcome-regression and propensity fitting choices plus the propensity
//! truncation bounds.
struct NuisanceSpec
{
  MuMethod mu = MuMethod::linear();
  GMethod g = GMethod::logistic();
  double trunc_lo = 0.01;
  double trunc_hi = 0.99;
};

//! Fitted nuisance: outcome regression on the control arm, truncated
//! propensity, and pi = mean of g over the observed covariates. Immutable;
//! evaluation is pure.
struct GcompNuisance
{
  std::function<double(double)> mu;
  std::function<double(double)> g; // already truncated into [lo, hi]
  double pi = 0.0;                 // integral of g under the empirical covariates
  double trunc_lo = 0.0;
  double trunc_hi = 1.0;
  bool q_is_empirical = true;
};

//! Fit mu on controls and g on all rows, clamp g into [lo, hi], compute pi.
GcompNuisance fit_nuisance(const CausalSample& data, const NuisanceSpec& spec);

//! Wrap externally supplied nuisance functions (e.g. the data-generating
//! truth); g is truncated and pi computed on the given data.
GcompNuisance nuisance_from_functions(const std::function<double(double)>& mu,
                                      const std::function<double(double)>& g,
                                      const CausalSample& data,
                                      double trunc_lo = 0.01,
                                      double trunc_hi = 0.99);

//! Estimating-equations estimator: inverse-probability-weighted control
//! residuals plus the treated-arm regression mean, both scaled by the
//! empirical treated fraction.
double estimate_ee(const CausalSample& data, const GcompNuisance& eta);

//! One-step estimator; differs from estimate_ee through the factor
//! (2 - pibar/pi) and the use of pi = integral of g rather than the
//! treated fraction pibar. Equals estimate_ee when pi == pibar.
double estimate_onestep(const CausalSample& data, const GcompNuisance& eta);

//! Influence function rows at the given estimate, using pi from eta.
std::vector<double> influence_values_gcomp(const CausalSample& data,
                                           const GcompNuisance& eta,
                                           double psi_hat);

enum class GcompConstruction
{
  onestep,
  ee,
};

GcompConstruction gcomp_construction_from_string(const std::string& id);
std::string to_string(GcompConstruction c);

double estimate(GcompConstruction c, const CausalSample& data,
                const GcompNuisance& eta);

} // namespace gcomp
} // namespace bootlin
