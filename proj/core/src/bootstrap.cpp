#include "bootlin/bootstrap.hpp"

#include "bootlin/detail/binned_sums.hpp"
#include "bootlin/detail/parallel.hpp"
#include "bootlin/errors.hpp"
#include "bootlin/quadrature.hpp"
#include "bootlin/stats.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace bootlin {

// ---------------------------------------------------------------------------
// BootstrapScheme

BootstrapScheme
BootstrapScheme::empirical()
{
  return BootstrapScheme{};
}

BootstrapScheme
BootstrapScheme::smooth_fitted()
{
  BootstrapScheme s;
  s.kind_ = Kind::smooth_fitted;
  return s;
}

BootstrapScheme
BootstrapScheme::smooth_independent(Kernel kernel, BandwidthRule rule, bool tmle)
{
  BootstrapScheme s;
  s.kind_ = Kind::smooth_independent;
  s.kernel_ = kernel;
  s.rule_ = std::move(rule);
  s.tmle_ = tmle;
  return s;
}

BootstrapScheme
BootstrapScheme::from_string(const std::string& text)
{
  if (text == "emp") {
    return empirical();
  }
  if (text == "smooth:fit") {
    return smooth_fitted();
  }
  if (text.rfind("smooth:", 0) == 0) {
    std::string rest = text.substr(7);
    const auto sep = rest.find(':');
    if (sep == std::string::npos) {
      throw domain_error("bad scheme '" + text +
                         "' (expected emp|smooth:fit|smooth:KERNEL:RULE[+tmle])");
    }
    const Kernel kernel = Kernel::from_string(rest.substr(0, sep));
    std::string rule = rest.substr(sep + 1);
    bool tmle = false;
    const std::string suffix = "+tmle";
    if (rule.size() > suffix.size() &&
        rule.compare(rule.size() - suffix.size(), suffix.size(), suffix) == 0) {
      tmle = true;
      rule.resize(rule.size() - suffix.size());
    }
    return smooth_independent(kernel, BandwidthRule::from_string(rule), tmle);
  }
  throw domain_error("bad scheme '" + text +
                     "' (expected emp|smooth:fit|smooth:KERNEL:RULE[+tmle])");
}

std::string
BootstrapScheme::to_string() const
{
  switch (kind_) {
    case Kind::empirical:
      return "emp";
    case Kind::smooth_fitted:
      return "smooth:fit";
    case Kind::smooth_independent: {
      std::ostringstream os;
      os << "smooth:" << kernel_.name() << ":" << rule_.to_string();
      if (tmle_) {
        os << "+tmle";
      }
      return os.str();
    }
  }
  return "?";
}

NuisancePolicy
nuisance_policy_from_string(const std::string& id)
{
  if (id == "refit") {
    return NuisancePolicy::refit_frozen;
  }
  if (id == "fixed") {
    return NuisancePolicy::fixed;
  }
  throw domain_error("unknown nuisance policy '" + id +
                     "' (expected refit|fixed)");
}

std::string
to_string(NuisancePolicy p)
{
  return p == NuisancePolicy::refit_frozen ? "refit" : "fixed";
}

std::vector<double>
ReplicateSet::valid_psi() const
{
  std::vector<double> out;
  out.reserve(psi_star.size());
  for (std::size_t b = 0; b < psi_star.size(); ++b) {
    if (valid[b]) {
      out.push_back(psi_star[b]);
    }
  }
  return out;
}

std::vector<double>
ReplicateSet::valid_sigma() const
{
  std::vector<double> out;
  out.reserve(sigma_star.size());
  for (std::size_t b = 0; b < sigma_star.size(); ++b) {
    if (valid[b]) {
      out.push_back(sigma_star[b]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

//! Draws i.i.d. points from a density estimate. Plain Gaussian KDEs use
//! index-plus-noise; fluctuated densities invert a tabulated CDF on a
//! uniform grid (piecewise-linear interpolation).
class SmoothSampler
{
public:
  explicit SmoothSampler(const DensityEstimate& density)
    : density_(density)
  {
    if (!density.kernel().supports_sampling()) {
      throw unsupported_operation(
        "smooth bootstrap needs a nonnegative sampling density; kernel '" +
        density.kernel().name() + "' is signed");
    }
    if (density_.fluctuation()) {
      build_cdf();
    }
  }

  std::vector<double> draw(std::size_t n, RngStream& index_stream,
                           RngStream& noise_stream) const
  {
    std::vector<double> out(n);
    if (!density_.fluctuation()) {
      const auto& pts = density_.sample().points();
      const double h = density_.bandwidth();
      const auto k = static_cast<std::uint32_t>(pts.size());
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = pts[index_stream.next_index(k)];
      }
      for (std::size_t i = 0; i < n; ++i) {
        out[i] += h * noise_stream.next_standard_normal();
      }
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = invert_cdf(index_stream.next_uniform01());
    }
    return out;
  }

private:
  static constexpr int kCdfGridSize = 4096;

  void build_cdf()
  {
    lo_ = density_.support_lo();
    const double hi = density_.support_hi();
    step_ = (hi - lo_) / (kCdfGridSize - 1);
    std::vector<double> vals(kCdfGridSize);
    for (int k = 0; k < kCdfGridSize; ++k) {
      vals[k] = std::max(density_.eval(lo_ + k * step_), 0.0);
    }
    cdf_.assign(kCdfGridSize, 0.0);
    for (int k = 1; k < kCdfGridSize; ++k) {
      cdf_[k] = cdf_[k - 1] + 0.5 * (vals[k - 1] + vals[k]) * step_;
    }
    const double total = cdf_.back();
    if (!(total > 0.0)) {
      throw numeric_error("smooth sampler: degenerate density", 0.0);
    }
    for (double& c : cdf_) {
      c /= total;
    }
  }

  double invert_cdf(double u) const
  {
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) {
      return lo_;
    }
    const auto k = static_cast<std::size_t>(it - cdf_.begin());
    if (k >= cdf_.size()) {
      return lo_ + step_ * (kCdfGridSize - 1);
    }
    const double c0 = cdf_[k - 1];
    const double c1 = cdf_[k];
    const double frac = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
    return lo_ + step_ * (static_cast<double>(k - 1) + frac);
  }

  DensityEstimate density_;
  double lo_ = 0.0;
  double step_ = 0.0;
  std::vector<double> cdf_;
};

std::vector<double>
draw_points(const BootstrapScheme& scheme, const Sample& sample,
            const SmoothSampler* sampler, RngStream& index_stream,
            RngStream& noise_stream)
{
  const std::size_t n = sample.size();
  if (scheme.kind() == BootstrapScheme::Kind::empirical) {
    const auto& pts = sample.points();
    std::vector<double> out(n);
    const auto k = static_cast<std::uint32_t>(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = pts[index_stream.next_index(k)];
    }
    return out;
  }
  return sampler->draw(n, index_stream, noise_stream);
}

} // namespace

std::optional<DensityEstimate>
resolve_scheme_density(const BootstrapScheme& scheme,
                       const DensityEstimate& nuisance, const Sample& sample)
{
  switch (scheme.kind()) {
    case BootstrapScheme::Kind::empirical:
      return std::nullopt;
    case BootstrapScheme::Kind::smooth_fitted:
      if (!nuisance.kernel().supports_sampling()) {
        throw unsupported_operation(
          "smooth bootstrap from the fitted nuisance needs a nonnegative "
          "density; kernel '" +
          nuisance.kernel().name() + "' is signed");
      }
      return nuisance;
    case BootstrapScheme::Kind::smooth_independent: {
      if (!scheme.kernel().supports_sampling()) {
        throw unsupported_operation(
          "smooth bootstrap sampling kernel '" + scheme.kernel().name() +
          "' is signed; only nonnegative kernels can be sampled");
      }
      const double h = select_bandwidth(scheme.rule(), sample);
      DensityEstimate d = fit(sample, scheme.kernel(), h);
      if (scheme.tmle()) {
        d = tmle_target(d, sample);
      }
      return d;
    }
  }
  throw domain_error("resolve_scheme_density: unknown scheme");
}

Sample
draw_bootstrap_sample(const BootstrapScheme& scheme, const Sample& sample,
                      const std::optional<DensityEstimate>& density,
                      RngStream& stream)
{
  if (scheme.is_smooth() && !density) {
    throw domain_error("draw_bootstrap_sample: smooth scheme needs a density");
  }
  std::unique_ptr<SmoothSampler> sampler;
  if (scheme.is_smooth()) {
    sampler = std::make_unique<SmoothSampler>(*density);
  }
  return Sample(draw_points(scheme, sample, sampler.get(), stream, stream));
}

// ---------------------------------------------------------------------------
// Replicate engine, average density value

namespace {

constexpr std::size_t kExactModeMaxN = 250;
constexpr int kBinnedGridSize = 2048;

struct ReplicateValue
{
  double psi = 0.0;
  double sigma = 0.0;
  bool ok = false;
};

double
sigma_from_density_values(const std::vector<double>& density_at_points,
                          double psi)
{
  double s = 0.0;
  for (double d : density_at_points) {
    const double phi = 2.0 * d - 2.0 * psi;
    s += phi * phi;
  }
  return std::sqrt(s / static_cast<double>(density_at_points.size()));
}

double
pick(Construction c, double mean_emp, double int_sq)
{
  switch (c) {
    case Construction::onestep:
      return 2.0 * mean_emp - int_sq;
    case Construction::plugin:
      return int_sq;
    case Construction::empirical_mean:
      return mean_emp;
  }
  return 0.0;
}

//! Shared state of one run_replicates call.
struct AvgDensityEngine
{
  Construction construction;
  const DensityEstimate& nuisance;
  const Sample& sample;
  BootstrapScheme scheme;
  NuisancePolicy policy;
  bool binned;

  double int_sq_nuisance = 0.0; // cached integral of the squared nuisance

  std::unique_ptr<SmoothSampler> sampler;
  std::unique_ptr<detail::BinnedKernelGrid> grid;
  std::vector<double> nuisance_conv; // kernel convolution of the data counts

  ReplicateValue replicate(std::size_t b, const RngStream& root) const;
  ReplicateValue exact_replicate(const std::vector<double>& points) const;
  ReplicateValue binned_replicate(const std::vector<double>& points) const;
};

ReplicateValue
AvgDensityEngine::replicate(std::size_t b, const RngStream& root) const
{
  RngStream child = root.derive(static_cast<std::uint32_t>(b));
  RngStream index_stream = child.derive(0);
  RngStream noise_stream = child.derive(1);
  try {
    const std::vector<double> points =
      draw_points(scheme, sample, sampler.get(), index_stream, noise_stream);
    ReplicateValue v = binned ? binned_replicate(points)
                              : exact_replicate(points);
    if (!std::isfinite(v.psi) || !std::isfinite(v.sigma)) {
      return {};
    }
    return v;
  } catch (const error&) {
    return {};
  }
}

ReplicateValue
AvgDensityEngine::exact_replicate(const std::vector<double>& points) const
{
  ReplicateValue out;
  const Sample boot(points);
  if (policy == NuisancePolicy::fixed) {
    const double mean_emp = mean_under_empirical(nuisance, boot);
    out.psi = pick(construction, mean_emp, int_sq_nuisance);
    std::vector<double> vals(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      vals[i] = nuisance.eval(points[i]);
    }
    out.sigma = sigma_from_density_values(vals, out.psi);
    out.ok = true;
    return out;
  }
  DensityEstimate star = fit(boot, nuisance.kernel(), nuisance.bandwidth());
  if (nuisance.fluctuation()) {
    star = tmle_target(star, boot);
  }
  out.psi = estimate(construction, star, boot);
  std::vector<double> vals(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    vals[i] = star.eval(points[i]);
  }
  out.sigma = sigma_from_density_values(vals, out.psi);
  out.ok = true;
  return out;
}

ReplicateValue
AvgDensityEngine::binned_replicate(const std::vector<double>& points) const
{
  ReplicateValue out;
  const double n = static_cast<double>(points.size());
  const double h = nuisance.bandwidth();

  if (policy == NuisancePolicy::fixed) {
    // Evaluate the frozen nuisance at the bootstrap points off its
    // precomputed grid convolution.
    std::vector<double> vals(points.size());
    const auto& fluct = nuisance.fluctuation();
    for (std::size_t i = 0; i < points.size(); ++i) {
      double base = grid->interp(nuisance_conv, points[i]) /
                    (static_cast<double>(sample.size()) * h);
      vals[i] = fluct ? base * std::exp(2.0 * fluct->epsilon * base) /
                          fluct->normalizer
                      : base;
    }
    double mean_emp = 0.0;
    for (double v : vals) {
      mean_emp += v;
    }
    mean_emp /= n;
    out.psi = pick(construction, mean_emp, int_sq_nuisance);
    out.sigma = sigma_from_density_values(vals, out.psi);
    out.ok = true;
    return out;
  }

  const std::vector<double> counts = grid->bin(points);
  std::vector<double> conv_k;
  grid->convolve_kernel(counts, conv_k);

  if (!nuisance.fluctuation()) {
    std::vector<double> conv_kk;
    grid->convolve_selfconv(counts, conv_kk);
    const double mean_emp = detail::BinnedKernelGrid::dot(counts, conv_k) /
                            (n * n * h);
    const double int_sq = detail::BinnedKernelGrid::dot(counts, conv_kk) /
                          (n * n * h);
    out.psi = pick(construction, mean_emp, int_sq);
    std::vector<double> vals(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      vals[i] = grid->interp(conv_k, points[i]) / (n * h);
    }
    out.sigma = sigma_from_density_values(vals, out.psi);
    out.ok = true;
    return out;
  }

  // Refit with targeting: grid values of the refit KDE feed the tilt solve.
  std::vector<double> grid_vals(conv_k.size());
  for (std::size_t k = 0; k < conv_k.size(); ++k) {
    grid_vals[k] = conv_k[k] / (n * h);
  }
  std::vector<double> data_vals(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    data_vals[i] = grid->interp(conv_k, points[i]) / (n * h);
  }
  const detail::TmleSolution sol =
    detail::solve_tilt(grid_vals, grid->lo(), grid->hi(), data_vals, 1e-8, 20);
  if (!sol.converged) {
    return {};
  }
  const double eps = sol.fluctuation.epsilon;
  const double c = sol.fluctuation.normalizer;
  std::vector<double> tilted_sq(grid_vals.size());
  for (std::size_t k = 0; k < grid_vals.size(); ++k) {
    const double t = grid_vals[k] * std::exp(2.0 * eps * grid_vals[k]);
    tilted_sq[k] = t * t;
  }
  const double step = grid->step();
  double int_sq = 0.5 * (tilted_sq.front() + tilted_sq.back());
  for (std::size_t k = 1; k + 1 < tilted_sq.size(); ++k) {
    int_sq += tilted_sq[k];
  }
  int_sq *= step / (c * c);
  std::vector<double> vals(points.size());
  double mean_emp = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    vals[i] = data_vals[i] * std::exp(2.0 * eps * data_vals[i]) / c;
    mean_emp += vals[i];
  }
  mean_emp /= n;
  out.psi = pick(construction, mean_emp, int_sq);
  out.sigma = sigma_from_density_values(vals, out.psi);
  out.ok = true;
  return out;
}

void
check_failures(ReplicateSet& reps)
{
  const double frac = static_cast<double>(reps.failures) /
                      static_cast<double>(std::max<std::size_t>(reps.size(), 1));
  if (frac > 0.01) {
    throw numeric_error("bootstrap: more than 1% of replicates failed", frac);
  }
}

} // namespace

ReplicateSet
run_replicates(Construction construction, const DensityEstimate& nuisance,
               const Sample& sample, const BootstrapScheme& scheme,
               NuisancePolicy policy, std::size_t B, const RngStream& stream,
               int threads, EngineMode mode)
{
  if (B < 1) {
    throw domain_error("run_replicates: B must be >= 1");
  }
  const std::optional<DensityEstimate> scheme_density =
    resolve_scheme_density(scheme, nuisance, sample);

  AvgDensityEngine engine{ construction, nuisance,          sample,
                           scheme,       policy,            false,
                           0.0,          nullptr,           nullptr,
                           {} };
  engine.binned = (mode == EngineMode::binned) ||
                  (mode == EngineMode::automatic &&
                   sample.size() > kExactModeMaxN);
  engine.int_sq_nuisance = integral_of_square(nuisance);
  if (scheme.is_smooth()) {
    engine.sampler = std::make_unique<SmoothSampler>(*scheme_density);
  }
  if (engine.binned) {
    const double h = nuisance.bandwidth();
    // Smooth draws add sampling-bandwidth noise around the data points; a
    // ten-bandwidth margin puts leaving the grid far below one in 1e20.
    double margin_h = h;
    if (scheme_density) {
      margin_h = std::max(margin_h, scheme_density->bandwidth());
    }
    const double margin = 10.0 * margin_h;
    engine.grid = std::make_unique<detail::BinnedKernelGrid>(
      sample.min() - margin, sample.max() + margin, kBinnedGridSize,
      nuisance.kernel(), h);
    const std::vector<double> counts = engine.grid->bin(sample.points());
    engine.grid->convolve_kernel(counts, engine.nuisance_conv);
  }

  ReplicateSet reps;
  reps.center = center_at(construction, nuisance, scheme_density, sample);
  reps.psi_star.assign(B, 0.0);
  reps.sigma_star.assign(B, 0.0);
  reps.valid.assign(B, 0);

  detail::parallel_for_indexed(B, threads, [&](std::size_t b) {
    const ReplicateValue v = engine.replicate(b, stream);
    reps.psi_star[b] = v.psi;
    reps.sigma_star[b] = v.sigma;
    reps.valid[b] = v.ok ? 1 : 0;
  });
  for (std::size_t b = 0; b < B; ++b) {
    if (!reps.valid[b]) {
      ++reps.failures;
    }
  }
  check_failures(reps);
  return reps;
}

// ---------------------------------------------------------------------------
// Replicate engine, G-computed conditional mean

ReplicateSet
run_gcomp_replicates(gcomp::GcompConstruction construction,
                     const gcomp::CausalSample& data,
                     const gcomp::GcompNuisance& nuisance,
                     const gcomp::NuisanceSpec& refit_spec,
                     NuisancePolicy policy, std::size_t B,
                     const RngStream& stream, int threads)
{
  if (B < 1) {
    throw domain_error("run_gcomp_replicates: B must be >= 1");
  }

  ReplicateSet reps;
  reps.center = gcomp::estimate(construction, data, nuisance);
  reps.psi_star.assign(B, 0.0);
  reps.sigma_star.assign(B, 0.0);
  reps.valid.assign(B, 0);

  const std::size_t n = data.size();
  detail::parallel_for_indexed(B, threads, [&](std::size_t b) {
    RngStream child = stream.derive(static_cast<std::uint32_t>(b));
    RngStream index_stream = child.derive(0);
    try {
      std::vector<double> y(n), z(n);
      std::vector<int> a(n);
      const auto k = static_cast<std::uint32_t>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(index_stream.next_index(k));
        y[i] = data.y[j];
        a[i] = data.a[j];
        z[i] = data.z[j];
      }
      const gcomp::CausalSample boot(std::move(y), std::move(a), std::move(z));
      gcomp::GcompNuisance star;
      if (policy == NuisancePolicy::refit_frozen) {
        star = gcomp::fit_nuisance(boot, refit_spec);
      } else {
        star = nuisance; // frozen functions, frozen pi
      }
      const double psi = gcomp::estimate(construction, boot, star);
      const double sigma =
        sigma_if(gcomp::influence_values_gcomp(boot, star, psi));
      if (!std::isfinite(psi) || !std::isfinite(sigma)) {
        return;
      }
      reps.psi_star[b] = psi;
      reps.sigma_star[b] = sigma;
      reps.valid[b] = 1;
    } catch (const error&) {
      // invalid replicate
    }
  });
  for (std::size_t b = 0; b < B; ++b) {
    if (!reps.valid[b]) {
      ++reps.failures;
    }
  }
  const double frac = static_cast<double>(reps.failures) /
                      static_cast<double>(std::max<std::size_t>(B, 1));
  if (frac > 0.01) {
    throw numeric_error("bootstrap: more than 1% of replicates failed", frac);
  }
  return reps;
}

} // namespace bootlin
