#include "bootlin/kde.hpp"

#include "bootlin/detail/roots.hpp"
#include "bootlin/errors.hpp"
#include "bootlin/quadrature.hpp"
#include "bootlin/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace bootlin {

namespace {

constexpr int kTargetingGridSize = 4096;

//! Trapezoid integral of tabulated values on a uniform grid. For smooth
//! integrands that vanish at both ends all Euler-Maclaurin correction
//! terms vanish, so this is accurate far beyond its nominal order.
double
trapezoid(const std::vector<double>& vals, double lo, double hi)
{
  const std::size_t nb = vals.size();
  double s = 0.5 * (vals.front() + vals.back());
  for (std::size_t k = 1; k + 1 < nb; ++k) {
    s += vals[k];
  }
  return s * (hi - lo) / static_cast<double>(nb - 1);
}

} // namespace

// ---------------------------------------------------------------------------
// Sample

Sample::Sample(std::vector<double> points)
{
  if (points.empty()) {
    throw domain_error("Sample: need at least one observation");
  }
  for (double v : points) {
    if (!std::isfinite(v)) {
      throw domain_error("Sample: all points must be finite");
    }
  }
  auto [lo, hi] = std::minmax_element(points.begin(), points.end());
  min_ = *lo;
  max_ = *hi;
  points_ = std::make_shared<const std::vector<double>>(std::move(points));
}

// ---------------------------------------------------------------------------
// BandwidthRule

BandwidthRule
BandwidthRule::fixed(double h)
{
  if (!(h > 0.0)) {
    throw domain_error("BandwidthRule::fixed: h must be positive");
  }
  BandwidthRule r;
  r.kind_ = Kind::fixed;
  r.fixed_h_ = h;
  return r;
}

BandwidthRule
BandwidthRule::silverman()
{
  BandwidthRule r;
  r.kind_ = Kind::silverman;
  return r;
}

BandwidthRule
BandwidthRule::sheather_jones()
{
  BandwidthRule r;
  r.kind_ = Kind::sheather_jones;
  return r;
}

BandwidthRule
BandwidthRule::undersmoothed(BandwidthRule base, double exponent)
{
  if (!(exponent > 0.0)) {
    throw domain_error("BandwidthRule::undersmoothed: exponent must be positive");
  }
  BandwidthRule r;
  r.kind_ = Kind::undersmoothed;
  r.exponent_ = exponent;
  r.base_ = std::make_shared<const BandwidthRule>(std::move(base));
  return r;
}

BandwidthRule
BandwidthRule::from_string(const std::string& text)
{
  if (text == "silverman") {
    return silverman();
  }
  if (text == "sj") {
    return sheather_jones();
  }
  if (text.rfind("fixed:", 0) == 0) {
    try {
      return fixed(std::stod(text.substr(6)));
    } catch (const std::invalid_argument&) {
      throw domain_error("bad fixed bandwidth in '" + text + "'");
    }
  }
  if (text.rfind("us:", 0) == 0) {
    const auto sep = text.rfind(':');
    if (sep == 2) {
      throw domain_error("undersmoothed rule needs 'us:RULE:EXP', got '" + text +
                         "'");
    }
    const std::string base = text.substr(3, sep - 3);
    double expn = 0.0;
    try {
      expn = std::stod(text.substr(sep + 1));
    } catch (const std::invalid_argument&) {
      throw domain_error("bad undersmoothing exponent in '" + text + "'");
    }
    return undersmoothed(from_string(base), expn);
  }
  throw domain_error("unknown bandwidth rule '" + text +
                     "' (expected fixed:H|silverman|sj|us:RULE:EXP)");
}

std::string
BandwidthRule::to_string() const
{
  std::ostringstream os;
  switch (kind_) {
    case Kind::fixed:
      os << "fixed:" << fixed_h_;
      break;
    case Kind::silverman:
      os << "silverman";
      break;
    case Kind::sheather_jones:
      os << "sj";
      break;
    case Kind::undersmoothed:
      os << "us:" << base_->to_string() << ":" << exponent_;
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Bandwidth selection

namespace {

double
robust_scale(const std::vector<double>& x, double iqr_denominator)
{
  const double sd = stats::sample_sd(x);
  const double iq = stats::iqr(x) / iqr_denominator;
  double scale = (iq > 0.0) ? std::min(sd, iq) : sd;
  return scale;
}

double
silverman_bandwidth(const Sample& sample)
{
  if (sample.size() < 3) {
    throw insufficient_data("silverman bandwidth needs n >= 3");
  }
  const double scale = robust_scale(sample.points(), 1.34);
  if (!(scale > 0.0)) {
    throw degenerate_data("bandwidth selection: sample has zero scale");
  }
  return 0.9 * scale * std::pow(static_cast<double>(sample.size()), -0.2);
}

double
phi4(double x)
{
  const double x2 = x * x;
  return (x2 * x2 - 6.0 * x2 + 3.0) * stats::normal_pdf(x);
}

double
phi6(double x)
{
  const double x2 = x * x;
  return (x2 * x2 * x2 - 15.0 * x2 * x2 + 45.0 * x2 - 15.0) *
         stats::normal_pdf(x);
}

//! Pairwise-difference bin counts on a uniform grid (linear binning):
//! cnt[d] ~ #ordered pairs whose difference falls in bin d, including i=j.
struct PairCounts
{
  std::vector<double> cnt;
  double delta = 0.0;
};

PairCounts
pair_counts(const std::vector<double>& x, int nb)
{
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double lo = *mn;
  const double range = std::max(*mx - lo, 1e-12);
  const double delta = range / (nb - 1);
  std::vector<double> c(nb, 0.0);
  for (double v : x) {
    const double pos = (v - lo) / delta;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(pos), nb - 2);
    const double w = pos - static_cast<double>(k);
    c[k] += 1.0 - w;
    c[k + 1] += w;
  }
  PairCounts out;
  out.delta = delta;
  out.cnt.assign(nb, 0.0);
  for (int d = 0; d < nb; ++d) {
    double s = 0.0;
    for (int k = 0; k + d < nb; ++k) {
      s += c[k] * c[k + d];
    }
    out.cnt[d] = s;
  }
  return out;
}

double
pair_functional(const PairCounts& pc, double g, double (*f)(double), double n)
{
  // (n(n-1))^-1 sum over all ordered pairs of f((X_i-X_j)/g); diffs beyond
  // 10g contribute below 1e-20 and are skipped.
  const auto dmax = std::min<std::size_t>(
    pc.cnt.size(), static_cast<std::size_t>(10.0 * g / pc.delta) + 2);
  double s = pc.cnt[0] * f(0.0);
  for (std::size_t d = 1; d < dmax; ++d) {
    s += 2.0 * pc.cnt[d] * f(static_cast<double>(d) * pc.delta / g);
  }
  return s / (n * (n - 1.0));
}

//! Sheather-Jones solve-the-equation bandwidth, Gaussian kernel. Stage
//! functionals are evaluated on binned pairwise differences; the defining
//! equation is solved by bisection on [h_silverman/10, 10 h_silverman].
//! Returns nullopt when the bracket contains no root or a stage
//! functional loses positivity.
std::optional<double>
sheather_jones_bandwidth(const Sample& sample, double h_silverman)
{
  const auto& x = sample.points();
  const double n = static_cast<double>(sample.size());
  const double lambda = robust_scale(x, 1.349);
  if (!(lambda > 0.0)) {
    return std::nullopt;
  }
  const int nb = static_cast<int>(std::min<std::size_t>(sample.size(), 1024));
  const PairCounts pc = pair_counts(x, std::max(nb, 16));

  const double a = 0.920 * lambda * std::pow(n, -1.0 / 7.0);
  const double b = 0.912 * lambda * std::pow(n, -1.0 / 9.0);
  const double sda = pair_functional(pc, a, &phi4, n) / std::pow(a, 5);
  const double tdb = -pair_functional(pc, b, &phi6, n) / std::pow(b, 7);
  if (!(sda > 0.0) || !(tdb > 0.0)) {
    return std::nullopt;
  }
  const double rk = 0.5 / std::sqrt(stats::pi); // roughness of the kernel

  auto objective = [&](double h) {
    const double alpha = 1.357 * std::pow(sda / tdb, 1.0 / 7.0) *
                         std::pow(h, 5.0 / 7.0);
    const double sd_alpha = pair_functional(pc, alpha, &phi4, n) /
                            std::pow(alpha, 5);
    if (!(sd_alpha > 0.0)) {
      return std::nan("");
    }
    return std::pow(rk / (n * sd_alpha), 0.2) - h;
  };

  double lo = h_silverman / 10.0;
  double hi = h_silverman * 10.0;
  double flo = objective(lo);
  double fhi = objective(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi) || flo * fhi > 0.0) {
    return std::nullopt;
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = objective(mid);
    if (!std::isfinite(fmid)) {
      return std::nullopt;
    }
    if (flo * fmid <= 0.0) {
      hi = mid;
      fhi = fmid;
    } else {
      lo = mid;
      flo = fmid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace

BandwidthSelection
select_bandwidth_detailed(const BandwidthRule& rule, const Sample& sample)
{
  BandwidthSelection out;
  switch (rule.kind()) {
    case BandwidthRule::Kind::fixed:
      out.h = rule.fixed_h();
      return out;
    case BandwidthRule::Kind::silverman:
      out.h = silverman_bandwidth(sample);
      return out;
    case BandwidthRule::Kind::sheather_jones: {
      if (sample.size() < 3) {
        throw insufficient_data("sheather-jones bandwidth needs n >= 3");
      }
      const double hs = silverman_bandwidth(sample);
      if (auto h = sheather_jones_bandwidth(sample, hs)) {
        out.h = *h;
      } else {
        out.h = hs;
        out.used_fallback = true;
      }
      return out;
    }
    case BandwidthRule::Kind::undersmoothed: {
      out = select_bandwidth_detailed(rule.base(), sample);
      out.h /= std::pow(static_cast<double>(sample.size()), rule.exponent());
      return out;
    }
  }
  throw domain_error("select_bandwidth: unknown rule");
}

double
select_bandwidth(const BandwidthRule& rule, const Sample& sample)
{
  return select_bandwidth_detailed(rule, sample).h;
}

// ---------------------------------------------------------------------------
// DensityEstimate

DensityEstimate::DensityEstimate(Sample sample, Kernel kernel, double bandwidth)
  : sample_(std::move(sample))
  , kernel_(kernel)
  , h_(bandwidth)
{
  if (!(h_ > 0.0)) {
    throw domain_error("DensityEstimate: bandwidth must be positive");
  }
}

double
DensityEstimate::base_eval(double x) const
{
  const auto& pts = sample_.points();
  double s = 0.0;
  for (double xi : pts) {
    s += kernel_.eval((x - xi) / h_);
  }
  return s / (static_cast<double>(pts.size()) * h_);
}

double
DensityEstimate::eval(double x) const
{
  const double base = base_eval(x);
  if (!fluct_) {
    return base;
  }
  return base * std::exp(2.0 * fluct_->epsilon * base) / fluct_->normalizer;
}

double
DensityEstimate::support_lo() const
{
  return sample_.min() - 10.0 * h_;
}

double
DensityEstimate::support_hi() const
{
  return sample_.max() + 10.0 * h_;
}

DensityEstimate
DensityEstimate::with_fluctuation(const Fluctuation& f) const
{
  DensityEstimate out = *this;
  out.fluct_ = f;
  return out;
}

DensityEstimate
fit(const Sample& sample, const Kernel& kernel, double h)
{
  return DensityEstimate(sample, kernel, h);
}

// ---------------------------------------------------------------------------
// Integrals

double
integral_of_square(const DensityEstimate& density)
{
  if (!density.fluctuation()) {
    // sum over pairs of (K*K)((X_i - X_j)/h), diagonal included
    const auto& x = density.sample().points();
    const std::size_t n = x.size();
    const double h = density.bandwidth();
    const Kernel& k = density.kernel();
    double s = static_cast<double>(n) * k.self_convolution(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        s += 2.0 * k.self_convolution((x[i] - x[j]) / h);
      }
    }
    return s / (static_cast<double>(n) * static_cast<double>(n) * h);
  }
  return quad::integrate_or_throw(
    [&](double x) {
      const double v = density.eval(x);
      return v * v;
    },
    density.support_lo(), density.support_hi(), 1e-8);
}

double
mean_under_empirical(const DensityEstimate& density, const Sample& sample)
{
  double s = 0.0;
  for (double xi : sample.points()) {
    s += density.eval(xi);
  }
  return s / static_cast<double>(sample.size());
}

double
cross_inner_product(const DensityEstimate& a, const DensityEstimate& b)
{
  const bool closed_form = !a.fluctuation() && !b.fluctuation() &&
                           a.kernel().id() == KernelId::gauss &&
                           b.kernel().id() == KernelId::gauss;
  if (closed_form) {
    const auto& xa = a.sample().points();
    const auto& xb = b.sample().points();
    const double var = a.bandwidth() * a.bandwidth() +
                       b.bandwidth() * b.bandwidth();
    double s = 0.0;
    for (double xi : xa) {
      for (double yj : xb) {
        s += stats::normal_pdf(xi - yj, 0.0, var);
      }
    }
    return s / (static_cast<double>(xa.size()) * static_cast<double>(xb.size()));
  }
  const double lo = std::min(a.support_lo(), b.support_lo());
  const double hi = std::max(a.support_hi(), b.support_hi());
  return quad::integrate_or_throw(
    [&](double x) { return a.eval(x) * b.eval(x); }, lo, hi, 1e-8);
}

// ---------------------------------------------------------------------------
// Targeting

namespace detail {

TmleSolution
solve_tilt(const std::vector<double>& grid_vals,
           double lo,
           double hi,
           const std::vector<double>& data_vals,
           double tol,
           int max_iter)
{
  const double n = static_cast<double>(data_vals.size());

  struct ScoreParts
  {
    double normalizer;
    double score;
  };
  auto evaluate = [&](double eps) -> ScoreParts {
    std::vector<double> tilted(grid_vals.size());
    std::vector<double> tilted_sq(grid_vals.size());
    for (std::size_t k = 0; k < grid_vals.size(); ++k) {
      const double t = grid_vals[k] * std::exp(2.0 * eps * grid_vals[k]);
      tilted[k] = t;
      tilted_sq[k] = t * t;
    }
    const double c = trapezoid(tilted, lo, hi);
    const double int_sq = trapezoid(tilted_sq, lo, hi) / (c * c);
    double emp = 0.0;
    for (double b : data_vals) {
      emp += b * std::exp(2.0 * eps * b);
    }
    emp /= n * c;
    return { c, 2.0 * (emp - int_sq) };
  };

  TmleSolution out;
  const ScoreParts at_zero = evaluate(0.0);
  out.last_score = std::abs(at_zero.score);
  if (out.last_score <= tol) {
    out.fluctuation = Fluctuation{ 0.0, 0.0, at_zero.normalizer };
    out.converged = true;
    return out;
  }

  double bmax = 0.0;
  for (double v : grid_vals) {
    bmax = std::max(bmax, v);
  }
  if (!(bmax > 0.0)) {
    return out;
  }

  // Expand a symmetric bracket until the score changes sign, then polish
  // with Brent. Each expansion counts as one targeting iteration.
  double half = 0.5 / bmax; // tilt exponent reaches 1 at the first bracket
  for (int iter = 0; iter < max_iter; ++iter, half *= 2.0) {
    const double slo = evaluate(-half).score;
    const double shi = evaluate(half).score;
    out.last_score = std::min(out.last_score, std::min(std::abs(slo), std::abs(shi)));
    if (slo * shi > 0.0) {
      continue;
    }
    auto root = brent([&](double e) { return evaluate(e).score; }, -half, half,
                      1e-15);
    const ScoreParts sol = evaluate(root.x);
    out.last_score = std::abs(sol.score);
    if (out.last_score <= tol) {
      out.fluctuation = Fluctuation{ root.x, 0.0, sol.normalizer };
      out.converged = true;
      return out;
    }
  }
  return out;
}

} // namespace detail

DensityEstimate
tmle_target(const DensityEstimate& initial, const Sample& sample, double tol,
            int max_iter)
{
  if (initial.fluctuation()) {
    throw domain_error("tmle_target: initial estimate already fluctuated");
  }
  if (!(tol > 0.0)) {
    throw domain_error("tmle_target: tol must be positive");
  }
  const double lo = initial.support_lo();
  const double hi = initial.support_hi();
  std::vector<double> grid_vals(kTargetingGridSize);
  const double step = (hi - lo) / (kTargetingGridSize - 1);
  for (int k = 0; k < kTargetingGridSize; ++k) {
    grid_vals[k] = initial.base_eval(lo + k * step);
  }
  std::vector<double> data_vals(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    data_vals[i] = initial.base_eval(sample.points()[i]);
  }
  detail::TmleSolution sol =
    detail::solve_tilt(grid_vals, lo, hi, data_vals, tol, max_iter);
  if (!sol.converged) {
    throw targeting_failure("tmle_target: score equation not solved to tol",
                            sol.last_score);
  }
  Fluctuation f = sol.fluctuation;
  f.anchor_psi = integral_of_square(initial);
  return initial.with_fluctuation(f);
}

} // namespace bootlin
