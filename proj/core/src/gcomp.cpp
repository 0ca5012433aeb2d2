#include "bootlin/gcomp.hpp"

#include "bootlin/errors.hpp"
#include "bootlin/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace bootlin {
namespace gcomp {

CausalSample::CausalSample(std::vector<double> y_in, std::vector<int> a_in,
                           std::vector<double> z_in)
  : y(std::move(y_in))
  , a(std::move(a_in))
  , z(std::move(z_in))
{
  if (y.empty() || y.size() != a.size() || y.size() != z.size()) {
    throw domain_error("CausalSample: columns must be nonempty, equal length");
  }
  bool any_treated = false;
  bool any_control = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0 && a[i] != 1) {
      throw domain_error("CausalSample: treatment must be 0 or 1");
    }
    if (!std::isfinite(y[i]) || !std::isfinite(z[i])) {
      throw domain_error("CausalSample: y and z must be finite");
    }
    (a[i] == 1 ? any_treated : any_control) = true;
  }
  if (!any_treated || !any_control) {
    throw degenerate_data("CausalSample: need at least one treated and one "
                          "control observation");
  }
}

CausalSample
read_causal_csv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line)) {
    throw io_error("causal CSV: empty input");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != "y,a,z") {
    throw io_error("causal CSV: expected header 'y,a,z', got '" + line + "'");
  }
  std::vector<double> y;
  std::vector<int> a;
  std::vector<double> z;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    std::string field;
    double yv, zv;
    std::string av;
    try {
      if (!std::getline(row, field, ',')) throw std::invalid_argument(field);
      yv = std::stod(field);
      if (!std::getline(row, av, ',')) throw std::invalid_argument(av);
      if (!std::getline(row, field, ',')) throw std::invalid_argument(field);
      zv = std::stod(field);
    } catch (const std::exception&) {
      throw io_error("causal CSV: bad row at line " + std::to_string(lineno));
    }
    if (av != "0" && av != "1") {
      throw io_error("causal CSV: treatment must be 0 or 1 at line " +
                     std::to_string(lineno));
    }
    y.push_back(yv);
    a.push_back(av == "1" ? 1 : 0);
    z.push_back(zv);
  }
  if (y.empty()) {
    throw io_error("causal CSV: no data rows");
  }
  return CausalSample(std::move(y), std::move(a), std::move(z));
}

CausalSample
read_causal_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open '" + path + "'");
  }
  return read_causal_csv(in);
}

MuMethod
MuMethod::kernel(double h)
{
  if (!(h > 0.0)) {
    throw domain_error("MuMethod::kernel: h must be positive");
  }
  MuMethod m;
  m.kind = Kind::kernel;
  m.h = h;
  return m;
}

MuMethod
MuMethod::from_string(const std::string& text)
{
  if (text == "linear") {
    return linear();
  }
  if (text.rfind("kernel:", 0) == 0) {
    try {
      return kernel(std::stod(text.substr(7)));
    } catch (const std::invalid_argument&) {
      throw domain_error("bad kernel bandwidth in '" + text + "'");
    }
  }
  throw domain_error("unknown mu method '" + text + "' (linear|kernel:H)");
}

std::string
MuMethod::to_string() const
{
  if (kind == Kind::linear) {
    return "linear";
  }
  std::ostringstream os;
  os << "kernel:" << h;
  return os.str();
}

GMethod
GMethod::kernel(double h)
{
  if (!(h > 0.0)) {
    throw domain_error("GMethod::kernel: h must be positive");
  }
  GMethod m;
  m.kind = Kind::kernel;
  m.h = h;
  return m;
}

GMethod
GMethod::from_string(const std::string& text)
{
  if (text == "logistic") {
    return logistic();
  }
  if (text.rfind("kernel:", 0) == 0) {
    try {
      return kernel(std::stod(text.substr(7)));
    } catch (const std::invalid_argument&) {
      throw domain_error("bad kernel bandwidth in '" + text + "'");
    }
  }
  throw domain_error("unknown g method '" + text + "' (logistic|kernel:H)");
}

std::string
GMethod::to_string() const
{
  if (kind == Kind::logistic) {
    return "logistic";
  }
  std::ostringstream os;
  os << "kernel:" << h;
  return os.str();
}

namespace {

double
expit(double x)
{
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

//! Least squares of y on (1, z). Throws fit_error on singular design.
std::function<double(double)>
fit_linear(const std::vector<double>& z, const std::vector<double>& y)
{
  const auto n = static_cast<Eigen::Index>(z.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = z[static_cast<std::size_t>(i)];
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Matrix2d xtx = X.transpose() * X;
  if (std::abs(xtx.determinant()) < 1e-12 * static_cast<double>(n * n)) {
    throw fit_error("linear fit: singular design (constant covariate?)");
  }
  const Eigen::Vector2d beta = xtx.ldlt().solve(X.transpose() * Y);
  const double b0 = beta(0);
  const double b1 = beta(1);
  return [b0, b1](double zz) { return b0 + b1 * zz; };
}

//! Logistic regression of a on (1, z) by Newton iterations.
std::function<double(double)>
fit_logistic(const std::vector<double>& z, const std::vector<int>& a,
             int max_iter = 25, double tol = 1e-10)
{
  const std::size_t n = z.size();
  double b0 = 0.0;
  double b1 = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    double g0 = 0.0, g1 = 0.0;
    double h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = expit(b0 + b1 * z[i]);
      const double r = static_cast<double>(a[i]) - p;
      const double w = p * (1.0 - p);
      g0 += r;
      g1 += r * z[i];
      h00 += w;
      h01 += w * z[i];
      h11 += w * z[i] * z[i];
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(std::abs(det) > 1e-12)) {
      throw fit_error("logistic fit: singular information matrix");
    }
    const double d0 = (h11 * g0 - h01 * g1) / det;
    const double d1 = (h00 * g1 - h01 * g0) / det;
    b0 += d0;
    b1 += d1;
    if (std::abs(d0) + std::abs(d1) < tol) {
      break;
    }
    if (!std::isfinite(b0) || !std::isfinite(b1)) {
      throw fit_error("logistic fit: diverged (separated data?)");
    }
  }
  return [b0, b1](double zz) { return expit(b0 + b1 * zz); };
}

//! Nadaraya-Watson regression with a Gaussian weight.
std::function<double(double)>
fit_nw(std::vector<double> z, std::vector<double> y, double h)
{
  const double fallback = stats::mean(y);
  auto zs = std::make_shared<const std::vector<double>>(std::move(z));
  auto ys = std::make_shared<const std::vector<double>>(std::move(y));
  return [zs, ys, h, fallback](double zz) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < zs->size(); ++i) {
      const double w = stats::normal_pdf((zz - (*zs)[i]) / h);
      num += w * (*ys)[i];
      den += w;
    }
    return den > 0.0 ? num / den : fallback;
  };
}

} // namespace

GcompNuisance
fit_nuisance(const CausalSample& data, const NuisanceSpec& spec)
{
  if (!(spec.trunc_lo > 0.0 && spec.trunc_lo < spec.trunc_hi &&
        spec.trunc_hi < 1.0)) {
    throw domain_error("fit_nuisance: need 0 < trunc_lo < trunc_hi < 1");
  }
  std::vector<double> zc, yc;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.a[i] == 0) {
      zc.push_back(data.z[i]);
      yc.push_back(data.y[i]);
    }
  }

  std::function<double(double)> mu;
  if (spec.mu.kind == MuMethod::Kind::linear) {
    mu = fit_linear(zc, yc);
  } else {
    mu = fit_nw(std::move(zc), std::move(yc), spec.mu.h);
  }

  std::function<double(double)> g_raw;
  if (spec.g.kind == GMethod::Kind::logistic) {
    g_raw = fit_logistic(data.z, data.a);
  } else {
    std::vector<double> af(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      af[i] = static_cast<double>(data.a[i]);
    }
    g_raw = fit_nw(data.z, std::move(af), spec.g.h);
  }

  GcompNuisance eta;
  eta.trunc_lo = spec.trunc_lo;
  eta.trunc_hi = spec.trunc_hi;
  const double lo = spec.trunc_lo;
  const double hi = spec.trunc_hi;
  eta.mu = std::move(mu);
  eta.g = [g_raw, lo, hi](double zz) {
    return std::clamp(g_raw(zz), lo, hi);
  };
  double s = 0.0;
  for (double zz : data.z) {
    s += eta.g(zz);
  }
  eta.pi = s / static_cast<double>(data.size());
  return eta;
}

GcompNuisance
nuisance_from_functions(const std::function<double(double)>& mu,
                        const std::function<double(double)>& g,
                        const CausalSample& data, double trunc_lo,
                        double trunc_hi)
{
  if (!(trunc_lo > 0.0 && trunc_lo < trunc_hi && trunc_hi < 1.0)) {
    throw domain_error("nuisance_from_functions: bad truncation bounds");
  }
  GcompNuisance eta;
  eta.trunc_lo = trunc_lo;
  eta.trunc_hi = trunc_hi;
  eta.mu = mu;
  eta.g = [g, trunc_lo, trunc_hi](double zz) {
    return std::clamp(g(zz), trunc_lo, trunc_hi);
  };
  double s = 0.0;
  for (double zz : data.z) {
    s += eta.g(zz);
  }
  eta.pi = s / static_cast<double>(data.size());
  return eta;
}

double
estimate_ee(const CausalSample& data, const GcompNuisance& eta)
{
  const double n = static_cast<double>(data.size());
  double treated = 0.0;
  for (int ai : data.a) {
    treated += static_cast<double>(ai);
  }
  const double pibar = treated / n;
  if (!(pibar > 0.0)) {
    throw degenerate_data("estimate_ee: no treated observations");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double gz = eta.g(data.z[i]);
    const double muz = eta.mu(data.z[i]);
    if (data.a[i] == 0) {
      s += gz / (pibar * (1.0 - gz)) * (data.y[i] - muz);
    } else {
      s += muz / pibar;
    }
  }
  return s / n;
}

double
estimate_onestep(const CausalSample& data, const GcompNuisance& eta)
{
  const double n = static_cast<double>(data.size());
  if (!(eta.pi > 0.0)) {
    throw degenerate_data("estimate_onestep: pi = 0");
  }
  double treated = 0.0;
  for (int ai : data.a) {
    treated += static_cast<double>(ai);
  }
  const double pibar = treated / n;
  if (!(pibar > 0.0)) {
    throw degenerate_data("estimate_onestep: no treated observations");
  }
  const double adj = 2.0 - pibar / eta.pi;
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double gz = eta.g(data.z[i]);
    const double muz = eta.mu(data.z[i]);
    if (data.a[i] == 0) {
      s += gz / (eta.pi * (1.0 - gz)) * (data.y[i] - muz);
    } else {
      s += adj * muz / eta.pi;
    }
  }
  return s / n;
}

std::vector<double>
influence_values_gcomp(const CausalSample& data, const GcompNuisance& eta,
                       double psi_hat)
{
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double gz = eta.g(data.z[i]);
    const double muz = eta.mu(data.z[i]);
    if (data.a[i] == 0) {
      out[i] = gz / (eta.pi * (1.0 - gz)) * (data.y[i] - muz);
    } else {
      out[i] = (muz - psi_hat) / eta.pi;
    }
  }
  return out;
}

GcompConstruction
gcomp_construction_from_string(const std::string& id)
{
  if (id == "onestep") {
    return GcompConstruction::onestep;
  }
  if (id == "ee") {
    return GcompConstruction::ee;
  }
  throw domain_error("unknown gcomp construction '" + id +
                     "' (expected onestep|ee)");
}

std::string
to_string(GcompConstruction c)
{
  return c == GcompConstruction::onestep ? "onestep" : "ee";
}

double
estimate(GcompConstruction c, const CausalSample& data,
         const GcompNuisance& eta)
{
  return c == GcompConstruction::onestep ? estimate_onestep(data, eta)
                                         : estimate_ee(data, eta);
}

} // namespace gcomp
} // namespace bootlin
