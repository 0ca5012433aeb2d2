#include "bootlin/sim.hpp"

#include "bootlin/detail/parallel.hpp"
#include "bootlin/errors.hpp"
#include "bootlin/quadrature.hpp"
#include "bootlin/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bootlin {
namespace sim {

DensityNuisance
DensityNuisance::from_string(const std::string& text)
{
  DensityNuisance out;
  std::string rule = text;
  const std::string suffix = "+tmle";
  if (rule.size() > suffix.size() &&
      rule.compare(rule.size() - suffix.size(), suffix.size(), suffix) == 0) {
    out.tmle = true;
    rule.resize(rule.size() - suffix.size());
  }
  out.rule = BandwidthRule::from_string(rule);
  return out;
}

std::string
DensityNuisance::to_string() const
{
  return rule.to_string() + (tmle ? "+tmle" : "");
}

void
SimConfig::validate() const
{
  if (n_grid.empty() || mc_reps < 1 || B < 1) {
    throw domain_error("sim config: need n_grid, mc_reps >= 1, B >= 1");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw domain_error("sim config: level must lie in (0, 1)");
  }
  if (constructions.empty() || nuisances.empty() || schemes.empty() ||
      policies.empty() || methods.empty()) {
    throw domain_error("sim config: every sweep axis needs at least one entry");
  }
  for (const auto& c : constructions) {
    if (dgp == Dgp::std_normal) {
      construction_from_string(c);
    } else {
      gcomp::gcomp_construction_from_string(c);
    }
  }
  if (dgp == Dgp::gcomp_synthetic) {
    for (const auto& s : schemes) {
      if (s.is_smooth()) {
        throw unsupported_operation(
          "sim config: only the empirical scheme is wired for the gcomp "
          "parameter");
      }
    }
  }
  if (threads < 1) {
    throw domain_error("sim config: threads must be >= 1");
  }
}

namespace {

std::vector<std::string>
split_csv(const std::string& text)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(text);
  while (std::getline(is, field, ',')) {
    if (!field.empty()) {
      out.push_back(field);
    }
  }
  return out;
}

} // namespace

void
apply_override(SimConfig& cfg, const std::string& key, const std::string& value)
{
  try {
    if (key == "n_grid") {
      cfg.n_grid.clear();
      for (const auto& f : split_csv(value)) {
        cfg.n_grid.push_back(static_cast<std::size_t>(std::stoul(f)));
      }
    } else if (key == "mc_reps") {
      cfg.mc_reps = static_cast<std::size_t>(std::stoul(value));
    } else if (key == "B") {
      cfg.B = static_cast<std::size_t>(std::stoul(value));
    } else if (key == "level") {
      cfg.level = std::stod(value);
    } else if (key == "dgp") {
      if (value == "stdnormal") {
        cfg.dgp = Dgp::std_normal;
      } else if (value == "gcomp") {
        cfg.dgp = Dgp::gcomp_synthetic;
      } else {
        throw domain_error("dgp must be stdnormal|gcomp");
      }
    } else if (key == "kernel") {
      cfg.kernel = Kernel::from_string(value);
    } else if (key == "constructions") {
      cfg.constructions = split_csv(value);
    } else if (key == "nuisances") {
      cfg.nuisances.clear();
      for (const auto& f : split_csv(value)) {
        cfg.nuisances.push_back(DensityNuisance::from_string(f));
      }
    } else if (key == "schemes") {
      cfg.schemes.clear();
      for (const auto& f : split_csv(value)) {
        cfg.schemes.push_back(BootstrapScheme::from_string(f));
      }
    } else if (key == "policies") {
      cfg.policies.clear();
      for (const auto& f : split_csv(value)) {
        cfg.policies.push_back(nuisance_policy_from_string(f));
      }
    } else if (key == "methods") {
      cfg.methods.clear();
      for (const auto& f : split_csv(value)) {
        cfg.methods.push_back(interval_method_from_string(f));
      }
    } else if (key == "seed") {
      cfg.root_seed = std::stoull(value);
    } else if (key == "threads") {
      cfg.threads = std::stoi(value);
    } else if (key == "mu") {
      cfg.gcomp_nuisance.mu = gcomp::MuMethod::from_string(value);
    } else if (key == "g") {
      cfg.gcomp_nuisance.g = gcomp::GMethod::from_string(value);
    } else if (key == "trunc") {
      const auto parts = split_csv(value);
      if (parts.size() != 2) {
        throw domain_error("trunc must be 'lo,hi'");
      }
      cfg.gcomp_nuisance.trunc_lo = std::stod(parts[0]);
      cfg.gcomp_nuisance.trunc_hi = std::stod(parts[1]);
    } else if (key == "gcomp_g_intercept") {
      cfg.gcomp_dgp.g_intercept = std::stod(value);
    } else if (key == "gcomp_g_slope") {
      cfg.gcomp_dgp.g_slope = std::stod(value);
    } else if (key == "gcomp_mu_intercept") {
      cfg.gcomp_dgp.mu_intercept = std::stod(value);
    } else if (key == "gcomp_mu_slope") {
      cfg.gcomp_dgp.mu_slope = std::stod(value);
    } else if (key == "gcomp_noise_sd") {
      cfg.gcomp_dgp.noise_sd = std::stod(value);
    } else {
      throw domain_error("unknown config key '" + key + "'");
    }
  } catch (const std::invalid_argument&) {
    throw domain_error("bad value '" + value + "' for config key '" + key +
                       "'");
  } catch (const std::out_of_range&) {
    throw domain_error("bad value '" + value + "' for config key '" + key +
                       "'");
  }
}

SimConfig
parse_config(std::istream& in)
{
  SimConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    // trim
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      continue;
    }
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw io_error("config line " + std::to_string(lineno) +
                     ": expected key=value");
    }
    apply_override(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

SimConfig
parse_config_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open config '" + path + "'");
  }
  return parse_config(in);
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

} // namespace

double
true_value(Dgp dgp, const GcompDgp& p)
{
  if (dgp == Dgp::std_normal) {
    // integral of the squared standard normal density
    return 0.5 / std::sqrt(stats::pi);
  }
  auto g0 = [&](double z) { return expit(p.g_intercept + p.g_slope * z); };
  auto mu0 = [&](double z) { return p.mu_intercept + p.mu_slope * z; };
  const double num = quad::integrate_or_throw(
    [&](double z) { return mu0(z) * g0(z) * stats::normal_pdf(z); }, -12.0,
    12.0, 1e-10, 1e-14);
  const double den = quad::integrate_or_throw(
    [&](double z) { return g0(z) * stats::normal_pdf(z); }, -12.0, 12.0,
    1e-10, 1e-14);
  return num / den;
}

// ---------------------------------------------------------------------------
// study driver

namespace {

struct Cell
{
  std::size_t n = 0;
  std::string construction;
  std::string nuisance_label;
  DensityNuisance density_nuisance;
  BootstrapScheme scheme = BootstrapScheme::empirical();
  NuisancePolicy policy = NuisancePolicy::refit_frozen;
};

struct MethodOutcome
{
  unsigned char covered = 0;
  double scaled_width = 0.0;
};

struct RepOutcome
{
  bool failed = true;
  std::vector<MethodOutcome> per_method;
};

bool
needs_replicates(const std::vector<IntervalMethod>& methods)
{
  return std::any_of(methods.begin(), methods.end(), [](IntervalMethod m) {
    return m != IntervalMethod::wald;
  });
}

Interval
build_interval(IntervalMethod method, const IntervalSpec& spec, double psi_hat,
               double sigma_hat, std::size_t n, const ReplicateSet* reps)
{
  switch (method) {
    case IntervalMethod::wald:
      return wald(psi_hat, sigma_hat, spec, n);
    case IntervalMethod::percentile:
      return percentile(psi_hat, reps->valid_psi(), reps->center, spec);
    case IntervalMethod::percentile_t:
      return percentile_t(psi_hat, sigma_hat, reps->valid_psi(),
                          reps->valid_sigma(), reps->center, spec);
    case IntervalMethod::efron:
      return efron(reps->valid_psi(), spec);
    case IntervalMethod::bootstrap_wald:
      return bootstrap_wald(psi_hat, reps->valid_psi(), reps->center, spec, n);
  }
  throw domain_error("build_interval: unknown method");
}

RepOutcome
run_density_rep(const SimConfig& cfg, const Cell& cell, double psi0,
                const RngStream& rep_stream)
{
  RepOutcome out;
  RngStream data_stream = rep_stream.derive(0);
  const Sample sample(data_stream.standard_normal(cell.n));
  const Construction construction =
    construction_from_string(cell.construction);

  const double h = select_bandwidth(cell.density_nuisance.rule, sample);
  DensityEstimate density = fit(sample, cfg.kernel, h);
  if (cell.density_nuisance.tmle) {
    density = tmle_target(density, sample);
  }
  const double psi_hat = estimate(construction, density, sample);
  const double sigma_hat = sigma_if(influence_values(density, psi_hat, sample));

  ReplicateSet reps;
  const bool want_reps = needs_replicates(cfg.methods);
  if (want_reps) {
    reps = run_replicates(construction, density, sample, cell.scheme,
                          cell.policy, cfg.B, rep_stream.derive(1),
                          /*threads=*/1);
  }

  out.per_method.resize(cfg.methods.size());
  const double root_n = std::sqrt(static_cast<double>(cell.n));
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    const IntervalSpec spec = IntervalSpec::equi_tailed(cfg.level,
                                                        cfg.methods[m]);
    const Interval ci =
      build_interval(cfg.methods[m], spec, psi_hat, sigma_hat, cell.n,
                     want_reps ? &reps : nullptr);
    out.per_method[m].covered = ci.contains(psi0) ? 1 : 0;
    out.per_method[m].scaled_width = root_n * ci.width();
  }
  out.failed = false;
  return out;
}

RepOutcome
run_gcomp_rep(const SimConfig& cfg, const Cell& cell, double psi0,
              const RngStream& rep_stream)
{
  RepOutcome out;
  RngStream data_stream = rep_stream.derive(0);
  const std::size_t n = cell.n;
  std::vector<double> y(n), z(n);
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = data_stream.next_standard_normal();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double g = expit(cfg.gcomp_dgp.g_intercept +
                           cfg.gcomp_dgp.g_slope * z[i]);
    a[i] = data_stream.next_uniform01() < g ? 1 : 0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = cfg.gcomp_dgp.mu_intercept + cfg.gcomp_dgp.mu_slope * z[i] +
           cfg.gcomp_dgp.noise_sd * data_stream.next_standard_normal();
  }
  const gcomp::CausalSample data(std::move(y), std::move(a), std::move(z));
  const gcomp::GcompConstruction construction =
    gcomp::gcomp_construction_from_string(cell.construction);
  const gcomp::GcompNuisance eta = gcomp::fit_nuisance(data, cfg.gcomp_nuisance);
  const double psi_hat = gcomp::estimate(construction, data, eta);
  const double sigma_hat =
    sigma_if(gcomp::influence_values_gcomp(data, eta, psi_hat));

  ReplicateSet reps;
  const bool want_reps = needs_replicates(cfg.methods);
  if (want_reps) {
    reps = run_gcomp_replicates(construction, data, eta, cfg.gcomp_nuisance,
                                cell.policy, cfg.B, rep_stream.derive(1),
                                /*threads=*/1);
  }

  out.per_method.resize(cfg.methods.size());
  const double root_n = std::sqrt(static_cast<double>(n));
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    const IntervalSpec spec = IntervalSpec::equi_tailed(cfg.level,
                                                        cfg.methods[m]);
    const Interval ci =
      build_interval(cfg.methods[m], spec, psi_hat, sigma_hat, n,
                     want_reps ? &reps : nullptr);
    out.per_method[m].covered = ci.contains(psi0) ? 1 : 0;
    out.per_method[m].scaled_width = root_n * ci.width();
  }
  out.failed = false;
  return out;
}

} // namespace

CoverageTable
run_study(const SimConfig& cfg)
{
  cfg.validate();

  std::vector<Cell> cells;
  const bool density_dgp = cfg.dgp == Dgp::std_normal;
  for (std::size_t n : cfg.n_grid) {
    for (const auto& construction : cfg.constructions) {
      if (density_dgp) {
        for (const auto& nuisance : cfg.nuisances) {
          for (const auto& scheme : cfg.schemes) {
            for (const auto& policy : cfg.policies) {
              cells.push_back(Cell{ n, construction, nuisance.to_string(),
                                    nuisance, scheme, policy });
            }
          }
        }
      } else {
        for (const auto& policy : cfg.policies) {
          Cell cell;
          cell.n = n;
          cell.construction = construction;
          cell.nuisance_label = cfg.gcomp_nuisance.mu.to_string() + "/" +
                                cfg.gcomp_nuisance.g.to_string();
          cell.policy = policy;
          cells.push_back(cell);
        }
      }
    }
  }

  const double psi0 = true_value(cfg.dgp, cfg.gcomp_dgp);
  const RngStream root(cfg.root_seed);

  // Work items are (cell, rep); results land in indexed slots so the
  // reduction below is independent of the thread schedule.
  const std::size_t total = cells.size() * cfg.mc_reps;
  std::vector<RepOutcome> outcomes(total);
  detail::parallel_for_indexed(total, cfg.threads, [&](std::size_t item) {
    const std::size_t cell_idx = item / cfg.mc_reps;
    const std::size_t rep = item % cfg.mc_reps;
    const Cell& cell = cells[cell_idx];
    const RngStream rep_stream =
      root.derive(static_cast<std::uint32_t>(cell_idx))
        .derive(static_cast<std::uint32_t>(rep));
    try {
      outcomes[item] = density_dgp
                         ? run_density_rep(cfg, cell, psi0, rep_stream)
                         : run_gcomp_rep(cfg, cell, psi0, rep_stream);
    } catch (const error&) {
      outcomes[item] = RepOutcome{};
    }
  });

  CoverageTable table;
  std::size_t row_id = 0;
  for (std::size_t cell_idx = 0; cell_idx < cells.size(); ++cell_idx) {
    const Cell& cell = cells[cell_idx];
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      CoverageRow row;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "c%04zu", row_id++);
      row.config_id = buf;
      row.n = cell.n;
      row.construction = cell.construction;
      row.bandwidth = cell.nuisance_label;
      row.scheme = cell.scheme.to_string();
      row.policy = to_string(cell.policy);
      row.method = to_string(cfg.methods[m]);
      std::size_t covered = 0;
      std::size_t effective = 0;
      double width_sum = 0.0;
      for (std::size_t rep = 0; rep < cfg.mc_reps; ++rep) {
        const RepOutcome& o = outcomes[cell_idx * cfg.mc_reps + rep];
        if (o.failed) {
          continue;
        }
        ++effective;
        covered += o.per_method[m].covered;
        width_sum += o.per_method[m].scaled_width;
      }
      row.reps = effective;
      row.failures = cfg.mc_reps - effective;
      row.coverage = effective > 0
                       ? static_cast<double>(covered) /
                           static_cast<double>(effective)
                       : 0.0;
      row.mean_scaled_width =
        effective > 0 ? width_sum / static_cast<double>(effective) : 0.0;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

void
write_coverage_csv(const CoverageTable& table, std::ostream& out)
{
  out << "config_id,n,construction,bandwidth,scheme,policy,method,coverage,"
         "mean_scaled_width,reps,failures\n";
  char buf[64];
  for (const auto& r : table.rows) {
    out << r.config_id << ',' << r.n << ',' << r.construction << ','
        << r.bandwidth << ',' << r.scheme << ',' << r.policy << ','
        << r.method << ',';
    std::snprintf(buf, sizeof(buf), "%.6f", r.coverage);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.6f", r.mean_scaled_width);
    out << buf << ',' << r.reps << ',' << r.failures << '\n';
  }
}

std::string
coverage_csv_string(const CoverageTable& table)
{
  std::ostringstream os;
  write_coverage_csv(table, os);
  return os.str();
}

} // namespace sim
} // namespace bootlin
