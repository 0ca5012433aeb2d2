#pragma once

#include "bootlin/bootstrap.hpp"
#include "bootlin/intervals.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bootlin {
namespace sim {

enum class Dgp
{
  std_normal,
  gcomp_synthetic,
};

//! Synthetic causal data: Z ~ N(0,1), A | Z Bernoulli(expit(g_intercept +
//! g_slope z)), Y = mu_intercept + mu_slope z + noise_sd * N(0,1).
struct GcompDgp
{
  double g_intercept = 0.0;
  double g_slope = 0.5;
  double mu_intercept = 0.0;
  double mu_slope = 1.0;
  double noise_sd = 0.5;
};

//! Nuisance configuration for the density parameter: a bandwidth rule,
//! optionally followed by targeting ("RULE" or "RULE+tmle").
struct DensityNuisance
{
  BandwidthRule rule = BandwidthRule::silverman();
  bool tmle = false;

  static DensityNuisance from_string(const std::string& text);
  std::string to_string() const;
};

//! Full study configuration: the sweep axes, Monte Carlo sizes, DGP, and
//! seeding. Loaded from key=value text; every key can be overridden.
struct SimConfig
{
  std::vector<std::size_t> n_grid{ 100, 500, 2000 };
  std::size_t mc_reps = 300;
  std::size_t B = 400;
  double level = 0.95;
  Dgp dgp = Dgp::std_normal;
  GcompDgp gcomp_dgp{};
  Kernel kernel{ KernelId::gauss };
  std::vector<std::string> constructions{ "onestep" };
  std::vector<DensityNuisance> nuisances{ DensityNuisance{} };
  gcomp::NuisanceSpec gcomp_nuisance{};
  std::vector<BootstrapScheme> schemes{ BootstrapScheme::empirical() };
  std::vector<NuisancePolicy> policies{ NuisancePolicy::refit_frozen };
  std::vector<IntervalMethod> methods{ IntervalMethod::wald,
                                       IntervalMethod::percentile };
  std::uint64_t root_seed = 0;
  int threads = 1;

  void validate() const;
};

//! Parse a key=value config file ('#' starts a comment).
SimConfig parse_config(std::istream& in);
SimConfig parse_config_file(const std::string& path);

//! Apply one "key=value" override to an existing config.
void apply_override(SimConfig& cfg, const std::string& key,
                    const std::string& value);

//! The parameter value the intervals are supposed to cover.
double true_value(Dgp dgp, const GcompDgp& params = {});

struct CoverageRow
{
  std::string config_id;
  std::size_t n = 0;
  std::string construction;
  std::string bandwidth; // nuisance description
  std::string scheme;
  std::string policy;
  std::string method;
  double coverage = 0.0;
  double mean_scaled_width = 0.0; // mean of sqrt(n) * (hi - lo)
  std::size_t reps = 0;           // effective Monte Carlo denominator
  std::size_t failures = 0;
};

struct CoverageTable
{
  std::vector<CoverageRow> rows;
};

//! Run the study: for every cell of the sweep, mc_reps datasets, one
//! interval per configured method per dataset, aggregated into coverage
//! and sqrt(n)-scaled width. Deterministic in (config, root_seed); the
//! thread count changes the schedule only, not any output byte.
CoverageTable run_study(const SimConfig& cfg);

//! Fixed-format CSV with header config_id,n,construction,bandwidth,
//! scheme,policy,method,coverage,mean_scaled_width,reps,failures.
void write_coverage_csv(const CoverageTable& table, std::ostream& out);
std::string coverage_csv_string(const CoverageTable& table);

} // namespace sim
} // namespace bootlin
