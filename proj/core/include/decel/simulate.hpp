#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decel/life_table.hpp"
#include "decel/model.hpp"
#include "decel/optimize.hpp"

namespace decel {

/// Lifetime X with gg_survival(X) == u, for u in (0, 1).
double lifetime_from_uniform(double u, const ModelParams& params);

/// n i.i.d. gamma-Gompertz lifetimes (model age 0 origin) by inversion.
std::vector<double> sample_lifetimes(std::size_t n, const ModelParams& params, std::uint64_t seed);

struct LifeTableBuild {
  LifeTable table;
  /// Lifetimes >= max_age + 1: exposure truncated there, no death recorded.
  std::size_t censored = 0;
};

/// Single-year cells for ages 0..max_age with exact fractional exposure.
LifeTableBuild build_life_table(std::span<const double> lifetimes, int max_age);

struct SimulationScenario {
  std::string id;
  ModelParams true_params;
  std::size_t sample_size = 10000;
  std::size_t replications = 200;
  int max_age = 120;
  std::uint64_t master_seed = 1;

  void validate() const;
  bool is_null() const noexcept { return true_params.sigma2 == 0.0; }
};

/// Seed for replication r of a scenario: derive_seed(master_seed, r).
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t r);

struct ParameterStats {
  double bias = 0.0;
  /// Sample standard deviation (n - 1 denominator); absent with fewer than
  /// two converged replications.
  std::optional<double> sd;
};

struct MethodSummary {
  std::array<ParameterStats, 3> stats{};  // a, b, sigma2
  std::size_t n_converged = 0;
  std::size_t n_nonconverged = 0;
  std::size_t n_positive_sigma2 = 0;
  std::size_t n_zero_sigma2 = 0;
};

struct ReplicationOutcome {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  ModelParams ml;
  ModelParams map;
  bool ml_converged = false;
  bool map_converged = false;
  std::size_t censored = 0;
};

struct SimulationSummary {
  SimulationScenario scenario;
  MethodSummary ml;
  MethodSummary map;
  std::size_t n_failed = 0;
  std::vector<ReplicationOutcome> replications;  // by replication index

  const MethodSummary& method(FitMethod m) const noexcept { return m == FitMethod::ml ? ml : map; }
};

struct ScenarioRunOptions {
  PenaltyConfig penalty{};
  SearchBox box{};
  DeConfig de{};
  /// 0 selects default_worker_count().
  unsigned workers = 0;
};

/// Samples, tabulates and fits (ML and MAP) every replication, then
/// aggregates bias and SD over converged fits. Replications that throw are
/// recorded as failed; more than 10% failures raise NumericError.
SimulationSummary run_scenario(const SimulationScenario& scenario,
                               const ScenarioRunOptions& options = {});

/// Bias/SD aggregation over converged replications, in index order.
void summarize(SimulationSummary& summary);

struct ErrorRates {
  double type_one = 0.0;  // MAP sigma2 > 0 under a null scenario
  double type_two = 0.0;  // MAP sigma2 = 0 under an alternative scenario
  std::size_t null_replications = 0;
  std::size_t alternative_replications = 0;
};

/// Pools converged MAP replications across scenarios. Throws
/// std::invalid_argument unless both a null and an alternative scenario
/// with at least one converged replication are present.
ErrorRates error_rates(std::span<const SimulationSummary> summaries);

}  // namespace decel
