#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "decel/life_table.hpp"
#include "decel/model.hpp"

namespace decel {

// ---------------------------------------------------------------------------
// Generic box-constrained maximizers over R^n.

using ObjectiveFn = std::function<double(std::span<const double>)>;

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
  void validate() const;
  void clamp(std::span<double> x) const noexcept;
};

/// rand/1/bin differential evolution.
struct DeConfig {
  int population = 50;
  double weight = 0.8;
  double crossover = 0.9;
  int generations = 200;
};

struct NelderMeadConfig {
  int max_iterations = 3000;
  /// Stop when the spread of simplex values drops below
  /// tolerance * (1 + |best|).
  double tolerance = 1e-13;
  /// Restarts from the incumbent until an entire run gains less than the
  /// tolerance.
  int max_restarts = 10;
};

struct OptimumPoint {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

/// Maximizes `f` over `bounds`. Non-finite objective values count as -inf.
/// Deterministic in `seed`. Throws NumericError when more than half of the
/// initial population evaluates non-finite.
OptimumPoint differential_evolution(const ObjectiveFn& f, const Bounds& bounds,
                                    const DeConfig& config, std::uint64_t seed);

/// Box-clipped Nelder-Mead simplex maximization with restarts. The result is
/// never worse than `start`. `converged` is false when a run hit the iteration
/// cap.
OptimumPoint nelder_mead(const ObjectiveFn& f, std::span<const double> start,
                         const Bounds& bounds, const NelderMeadConfig& config = {});

// ---------------------------------------------------------------------------
// Model-level search. Internally the optimizers work on (ln a, b, sigma2).

struct SearchBox {
  ModelParams lower{1e-8, 1e-4, 1e-8};
  ModelParams upper{1.0, 1.0, 5.0};

  /// Default box with the sigma2 lower bound taken from `cfg`.
  static SearchBox for_penalty(const PenaltyConfig& cfg);
  void validate() const;
  bool contains(const ModelParams& p) const noexcept;
};

using ParamObjective = std::function<double(const ModelParams&)>;

struct ParamOptimum {
  ModelParams params;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

ParamOptimum differential_evolution(const ParamObjective& f, const SearchBox& box,
                                    const DeConfig& config, std::uint64_t seed);

/// Local refinement from `start` (must be inside `box`).
ParamOptimum nelder_mead(const ParamObjective& f, const ModelParams& start, const SearchBox& box,
                         const NelderMeadConfig& config = {});

// ---------------------------------------------------------------------------
// Fitting.

enum class FitMethod { ml, map };

const char* to_string(FitMethod m) noexcept;

struct FitOptions {
  SearchBox box{};
  DeConfig de{};
  NelderMeadConfig simplex{};
  std::uint64_t seed = 1;
  bool compute_se = true;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct StandardErrors {
  std::array<double, 3> se{};  // a, b, sigma2
  Interval ci_sigma2{};        // 95% Wald
};

struct FitResult {
  ModelParams params_hat;
  double loglik = 0.0;
  /// Maximized penalized objective; MAP only. For a snapped fit this is the
  /// value attained at the sigma2 floor before snapping.
  std::optional<double> penalized_loglik;
  double mse = 0.0;
  std::optional<std::array<double, 3>> se;
  std::optional<Interval> ci_sigma2;
  FitMethod method = FitMethod::ml;
  bool converged = false;
  std::size_t evaluations = 0;
  /// Objective (the one being maximized) at the global pre-step optimum and
  /// at the final search optimum, before any snapping.
  double pre_step_objective = 0.0;
  double objective = 0.0;

  bool deceleration_detected() const noexcept { return params_hat.sigma2 > 0.0; }
};

/// Maximum likelihood: DE pre-step, simplex refinement, and a polish on the
/// sigma2 lower face. Throws NumericError on a table with no deaths.
FitResult fit_ml(const LifeTable& table, const FitOptions& options = {});

/// Maximum penalized likelihood. The box's sigma2 lower bound is replaced by
/// cfg.sigma2_floor. Estimates below cfg.snap_threshold are reported as
/// sigma2 = 0 with (a, b) re-fitted under the Gompertz model.
FitResult fit_map(const LifeTable& table, const PenaltyConfig& cfg,
                  const FitOptions& options = {});

/// Central finite-difference Hessian of `f` at `x` from function values.
Eigen::MatrixXd finite_difference_hessian(const ObjectiveFn& f, std::span<const double> x,
                                          std::span<const double> steps);

/// Square roots of diag((-H)^{-1}). Throws NumericError unless H is negative
/// definite.
Eigen::VectorXd standard_errors_from_hessian(const Eigen::MatrixXd& hessian);

/// Hessian of the log-likelihood in (a, b, sigma2) by central differences of
/// the analytic gradient (relative step 1e-5, absolute floor 1e-9).
Eigen::Matrix3d log_likelihood_hessian(const ModelParams& params, const LifeTable& table);

/// Wald standard errors and 95% interval for sigma2 at an interior estimate.
/// Throws NumericError when sigma2 == 0 or the Hessian is not negative
/// definite.
StandardErrors hessian_se(const ModelParams& params_hat, const LifeTable& table);

}  // namespace decel
