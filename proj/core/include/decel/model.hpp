#pragma once

#include <array>

#include "decel/life_table.hpp"

namespace decel {

/// Gamma-Gompertz parameters. sigma2 == 0 is the Gompertz submodel.
struct ModelParams {
  double a = 1e-4;      // hazard level at model age 0, per person-year
  double b = 0.1;       // rate of aging, per year
  double sigma2 = 0.0;  // frailty variance

  /// Throws std::domain_error unless a > 0, b > 0, sigma2 >= 0 (all finite).
  void validate() const;
  bool is_gompertz() const noexcept { return sigma2 == 0.0; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Penalty weight and the boundary handling used by MAP fits.
struct PenaltyConfig {
  double lambda = 0.5;
  double sigma2_floor = 1e-8;
  /// MAP estimates below this are reported as exactly 0. A value of 0
  /// disables snapping.
  double snap_threshold = 1e-6;

  void validate() const;
  bool snapping_enabled() const noexcept { return snap_threshold > 0.0; }
};

/// Partial derivatives with respect to (a, b, sigma2).
using Gradient = std::array<double, 3>;

double gompertz_hazard(double x, double a, double b);

double gg_hazard(double x, const ModelParams& params);

/// ln of gg_hazard, evaluated without forming e^{bx} when bx is large.
double log_gg_hazard(double x, const ModelParams& params);

double gg_survival(double x, const ModelParams& params);

/// Poisson life-table log-likelihood: sum over cells of D ln(mu) - E mu.
/// Cells with E == 0 contribute nothing.
double log_likelihood(const ModelParams& params, const LifeTable& table);

/// lambda * (sigma2 + ln sigma2), the negative log-kernel of a
/// gamma(1 - lambda, lambda) prior on sigma2. Requires sigma2 > 0.
double penalty(double sigma2, double lambda);

double penalized_log_likelihood(const ModelParams& params, const LifeTable& table,
                                const PenaltyConfig& cfg);

/// Analytic gradient of the log-likelihood, minus the penalty derivative
/// when `penalized` is set.
Gradient gradient(const ModelParams& params, const LifeTable& table,
                  const PenaltyConfig& cfg, bool penalized);

/// Mean squared difference of ln(D/E) and ln(fitted hazard), over cells with
/// D > 0 and E > 0 only.
double mse(const ModelParams& params, const LifeTable& table);

}  // namespace decel
