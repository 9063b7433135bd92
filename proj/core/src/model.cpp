#include "decel/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace decel {
namespace {

// Above this, e^{bx} is kept out of every intermediate.
constexpr double kLogSpaceCutoff = 700.0;

// Per-cell quantities shared by the likelihood, its gradient and the MSE.
// em1_over_den = (e^{bx} - 1) / den and u_over_den = e^{bx} / den, where
// den = 1 + sigma2 (a/b)(e^{bx} - 1).
struct HazardTerms {
  double log_mu;
  double mu;
  double em1_over_den;
  double u_over_den;
};

HazardTerms hazard_terms(double x, const ModelParams& p) {
  const double bx = p.b * x;
  if (p.sigma2 == 0.0) {
    const double log_mu = std::log(p.a) + bx;
    return {log_mu, std::exp(log_mu), std::expm1(bx), std::exp(bx)};
  }
  const double c = p.sigma2 * p.a / p.b;
  if (bx <= kLogSpaceCutoff) {
    const double u = std::exp(bx);
    const double em1 = std::expm1(bx);
    const double den = 1.0 + c * em1;
    return {std::log(p.a) + bx - std::log1p(c * em1), p.a * u / den, em1 / den, u / den};
  }
  const double w = std::exp(-bx);
  const double den_over_u = w + c * (1.0 - w);
  return {std::log(p.a) - std::log(den_over_u), p.a / den_over_u, (1.0 - w) / den_over_u,
          1.0 / den_over_u};
}

void check_age(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw std::domain_error("age must be finite and >= 0");
}

void check_table(const LifeTable& table) {
  if (table.empty()) throw std::invalid_argument("life table is empty");
}

}  // namespace

void ModelParams::validate() const {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::domain_error("a must be finite and > 0");
  if (!(b > 0.0) || !std::isfinite(b)) throw std::domain_error("b must be finite and > 0");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw std::domain_error("sigma2 must be finite and >= 0");
}

void PenaltyConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lambda must be finite and >= 0");
  if (!(sigma2_floor > 0.0) || !(sigma2_floor < 1.0))
    throw std::invalid_argument("sigma2_floor must lie in (0, 1)");
  if (snap_threshold != 0.0 && !(snap_threshold > sigma2_floor && snap_threshold < 1.0))
    throw std::invalid_argument("snap_threshold must be 0 or lie in (sigma2_floor, 1)");
}

double gompertz_hazard(double x, double a, double b) {
  check_age(x);
  ModelParams{a, b, 0.0}.validate();
  const double bx = b * x;
  if (bx > kLogSpaceCutoff) return std::exp(std::log(a) + bx);
  return a * std::exp(bx);
}

double gg_hazard(double x, const ModelParams& params) {
  check_age(x);
  params.validate();
  if (params.is_gompertz()) return gompertz_hazard(x, params.a, params.b);
  return hazard_terms(x, params).mu;
}

double log_gg_hazard(double x, const ModelParams& params) {
  check_age(x);
  params.validate();
  return hazard_terms(x, params).log_mu;
}

double gg_survival(double x, const ModelParams& params) {
  check_age(x);
  params.validate();
  const double bx = params.b * x;
  const double ratio = params.a / params.b;
  if (params.is_gompertz()) {
    if (bx > kLogSpaceCutoff) return 0.0;
    return std::exp(-ratio * std::expm1(bx));
  }
  const double c = params.sigma2 * ratio;
  double log_den;
  if (bx <= kLogSpaceCutoff) {
    log_den = std::log1p(c * std::expm1(bx));
  } else {
    const double w = std::exp(-bx);
    log_den = bx + std::log(w + c * (1.0 - w));
  }
  return std::exp(-log_den / params.sigma2);
}

double log_likelihood(const ModelParams& params, const LifeTable& table) {
  params.validate();
  check_table(table);
  double ll = 0.0;
  const auto cells = table.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c.exposure == 0.0) continue;
    const auto t = hazard_terms(static_cast<double>(i), params);
    if (c.deaths > 0.0) ll += c.deaths * t.log_mu;
    ll -= c.exposure * t.mu;
  }
  return ll;
}

double penalty(double sigma2, double lambda) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::domain_error("penalty requires finite sigma2 > 0");
  if (!(lambda >= 0.0)) throw std::domain_error("penalty requires lambda >= 0");
  return lambda * (sigma2 + std::log(sigma2));
}

double penalized_log_likelihood(const ModelParams& params, const LifeTable& table,
                                const PenaltyConfig& cfg) {
  if (!(params.sigma2 >= cfg.sigma2_floor))
    throw std::domain_error("penalized objective requires sigma2 >= sigma2_floor");
  return log_likelihood(params, table) - penalty(params.sigma2, cfg.lambda);
}

Gradient gradient(const ModelParams& params, const LifeTable& table, const PenaltyConfig& cfg,
                  bool penalized) {
  params.validate();
  check_table(table);
  if (penalized && !(params.sigma2 >= cfg.sigma2_floor))
    throw std::domain_error("penalized gradient requires sigma2 >= sigma2_floor");

  const double a = params.a;
  const double b = params.b;
  const double s = params.sigma2;
  Gradient g{0.0, 0.0, 0.0};
  const auto cells = table.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c.exposure == 0.0) continue;
    const double x = static_cast<double>(i);
    const auto t = hazard_terms(x, params);
    // d ell / d theta = (D - E mu) d ln(mu) / d theta
    const double w = c.deaths - c.exposure * t.mu;
    g[0] += w * (1.0 / a - s * t.em1_over_den / b);
    g[1] += w * (x - s * a * (x * b * t.u_over_den - t.em1_over_den) / (b * b));
    g[2] += w * (-(a / b) * t.em1_over_den);
  }
  if (penalized) g[2] -= cfg.lambda * (1.0 + 1.0 / s);
  return g;
}

double mse(const ModelParams& params, const LifeTable& table) {
  params.validate();
  double sum = 0.0;
  std::size_t n = 0;
  const auto cells = table.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (!(c.deaths > 0.0 && c.exposure > 0.0)) continue;
    const double d = std::log(c.deaths / c.exposure) - hazard_terms(static_cast<double>(i), params).log_mu;
    sum += d * d;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("mse needs at least one cell with deaths and exposure");
  return sum / static_cast<double>(n);
}

}  // namespace decel
