#include "decel/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "decel/errors.hpp"
#include "decel/random.hpp"

namespace decel {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kWaldZ = 1.96;

double sanitize(double v) noexcept { return std::isfinite(v) ? v : kNegInf; }

double evaluate(const ObjectiveFn& f, std::span<const double> x) {
  return sanitize(f(x));
}

// ---------------------------------------------------------------------------
// One Nelder-Mead run from a given vertex (standard coefficients 1, 2, 1/2,
// 1/2), maximizing.

OptimumPoint simplex_run(const ObjectiveFn& f, const std::vector<double>& x0, double f0,
                         const Bounds& bounds, const std::vector<double>& steps,
                         const NelderMeadConfig& cfg) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> v(n + 1, x0);
  std::vector<double> fv(n + 1, f0);
  std::size_t evals = 0;

  auto eval = [&](std::vector<double>& x) {
    bounds.clamp(x);
    ++evals;
    return evaluate(f, x);
  };

  for (std::size_t i = 0; i < n; ++i) {
    auto& y = v[i + 1];
    y[i] = x0[i] + steps[i];
    if (y[i] > bounds.upper[i]) y[i] = x0[i] - steps[i];
    fv[i + 1] = eval(y);
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  bool converged = false;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return fv[l] > fv[r]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];

    const double spread = fv[best] - fv[worst];
    if (spread <= cfg.tolerance * (1.0 + std::abs(fv[best]))) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& p = v[order[k]];
      for (std::size_t j = 0; j < n; ++j) centroid[j] += p[j];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    const auto& w = v[worst];
    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + (centroid[j] - w[j]);
    const double fr = eval(xr);

    if (fr > fv[best]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - w[j]);
      const double fe = eval(xe);
      if (fe > fr) {
        v[worst] = xe;
        fv[worst] = fe;
      } else {
        v[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr > fv[second_worst]) {
      v[worst] = xr;
      fv[worst] = fr;
      continue;
    }

    bool accepted = false;
    if (fr > fv[worst]) {
      for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + 0.5 * (xr[j] - centroid[j]);
      const double fc = eval(xc);
      if (fc >= fr) {
        v[worst] = xc;
        fv[worst] = fc;
        accepted = true;
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + 0.5 * (w[j] - centroid[j]);
      const double fc = eval(xc);
      if (fc > fv[worst]) {
        v[worst] = xc;
        fv[worst] = fc;
        accepted = true;
      }
    }
    if (accepted) continue;

    // shrink toward the best vertex
    const auto xb = v[best];
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == best) continue;
      for (std::size_t j = 0; j < n; ++j) v[k][j] = xb[j] + 0.5 * (v[k][j] - xb[j]);
      fv[k] = eval(v[k]);
    }
  }

  const auto it = std::max_element(fv.begin(), fv.end());
  const auto idx = static_cast<std::size_t>(it - fv.begin());
  return {v[idx], fv[idx], evals, converged};
}

// ---------------------------------------------------------------------------
// (a, b, sigma2) <-> (ln a, b, sigma2)

std::vector<double> to_internal(const ModelParams& p) { return {std::log(p.a), p.b, p.sigma2}; }

ModelParams from_internal(std::span<const double> x, const SearchBox& box) {
  ModelParams p{std::exp(x[0]), x[1], x[2]};
  p.a = std::clamp(p.a, box.lower.a, box.upper.a);
  return p;
}

Bounds internal_bounds(const SearchBox& box) {
  return {{std::log(box.lower.a), box.lower.b, box.lower.sigma2},
          {std::log(box.upper.a), box.upper.b, box.upper.sigma2}};
}

ObjectiveFn internal_objective(const ParamObjective& f, const SearchBox& box) {
  return [&f, &box](std::span<const double> x) { return f(from_internal(x, box)); };
}

// Maximize over (a, b) with sigma2 held at `sigma2`.
ParamOptimum fixed_sigma2_search(const ParamObjective& f, const SearchBox& box,
                                 const ModelParams& start, double sigma2,
                                 const NelderMeadConfig& cfg) {
  const Bounds face{{std::log(box.lower.a), box.lower.b}, {std::log(box.upper.a), box.upper.b}};
  auto g = [&](std::span<const double> x) {
    const double xs[3] = {x[0], x[1], sigma2};
    return f(from_internal(xs, box));
  };
  const std::vector<double> x0{std::log(start.a), start.b};
  const auto r = nelder_mead(g, x0, face, cfg);
  const double xs[3] = {r.x[0], r.x[1], sigma2};
  auto p = from_internal(xs, box);
  p.sigma2 = sigma2;
  return {p, r.value, r.evaluations, r.converged};
}

struct SearchOutcome {
  ParamOptimum best;
  double pre_step = 0.0;
};

// DE pre-step, simplex refinement, then a polish on the sigma2 lower face,
// where penalized objectives can carry a separate mode.
SearchOutcome global_search(const ParamObjective& f, const SearchBox& box,
                            const FitOptions& options) {
  const auto de = differential_evolution(f, box, options.de, options.seed);
  auto best = nelder_mead(f, de.params, box, options.simplex);
  std::size_t evals = de.evaluations + best.evaluations;

  const auto face =
      fixed_sigma2_search(f, box, best.params, box.lower.sigma2, options.simplex);
  evals += face.evaluations;
  if (face.value > best.value) {
    best = nelder_mead(f, face.params, box, options.simplex);
    evals += best.evaluations;
  }
  best.evaluations = evals;
  return {best, de.value};
}

void attach_standard_errors(FitResult& r, const LifeTable& table) {
  if (!(r.params_hat.sigma2 > 0.0)) return;
  try {
    const auto se = hessian_se(r.params_hat, table);
    r.se = se.se;
    r.ci_sigma2 = se.ci_sigma2;
  } catch (const NumericError&) {
  }
}

}  // namespace

// ---------------------------------------------------------------------------

void Bounds::validate() const {
  if (lower.size() != upper.size() || lower.empty())
    throw std::invalid_argument("bounds must have matching non-zero dimension");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
      throw std::invalid_argument("bounds require finite lower < upper in every coordinate");
  }
}

void Bounds::clamp(std::span<double> x) const noexcept {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

OptimumPoint differential_evolution(const ObjectiveFn& f, const Bounds& bounds,
                                    const DeConfig& config, std::uint64_t seed) {
  bounds.validate();
  if (config.population < 4) throw std::invalid_argument("DE population must be >= 4");
  if (config.generations < 0) throw std::invalid_argument("DE generations must be >= 0");
  if (!(config.weight > 0.0 && config.weight <= 2.0))
    throw std::invalid_argument("DE weight must lie in (0, 2]");
  if (!(config.crossover >= 0.0 && config.crossover <= 1.0))
    throw std::invalid_argument("DE crossover must lie in [0, 1]");

  const std::size_t np = static_cast<std::size_t>(config.population);
  const std::size_t d = bounds.dim();
  Rng rng(seed);

  std::vector<std::vector<double>> pop(np, std::vector<double>(d));
  std::vector<double> fit(np);
  std::size_t non_finite = 0;
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < d; ++j) pop[i][j] = rng.uniform(bounds.lower[j], bounds.upper[j]);
    fit[i] = evaluate(f, pop[i]);
    if (fit[i] == kNegInf) ++non_finite;
  }
  if (2 * non_finite > np)
    throw NumericError("objective is non-finite at most of the initial DE population");

  std::vector<std::vector<double>> trial(np, std::vector<double>(d));
  for (int g = 0; g < config.generations; ++g) {
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do r1 = rng.index(np); while (r1 == i);
      do r2 = rng.index(np); while (r2 == i || r2 == r1);
      do r3 = rng.index(np); while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t jrand = rng.index(d);
      auto& u = trial[i];
      for (std::size_t j = 0; j < d; ++j) {
        const bool cross = rng.uniform() < config.crossover || j == jrand;
        if (!cross) {
          u[j] = pop[i][j];
          continue;
        }
        double v = pop[r1][j] + config.weight * (pop[r2][j] - pop[r3][j]);
        // out-of-box mutants land halfway between the parent and the bound
        if (v < bounds.lower[j]) v = 0.5 * (bounds.lower[j] + pop[i][j]);
        if (v > bounds.upper[j]) v = 0.5 * (bounds.upper[j] + pop[i][j]);
        u[j] = v;
      }
    }
    for (std::size_t i = 0; i < np; ++i) {
      const double fu = evaluate(f, trial[i]);
      if (fu >= fit[i]) {
        pop[i].swap(trial[i]);
        fit[i] = fu;
      }
    }
  }

  const auto best = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
  return {pop[best], fit[best], np * static_cast<std::size_t>(config.generations + 1), true};
}

OptimumPoint nelder_mead(const ObjectiveFn& f, std::span<const double> start, const Bounds& bounds,
                         const NelderMeadConfig& config) {
  bounds.validate();
  if (start.size() != bounds.dim()) throw std::invalid_argument("start has wrong dimension");

  std::vector<double> x(start.begin(), start.end());
  bounds.clamp(x);
  double fx = evaluate(f, x);
  std::size_t evals = 1;

  std::vector<double> steps(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    steps[i] = std::max(0.05 * std::abs(x[i]), 1e-3 * (bounds.upper[i] - bounds.lower[i]));

  bool converged = true;
  for (int r = 0; r <= config.max_restarts; ++r) {
    const auto run = simplex_run(f, x, fx, bounds, steps, config);
    evals += run.evaluations;
    converged = run.converged;
    const double gain = run.value - fx;
    if (run.value > fx) {
      x = run.x;
      fx = run.value;
    }
    if (!(gain > 10.0 * config.tolerance * (1.0 + std::abs(fx)))) break;
  }
  return {x, fx, evals, converged};
}

// ---------------------------------------------------------------------------

SearchBox SearchBox::for_penalty(const PenaltyConfig& cfg) {
  SearchBox box;
  box.lower.sigma2 = cfg.sigma2_floor;
  return box;
}

void SearchBox::validate() const {
  if (!(lower.a > 0.0 && lower.a < upper.a)) throw std::invalid_argument("search box: need 0 < a_lo < a_hi");
  if (!(lower.b > 0.0 && lower.b < upper.b)) throw std::invalid_argument("search box: need 0 < b_lo < b_hi");
  if (!(lower.sigma2 >= 0.0 && lower.sigma2 < upper.sigma2))
    throw std::invalid_argument("search box: need 0 <= sigma2_lo < sigma2_hi");
  if (!std::isfinite(upper.a) || !std::isfinite(upper.b) || !std::isfinite(upper.sigma2))
    throw std::invalid_argument("search box: bounds must be finite");
}

bool SearchBox::contains(const ModelParams& p) const noexcept {
  return p.a >= lower.a && p.a <= upper.a && p.b >= lower.b && p.b <= upper.b &&
         p.sigma2 >= lower.sigma2 && p.sigma2 <= upper.sigma2;
}

ParamOptimum differential_evolution(const ParamObjective& f, const SearchBox& box,
                                    const DeConfig& config, std::uint64_t seed) {
  box.validate();
  const auto r = differential_evolution(internal_objective(f, box), internal_bounds(box), config, seed);
  return {from_internal(r.x, box), r.value, r.evaluations, r.converged};
}

ParamOptimum nelder_mead(const ParamObjective& f, const ModelParams& start, const SearchBox& box,
                         const NelderMeadConfig& config) {
  box.validate();
  if (!box.contains(start)) throw std::invalid_argument("simplex start lies outside the search box");
  const auto x0 = to_internal(start);
  const auto r = nelder_mead(internal_objective(f, box), x0, internal_bounds(box), config);
  return {from_internal(r.x, box), r.value, r.evaluations, r.converged};
}

const char* to_string(FitMethod m) noexcept { return m == FitMethod::ml ? "ML" : "MAP"; }

FitResult fit_ml(const LifeTable& table, const FitOptions& options) {
  options.box.validate();
  if (table.empty()) throw std::invalid_argument("life table is empty");
  if (!(table.total_deaths() > 0.0))
    throw NumericError("life table has no deaths; the likelihood has no interior maximum");

  const ParamObjective f = [&table](const ModelParams& p) { return log_likelihood(p, table); };
  const auto s = global_search(f, options.box, options);

  FitResult r;
  r.method = FitMethod::ml;
  r.params_hat = s.best.params;
  r.loglik = log_likelihood(r.params_hat, table);
  r.mse = mse(r.params_hat, table);
  r.converged = s.best.converged;
  r.evaluations = s.best.evaluations;
  r.pre_step_objective = s.pre_step;
  r.objective = s.best.value;
  if (options.compute_se) attach_standard_errors(r, table);
  return r;
}

FitResult fit_map(const LifeTable& table, const PenaltyConfig& cfg, const FitOptions& options) {
  cfg.validate();
  if (table.empty()) throw std::invalid_argument("life table is empty");
  if (!(table.total_deaths() > 0.0))
    throw NumericError("life table has no deaths; the likelihood has no interior maximum");

  SearchBox box = options.box;
  box.lower.sigma2 = cfg.sigma2_floor;
  box.validate();

  const ParamObjective f = [&](const ModelParams& p) {
    return penalized_log_likelihood(p, table, cfg);
  };
  const auto s = global_search(f, box, options);

  FitResult r;
  r.method = FitMethod::map;
  r.penalized_loglik = s.best.value;
  r.converged = s.best.converged;
  r.evaluations = s.best.evaluations;
  r.pre_step_objective = s.pre_step;
  r.objective = s.best.value;

  if (cfg.snapping_enabled() && s.best.params.sigma2 < cfg.snap_threshold) {
    const ParamObjective ll = [&table](const ModelParams& p) { return log_likelihood(p, table); };
    const auto refit = fixed_sigma2_search(ll, box, s.best.params, 0.0, options.simplex);
    r.params_hat = refit.params;
    r.converged = r.converged && refit.converged;
    r.evaluations += refit.evaluations;
  } else {
    r.params_hat = s.best.params;
  }
  r.loglik = log_likelihood(r.params_hat, table);
  r.mse = mse(r.params_hat, table);
  if (options.compute_se) attach_standard_errors(r, table);
  return r;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd finite_difference_hessian(const ObjectiveFn& f, std::span<const double> x,
                                          std::span<const double> steps) {
  const std::size_t n = x.size();
  if (steps.size() != n) throw std::invalid_argument("steps and point differ in dimension");
  std::vector<double> y(x.begin(), x.end());
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    y.assign(x.begin(), x.end());
    y[i] += di;
    y[j] += dj;
    return f(y);
  };
  const double f0 = f(x);
  Eigen::MatrixXd h(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = steps[i];
    h(i, i) = (at(i, hi, i, 0.0) - 2.0 * f0 + at(i, -hi, i, 0.0)) / (hi * hi);
    for (std::size_t j = 0; j < i; ++j) {
      const double hj = steps[j];
      const double v = (at(i, hi, j, hj) - at(i, hi, j, -hj) - at(i, -hi, j, hj) + at(i, -hi, j, -hj)) /
                       (4.0 * hi * hj);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

Eigen::VectorXd standard_errors_from_hessian(const Eigen::MatrixXd& hessian) {
  if (!hessian.allFinite()) throw NumericError("Hessian has non-finite entries");
  const Eigen::MatrixXd info = -hessian;
  const Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) throw NumericError("Hessian is not negative definite");
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  const Eigen::VectorXd var = cov.diagonal();
  if ((var.array() <= 0.0).any() || !var.allFinite())
    throw NumericError("inverse information has a non-positive diagonal");
  return var.array().sqrt();
}

Eigen::Matrix3d log_likelihood_hessian(const ModelParams& params, const LifeTable& table) {
  params.validate();
  const PenaltyConfig unused;
  const std::array<double, 3> theta{params.a, params.b, params.sigma2};
  Eigen::Matrix3d h;
  for (int j = 0; j < 3; ++j) {
    const double step = std::max(1e-5 * std::abs(theta[j]), 1e-9);
    auto plus = theta;
    auto minus = theta;
    plus[j] += step;
    minus[j] -= step;
    if (minus[0] <= 0.0 || minus[1] <= 0.0 || minus[2] < 0.0)
      throw NumericError("finite-difference step leaves the parameter space");
    const auto gp = gradient({plus[0], plus[1], plus[2]}, table, unused, false);
    const auto gm = gradient({minus[0], minus[1], minus[2]}, table, unused, false);
    for (int i = 0; i < 3; ++i) h(i, j) = (gp[i] - gm[i]) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

StandardErrors hessian_se(const ModelParams& params_hat, const LifeTable& table) {
  params_hat.validate();
  if (!(params_hat.sigma2 > 0.0))
    throw NumericError("sigma2 is on the boundary; Wald standard errors are unavailable");
  const Eigen::MatrixXd h = log_likelihood_hessian(params_hat, table);
  const Eigen::VectorXd se = standard_errors_from_hessian(h);
  StandardErrors out;
  for (int i = 0; i < 3; ++i) out.se[static_cast<std::size_t>(i)] = se(i);
  out.ci_sigma2 = {params_hat.sigma2 - kWaldZ * out.se[2], params_hat.sigma2 + kWaldZ * out.se[2]};
  return out;
}

}  // namespace decel
