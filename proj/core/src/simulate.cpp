#include "decel/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "decel/errors.hpp"
#include "decel/parallel.hpp"
#include "decel/random.hpp"

namespace decel {

double lifetime_from_uniform(double u, const ModelParams& params) {
  params.validate();
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("uniform draw must lie in (0, 1)");
  const double a = params.a;
  const double b = params.b;
  const double s = params.sigma2;
  if (params.is_gompertz()) return std::log1p(-(b / a) * std::log(u)) / b;
  // S(x) = (1 + s (a/b)(e^{bx} - 1))^{-1/s}  =>  e^{bx} - 1 = (b/(a s))(u^{-s} - 1)
  return std::log1p((b / (a * s)) * std::expm1(-s * std::log(u))) / b;
}

std::vector<double> sample_lifetimes(std::size_t n, const ModelParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = lifetime_from_uniform(rng.uniform(), params);
  return out;
}

LifeTableBuild build_life_table(std::span<const double> lifetimes, int max_age) {
  if (max_age < 0) throw std::invalid_argument("max_age must be >= 0");
  const auto cells_n = static_cast<std::size_t>(max_age) + 1;
  const double horizon = static_cast<double>(max_age) + 1.0;

  std::vector<double> deaths(cells_n, 0.0);
  std::vector<double> partial(cells_n, 0.0);
  std::size_t censored = 0;
  for (const double x : lifetimes) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("lifetimes must be finite and > 0");
    if (x >= horizon) {
      ++censored;
      continue;
    }
    const auto k = static_cast<std::size_t>(std::floor(x));
    deaths[k] += 1.0;
    partial[k] += x - static_cast<double>(k);
  }

  // E_x = #{X >= x+1} + sum over deaths in [x, x+1) of (X - x)
  std::vector<LifeTableCell> cells(cells_n);
  double survivors = static_cast<double>(censored);
  for (std::size_t i = cells_n; i-- > 0;) {
    cells[i] = {deaths[i], survivors + partial[i]};
    survivors += deaths[i];
  }
  return {LifeTable(0, std::move(cells)), censored};
}

void SimulationScenario::validate() const {
  true_params.validate();
  if (sample_size < 1) throw std::invalid_argument("scenario " + id + ": sample_size must be >= 1");
  if (replications < 1) throw std::invalid_argument("scenario " + id + ": replications must be >= 1");
  if (max_age < 1) throw std::invalid_argument("scenario " + id + ": max_age must be >= 1");
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t r) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(r));
}

namespace {

void summarize_method(MethodSummary& out, const SimulationSummary& s, FitMethod m) {
  const auto& truth = s.scenario.true_params;
  const std::array<double, 3> true_theta{truth.a, truth.b, truth.sigma2};
  out = MethodSummary{};

  std::array<double, 3> sum{};
  std::vector<std::array<double, 3>> kept;
  for (const auto& rep : s.replications) {
    if (rep.failed) continue;
    const bool converged = m == FitMethod::ml ? rep.ml_converged : rep.map_converged;
    if (!converged) {
      ++out.n_nonconverged;
      continue;
    }
    const auto& p = m == FitMethod::ml ? rep.ml : rep.map;
    const std::array<double, 3> theta{p.a, p.b, p.sigma2};
    for (std::size_t k = 0; k < 3; ++k) sum[k] += theta[k];
    kept.push_back(theta);
    if (p.sigma2 > 0.0)
      ++out.n_positive_sigma2;
    else
      ++out.n_zero_sigma2;
  }
  out.n_converged = kept.size();
  if (kept.empty()) return;

  const double n = static_cast<double>(kept.size());
  for (std::size_t k = 0; k < 3; ++k) {
    const double mean = sum[k] / n;
    out.stats[k].bias = mean - true_theta[k];
    if (kept.size() >= 2) {
      double ss = 0.0;
      for (const auto& t : kept) ss += (t[k] - mean) * (t[k] - mean);
      out.stats[k].sd = std::sqrt(ss / (n - 1.0));
    }
  }
}

}  // namespace

void summarize(SimulationSummary& summary) {
  summary.n_failed = 0;
  for (const auto& rep : summary.replications)
    if (rep.failed) ++summary.n_failed;
  summarize_method(summary.ml, summary, FitMethod::ml);
  summarize_method(summary.map, summary, FitMethod::map);
}

SimulationSummary run_scenario(const SimulationScenario& scenario, const ScenarioRunOptions& options) {
  scenario.validate();
  options.penalty.validate();
  options.box.validate();

  SimulationSummary summary;
  summary.scenario = scenario;
  summary.replications.resize(scenario.replications);

  const unsigned workers = options.workers == 0 ? default_worker_count() : options.workers;
  parallel_for(scenario.replications, workers, [&](std::size_t r) {
    auto& rep = summary.replications[r];
    rep.seed = replication_seed(scenario.master_seed, r);
    try {
      const auto lifetimes = sample_lifetimes(scenario.sample_size, scenario.true_params, rep.seed);
      const auto built = build_life_table(lifetimes, scenario.max_age);
      rep.censored = built.censored;

      FitOptions fit;
      fit.box = options.box;
      fit.de = options.de;
      fit.seed = mix64(rep.seed);
      fit.compute_se = false;
      const auto ml = fit_ml(built.table, fit);
      const auto map = fit_map(built.table, options.penalty, fit);
      rep.ml = ml.params_hat;
      rep.ml_converged = ml.converged;
      rep.map = map.params_hat;
      rep.map_converged = map.converged;
    } catch (const std::exception& e) {
      rep.failed = true;
      rep.error = e.what();
    }
  });

  summarize(summary);
  if (10 * summary.n_failed > scenario.replications)
    throw NumericError("scenario " + scenario.id + ": more than 10% of replications failed");
  return summary;
}

ErrorRates error_rates(std::span<const SimulationSummary> summaries) {
  ErrorRates out;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  for (const auto& s : summaries) {
    if (s.scenario.is_null()) {
      out.null_replications += s.map.n_converged;
      false_positive += s.map.n_positive_sigma2;
    } else {
      out.alternative_replications += s.map.n_converged;
      false_negative += s.map.n_zero_sigma2;
    }
  }
  if (out.null_replications == 0 || out.alternative_replications == 0)
    throw std::invalid_argument("error rates need converged null and alternative replications");
  out.type_one = static_cast<double>(false_positive) / static_cast<double>(out.null_replications);
  out.type_two = static_cast<double>(false_negative) / static_cast<double>(out.alternative_replications);
  return out;
}

}  // namespace decel
