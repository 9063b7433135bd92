#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "cli.hpp"
#include "decel/errors.hpp"
#include "decel/optimize.hpp"
#include "decel/parallel.hpp"
#include "decel/profile.hpp"

namespace decel::cli {
namespace {

using nlohmann::json;

// Input problems map to exit 2, numeric ones to exit 3.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_number_list(const std::string& spec, std::size_t expected,
                                      const std::string& what) {
  std::vector<double> v;
  std::istringstream is(spec);
  std::string field;
  while (std::getline(is, field, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::logic_error&) {
      throw InputError(what + ": bad number '" + field + "'");
    }
  }
  if (v.size() != expected)
    throw InputError(what + ": expected " + std::to_string(expected) + " comma-separated values");
  return v;
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

json json_number(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

struct Output {
  std::string path;

  // Reports are assembled in memory and written only once complete.
  void write(const std::string& text, std::ostream& out) const {
    if (path.empty()) {
      out << text;
      return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot open output file '" + path + "'");
    f << text;
    if (!f.flush()) throw InputError("failed writing '" + path + "'");
  }
};

struct HmdSource {
  std::string deaths;
  std::string exposures;
  int year = 0;
  std::string sex = "f";
  int start_age = 70;
  bool cohort = false;

  void add_to(CLI::App& app, bool required) {
    auto* d = app.add_option("--deaths", deaths, "HMD deaths file (1x1)");
    auto* e = app.add_option("--exposures", exposures, "HMD exposures file (1x1)");
    auto* y = app.add_option("--year", year, "Calendar year, or birth year with --cohort");
    if (required) {
      d->required();
      e->required();
      y->required();
    }
    app.add_option("--sex", sex, "f, m or t")->capture_default_str();
    app.add_option("--start-age", start_age, "First age of the fitted range")->capture_default_str();
    app.add_flag("--cohort", cohort, "Read the files as cohort tables");
  }

  bool given() const { return !deaths.empty() || !exposures.empty(); }

  std::string label;

  LifeTable load() {
    const auto s = parse_sex(sex);
    const auto d = parse_hmd_file(std::filesystem::path(deaths), HmdKind::deaths);
    const auto e = parse_hmd_file(std::filesystem::path(exposures), HmdKind::exposures);
    label = d.label;
    return cohort ? extract_cohort_table(d, e, year, s, start_age)
                  : extract_period_table(d, e, year, s, start_age);
  }
};

PenaltyConfig penalty_config(double lambda) {
  PenaltyConfig cfg;
  cfg.lambda = lambda;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  HmdSource source;
  double lambda = 0.5;
  std::uint64_t seed = 1;
  std::string format = "csv";
  Output output;
};

std::string fit_csv(const std::vector<FitResult>& fits) {
  std::string s =
      "method,a,b,sigma2,loglik,penalized_loglik,mse,se_a,se_b,se_sigma2,"
      "ci_sigma2_lower,ci_sigma2_upper,converged,verdict\n";
  for (const auto& f : fits) {
    std::array<std::string, 3> se;
    if (f.se)
      for (std::size_t i = 0; i < 3; ++i) se[i] = format_number((*f.se)[i]);
    std::string lo, hi;
    if (f.ci_sigma2) {
      lo = format_number(f.ci_sigma2->lower);
      hi = format_number(f.ci_sigma2->upper);
    }
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(f.method),
                     format_number(f.params_hat.a), format_number(f.params_hat.b),
                     format_number(f.params_hat.sigma2), format_number(f.loglik),
                     optional_number(f.penalized_loglik), format_number(f.mse), se[0], se[1], se[2],
                     lo, hi, f.converged ? "true" : "false",
                     f.deceleration_detected() ? "deceleration" : "no deceleration");
  }
  return s;
}

std::string fit_json(const FitArgs& args, const std::string& label,
                     const std::vector<FitResult>& fits) {
  json doc;
  doc["population"] = {{"label", label},
                       {"year", args.source.year},
                       {"sex", to_string(parse_sex(args.source.sex))},
                       {"start_age", args.source.start_age},
                       {"layout", args.source.cohort ? "cohort" : "period"}};
  doc["lambda"] = args.lambda;
  doc["seed"] = args.seed;
  doc["fits"] = json::array();
  for (const auto& f : fits) {
    json j;
    j["method"] = to_string(f.method);
    j["a"] = f.params_hat.a;
    j["b"] = f.params_hat.b;
    j["sigma2"] = f.params_hat.sigma2;
    j["loglik"] = json_number(f.loglik);
    j["penalized_loglik"] = f.penalized_loglik ? json_number(*f.penalized_loglik) : json(nullptr);
    j["mse"] = f.mse;
    j["se"] = f.se ? json{{"a", (*f.se)[0]}, {"b", (*f.se)[1]}, {"sigma2", (*f.se)[2]}} : json(nullptr);
    j["ci_sigma2"] = f.ci_sigma2 ? json::array({f.ci_sigma2->lower, f.ci_sigma2->upper}) : json(nullptr);
    j["converged"] = f.converged;
    j["deceleration"] = f.deceleration_detected();
    doc["fits"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

int run_fit(FitArgs& args, std::ostream& out, std::ostream& err) {
  if (args.format != "csv" && args.format != "json") throw InputError("--format must be csv or json");
  const auto cfg = penalty_config(args.lambda);
  const auto table = args.source.load();

  FitOptions options;
  options.seed = args.seed;
  std::vector<FitResult> fits{fit_ml(table, options), fit_map(table, cfg, options)};

  args.output.write(args.format == "csv" ? fit_csv(fits) : fit_json(args, args.source.label, fits), out);
  bool converged = true;
  for (const auto& f : fits) {
    if (!f.converged) {
      err << "warning: " << to_string(f.method) << " fit did not converge\n";
      converged = false;
    }
  }
  return converged ? kOk : kNumericError;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string scenarios;
  std::optional<std::size_t> replications;
  bool full_scale = false;
  std::uint64_t seed = 1;
  double lambda = 0.5;
  Output output;
};

constexpr std::size_t kFullScaleReplications = 2000;

int run_simulate(SimulateArgs& args, std::ostream& out, std::ostream& err) {
  std::ifstream in(args.scenarios);
  if (!in) throw InputError("cannot open scenario file '" + args.scenarios + "'");
  auto entries = parse_scenarios(in, args.seed);
  if (args.replications && *args.replications == 0) throw InputError("--replications must be positive");

  ScenarioRunOptions options;
  options.penalty = penalty_config(args.lambda);

  std::vector<SimulationSummary> done;
  std::vector<std::pair<std::string, std::string>> failures;
  for (auto& e : entries) {
    auto& sc = e.scenario;
    if (args.replications)
      sc.replications = *args.replications;
    else if (args.full_scale)
      sc.replications = kFullScaleReplications;
    try {
      done.push_back(run_scenario(sc, options));
    } catch (const NumericError& ex) {
      err << "scenario " << sc.id << " failed: " << ex.what() << "\n";
      failures.emplace_back(sc.id, ex.what());
    }
  }

  std::string s = "scenario,method,parameter,bias,sd,n_converged\n";
  static constexpr const char* kNames[] = {"a", "b", "sigma2"};
  for (const auto& sum : done) {
    for (const auto m : {FitMethod::ml, FitMethod::map}) {
      const auto& ms = sum.method(m);
      for (std::size_t i = 0; i < 3; ++i)
        s += fmt::format("{},{},{},{},{},{}\n", sum.scenario.id, to_string(m), kNames[i],
                         format_number(ms.stats[i].bias), optional_number(ms.stats[i].sd),
                         ms.n_converged);
    }
  }
  const bool has_null = std::any_of(done.begin(), done.end(), [](auto& d) { return d.scenario.is_null(); });
  const bool has_alt = std::any_of(done.begin(), done.end(), [](auto& d) { return !d.scenario.is_null(); });
  if (has_null && has_alt) {
    try {
      const auto rates = error_rates(done);
      s += fmt::format("\nmetric,value\ntype_I_error,{}\ntype_II_error,{}\n",
                       format_number(rates.type_one), format_number(rates.type_two));
    } catch (const std::invalid_argument& ex) {
      err << "error rates unavailable: " << ex.what() << "\n";
    }
  }
  bool partial = !failures.empty();
  for (const auto& sum : done) partial = partial || sum.n_failed > 0;
  if (partial) {
    s += "\nscenario,failed_replications,error\n";
    for (const auto& sum : done) {
      if (sum.n_failed == 0) continue;
      std::string first;
      for (const auto& r : sum.replications)
        if (r.failed) {
          first = r.error;
          break;
        }
      s += fmt::format("{},{},\"{}\"\n", sum.scenario.id, sum.n_failed, first);
    }
    for (const auto& [id, what] : failures) s += fmt::format("{},all,\"{}\"\n", id, what);
  }
  args.output.write(s, out);
  return failures.empty() ? kOk : kNumericError;
}

// ---------------------------------------------------------------------------
// batch-compare

struct BatchArgs {
  std::string manifest;
  double lambda = 0.5;
  std::uint64_t seed = 1;
  Output output;
};

struct Population {
  std::size_t entry = 0;
  int year = 0;
  Sex sex = Sex::female;
  std::optional<FitResult> ml;
  std::optional<FitResult> map;
  std::string error;
};

int run_batch(BatchArgs& args, std::ostream& out, std::ostream& err) {
  std::ifstream in(args.manifest);
  if (!in) throw InputError("cannot open manifest '" + args.manifest + "'");
  const auto base = std::filesystem::path(args.manifest).parent_path();
  const auto entries = parse_manifest(in, base);
  const auto cfg = penalty_config(args.lambda);

  // Parse each entry's files once; an unreadable entry fails all its rows.
  struct Loaded {
    std::optional<HmdDataset> deaths, exposures;
    std::string error;
  };
  std::vector<Loaded> loaded(entries.size());
  std::vector<Population> pops;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    try {
      loaded[i].deaths = parse_hmd_file(e.deaths, HmdKind::deaths);
      loaded[i].exposures = parse_hmd_file(e.exposures, HmdKind::exposures);
    } catch (const std::exception& ex) {
      loaded[i].error = ex.what();
    }
    for (int y : e.years)
      for (Sex s : e.sexes) pops.push_back({i, y, s, {}, {}, loaded[i].error});
  }

  parallel_for(pops.size(), default_worker_count(), [&](std::size_t k) {
    auto& p = pops[k];
    if (!p.error.empty()) return;
    const auto& e = entries[p.entry];
    const auto& l = loaded[p.entry];
    try {
      const auto table = e.layout == HmdLayout::cohort
                             ? extract_cohort_table(*l.deaths, *l.exposures, p.year, p.sex, e.start_age)
                             : extract_period_table(*l.deaths, *l.exposures, p.year, p.sex, e.start_age);
      FitOptions options;
      options.seed = args.seed;
      p.ml = fit_ml(table, options);
      p.map = fit_map(table, cfg, options);
    } catch (const std::exception& ex) {
      p.error = ex.what();
      p.ml.reset();
      p.map.reset();
    }
  });

  std::string s =
      "label,year,sex,ml_sigma2,ml_ci_lower,ml_ci_upper,ml_mse,map_sigma2,map_mse,"
      "better_method,agree\n";
  std::size_t ok = 0, agree = 0, map_better = 0;
  for (const auto& p : pops) {
    const auto& e = entries[p.entry];
    if (!p.ml) {
      err << fmt::format("skipped {} {} {}: {}\n", e.label, p.year, to_string(p.sex), p.error);
      continue;
    }
    // ML flags deceleration when the Wald interval excludes zero; MAP when
    // its estimate is positive.
    const bool ml_says = p.ml->ci_sigma2 && p.ml->ci_sigma2->lower > 0.0;
    const bool map_says = p.map->deceleration_detected();
    const bool same = ml_says == map_says;
    const char* better = p.map->mse < p.ml->mse ? "MAP" : p.ml->mse < p.map->mse ? "ML" : "tie";
    ++ok;
    agree += same;
    map_better += p.map->mse < p.ml->mse;
    std::string lo, hi;
    if (p.ml->ci_sigma2) {
      lo = format_number(p.ml->ci_sigma2->lower);
      hi = format_number(p.ml->ci_sigma2->upper);
    }
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", e.label, p.year, to_string(p.sex),
                     format_number(p.ml->params_hat.sigma2), lo, hi, format_number(p.ml->mse),
                     format_number(p.map->params_hat.sigma2), format_number(p.map->mse), better,
                     same ? "true" : "false");
  }
  if (ok == 0) {
    err << "no population could be fitted\n";
    return kInputError;
  }
  s += fmt::format("\nn_populations,n_failed,agreement_percent,map_lower_mse\n{},{},{},{}\n", ok,
                   pops.size() - ok, format_number(100.0 * static_cast<double>(agree) / static_cast<double>(ok)),
                   map_better);
  args.output.write(s, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// profile

struct ProfileArgs {
  HmdSource source;
  std::string synthetic;
  std::uint64_t seed = 1;
  std::string param;
  std::string grid;
  std::string theta;
  bool slice = false;
  double lambda = 0.5;
  Output output;
};

int run_profile(ProfileArgs& args, std::ostream& out, std::ostream&) {
  const auto param = parse_profile_param(args.param);
  const auto grid = ProfileGrid::parse(args.grid);
  grid.validate(param);
  const auto cfg = penalty_config(args.lambda);

  if (args.source.given() == !args.synthetic.empty())
    throw InputError("give either --deaths/--exposures/--year or --synthetic");
  std::optional<LifeTable> table;
  if (args.source.given()) {
    if (args.source.deaths.empty() || args.source.exposures.empty())
      throw InputError("--deaths and --exposures are both required");
    table = args.source.load();
  } else {
    const auto v = parse_number_list(args.synthetic, 4, "--synthetic");
    const ModelParams truth{v[0], v[1], v[2]};
    truth.validate();
    if (!(v[3] >= 1.0) || v[3] != std::floor(v[3])) throw InputError("--synthetic: n must be a positive integer");
    const auto lifetimes = sample_lifetimes(static_cast<std::size_t>(v[3]), truth, args.seed);
    table = build_life_table(lifetimes, 120).table;
  }

  ModelParams reference;
  if (!args.theta.empty()) {
    const auto v = parse_number_list(args.theta, 3, "--theta");
    reference = {v[0], v[1], v[2]};
    reference.validate();
  } else {
    FitOptions options;
    options.seed = args.seed;
    options.compute_se = false;
    reference = fit_ml(*table, options).params_hat;
  }

  const auto points = profile_curve(*table, reference, param, grid,
                                    args.slice ? ProfileMode::slice : ProfileMode::profile, cfg);
  std::string s = fmt::format("{},loglik,penalized_loglik\n", to_string(param));
  for (const auto& p : points)
    s += fmt::format("{},{},{}\n", format_number(p.value), format_number(p.loglik),
                     format_number(p.penalized_loglik));
  args.output.write(s, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gamma-Gompertz mortality deceleration fits", "decel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "decel 0.1.0");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit ML and MAP models to one HMD population");
  fit.source.add_to(*fit_cmd, true);
  fit_cmd->add_option("--lambda", fit.lambda, "Penalty weight")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Search seed")->capture_default_str();
  fit_cmd->add_option("--format", fit.format, "csv or json")->capture_default_str();
  fit_cmd->add_option("--out", fit.output.path, "Output file (default stdout)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run simulation scenarios");
  sim_cmd->add_option("--scenarios", sim.scenarios, "Scenario INI file")->required();
  sim_cmd->add_option("--replications", sim.replications, "Replications per scenario");
  sim_cmd->add_flag("--full-scale", sim.full_scale, "Use 2000 replications per scenario");
  sim_cmd->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--lambda", sim.lambda, "Penalty weight")->capture_default_str();
  sim_cmd->add_option("--out", sim.output.path, "Output file (default stdout)");

  BatchArgs batch;
  auto* batch_cmd = app.add_subcommand("batch-compare", "Compare ML and MAP over many populations");
  batch_cmd->add_option("--manifest", batch.manifest, "Manifest CSV")->required();
  batch_cmd->add_option("--lambda", batch.lambda, "Penalty weight")->capture_default_str();
  batch_cmd->add_option("--seed", batch.seed, "Search seed")->capture_default_str();
  batch_cmd->add_option("--out", batch.output.path, "Output file (default stdout)");

  ProfileArgs prof;
  auto* prof_cmd = app.add_subcommand("profile", "Profile or slice the (penalized) log-likelihood");
  prof.source.add_to(*prof_cmd, false);
  prof_cmd->add_option("--synthetic", prof.synthetic, "Simulated data: a,b,sigma2,n");
  prof_cmd->add_option("--seed", prof.seed, "Seed for --synthetic and the reference fit")
      ->capture_default_str();
  prof_cmd->add_option("--param", prof.param, "a, b or sigma2")->required();
  prof_cmd->add_option("--grid", prof.grid, "LO:HI:N")->required();
  prof_cmd->add_option("--theta", prof.theta, "Reference a,b,sigma2 (default: ML fit)");
  prof_cmd->add_flag("--slice", prof.slice, "Hold the other parameters at the reference");
  prof_cmd->add_option("--lambda", prof.lambda, "Penalty weight")->capture_default_str();
  prof_cmd->add_option("--out", prof.output.path, "Output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (!app.get_subcommands().empty())
      err << "run 'decel " << app.get_subcommands().front()->get_name() << " --help' for usage\n";
    return kInputError;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit, out, err);
    if (sim_cmd->parsed()) return run_simulate(sim, out, err);
    if (batch_cmd->parsed()) return run_batch(batch, out, err);
    return run_profile(prof, out, err);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const HmdError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace decel::cli
