#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "csv.hpp"
#include "rwlab/asymptotics.hpp"
#include "rwlab/coarse.hpp"
#include "rwlab/error.hpp"
#include "rwlab/estimators.hpp"
#include "rwlab/field.hpp"
#include "rwlab/perco.hpp"
#include "rwlab/rng.hpp"
#include "rwlab/walk.hpp"

namespace rwlab::app {

namespace {

// Stream tree: master seed -> command tag -> lambda index -> estimator.
constexpr std::uint64_t kEnvTag = 0x656e76;

std::uint64_t lambda_seed(const ExperimentConfig& cfg, std::uint64_t tag, std::size_t k) {
  return derive_key(derive_key(cfg.seed, tag), k);
}

std::uint64_t environment_seed(const ExperimentConfig& cfg) { return derive_key(cfg.seed, kEnvTag); }

WalkConfig walk_config(const ExperimentConfig& cfg, const PotentialDistribution& mu,
                       double lambda) {
  WalkConfig w{cfg.d, 0.0, cfg.step_cap};
  if (cfg.tilt) {
    w.tilt = *cfg.tilt;
    return w;
  }
  return with_default_tilt(w, mu, lambda);
}

SamplingOptions sampling(const ExperimentConfig& cfg, std::uint64_t seed) {
  SamplingOptions o;
  o.replicas = cfg.replicas;
  o.workers = cfg.workers;
  o.seed = seed;
  return o;
}

CsvWriter cost_writer(std::ostream& out) {
  return CsvWriter(out, {"mu", "lambda", "eps", "d", "n", "kind", "value", "stderr", "censored",
                         "replicas", "seed"});
}

void cost_row(CsvWriter& w, const ExperimentConfig& cfg, double lambda, std::int64_t n,
              std::string_view kind, double value, double se, double censored,
              std::uint64_t replicas) {
  w << cfg.mu << lambda << cfg.eps << cfg.d << n << kind << value << se << censored << replicas
    << cfg.seed;
  w.end_row();
}

std::int64_t largest_n(const ExperimentConfig& cfg) {
  return *std::max_element(cfg.n_window.begin(), cfg.n_window.end());
}

double max_censored(const ExponentEstimate& e) {
  double c = 0.0;
  for (const auto& p : e.per_n) c = std::max(c, p.censored_mass);
  return c;
}

void alpha_rows(CsvWriter& w, const ExperimentConfig& cfg, double lambda, std::string_view cost_kind,
                std::string_view alpha_kind, const ExponentEstimate& e) {
  for (const auto& p : e.per_n)
    cost_row(w, cfg, lambda, p.n, cost_kind, p.value, p.std_error, p.censored_mass, p.replicas);
  cost_row(w, cfg, lambda, largest_n(cfg), alpha_kind, e.alpha, e.std_error, max_censored(e),
           cfg.replicas);
}

std::vector<std::uint64_t> env_seeds(const ExperimentConfig& cfg, std::size_t k) {
  std::vector<std::uint64_t> seeds;
  const std::uint64_t root = derive_key(lambda_seed(cfg, 0x71, k), kEnvTag);
  for (std::size_t i = 0; i < cfg.env_seeds; ++i) seeds.push_back(derive_key(root, i));
  return seeds;
}

ExponentEstimate run_annealed(const ExperimentConfig& cfg, const PotentialDistribution& mu,
                              std::size_t k) {
  const double lambda = cfg.lambdas[k];
  return annealed_alpha(mu, lambda, cfg.n_window, walk_config(cfg, mu, lambda),
                        sampling(cfg, lambda_seed(cfg, 0x61, k)), cfg.fit);
}

QuenchedAlpha run_quenched(const ExperimentConfig& cfg, const PotentialDistribution& mu,
                           std::size_t k) {
  const double lambda = cfg.lambdas[k];
  const auto seeds = env_seeds(cfg, k);
  return quenched_alpha(seeds, mu, lambda, cfg.n_window, walk_config(cfg, mu, lambda),
                        sampling(cfg, lambda_seed(cfg, 0x71, k)), cfg.fit);
}

double scale_for(const ExperimentConfig& cfg, const PotentialDistribution& mu, double lambda) {
  if (cfg.L) return *cfg.L;
  if (cfg.d < 3) throw ConfigError("config field 'L': required when d < 3");
  return report(mu, cfg.eps, lambda, cfg.d).L_lambda;
}

GoodnessMode goodness_mode(const ExperimentConfig& cfg, const PotentialDistribution& mu,
                           double lambda) {
  if (cfg.mode == "Case1") return GoodnessMode::kCase1;
  if (cfg.mode == "Case2") return GoodnessMode::kCase2;
  if (cfg.d < 3) return GoodnessMode::kCase1;
  return report(mu, cfg.eps, lambda, cfg.d).regime == Regime::kMassAboveCutoff
             ? GoodnessMode::kCase1
             : GoodnessMode::kCase2;
}

ScenarioParams checked_scenario(const ExperimentConfig& cfg, double scale) {
  ScenarioParams p = cfg.scenario(scale);
  p.validate();
  return p;
}

EventKind event_kind(const std::string& name) {
  if (name == "A_hL_M") return EventKind::kAhLM;
  if (name == "TildeA") return EventKind::kTildeA;
  if (name == "A_M_eps0_delta") return EventKind::kAM;
  if (name == "Chain") return EventKind::kChain;
  return EventKind::kCase2;
}

}  // namespace

void cmd_qd(const ExperimentConfig& cfg, std::ostream& out) {
  const ReturnMethod method =
      cfg.qd_method == "montecarlo" ? ReturnMethod::kMonteCarlo : ReturnMethod::kQuadrature;
  ReturnProbabilityOptions opts;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;
  if (method == ReturnMethod::kMonteCarlo) opts.mc_replicas = cfg.replicas;
  std::optional<LatticeConstants> lc;
  QdCache cache;
  if (!cfg.cache.empty() && method == ReturnMethod::kQuadrature) {
    cache = QdCache::load(cfg.cache);
    lc = cache.lookup(cfg.d, method, opts.tolerance);
  }
  if (!lc) {
    lc = return_probability(cfg.d, method, opts);
    if (!cfg.cache.empty() && method == ReturnMethod::kQuadrature) {
      cache.store(*lc);
      cache.save(cfg.cache);
    }
  }
  CsvWriter w(out, {"d", "method", "qd", "green_at_origin", "tolerance", "stderr", "raw_no_return",
                    "bias_bound", "mc_steps", "replicas"});
  w << lc->d << to_string(lc->method) << lc->qd << lc->green_at_origin << lc->tolerance
    << lc->std_error << lc->raw_no_return << lc->bias_bound << lc->mc_steps
    << static_cast<std::uint64_t>(lc->replicas);
  w.end_row();
}

void cmd_predict(const ExperimentConfig& cfg, std::ostream& out) {
  const auto mu = cfg.law();
  // All rows first, so a degenerate lambda leaves no partial table behind.
  std::vector<AsymptoticReport> rows;
  for (double lambda : cfg.lambdas) rows.push_back(report(mu, cfg.eps, lambda, cfg.d));
  CsvWriter w(out, {"mu", "lambda", "eps", "d", "qd", "I_lambda", "I_eps_lambda", "L_lambda",
                    "predicted_alpha", "tail_prob", "regime"});
  for (const auto& r : rows) {
    const double lambda = r.lambda;
    w << cfg.mu << lambda << cfg.eps << cfg.d << r.qd << r.I_lambda << r.I_eps_lambda << r.L_lambda
      << r.predicted_alpha << r.tail_prob << to_string(r.regime);
    w.end_row();
  }
}

void cmd_annealed(const ExperimentConfig& cfg, std::ostream& out) {
  const auto mu = cfg.law();
  auto w = cost_writer(out);
  for (std::size_t k = 0; k < cfg.lambdas.size(); ++k)
    alpha_rows(w, cfg, cfg.lambdas[k], "annealed_cost", "annealed_alpha", run_annealed(cfg, mu, k));
}

void cmd_quenched(const ExperimentConfig& cfg, std::ostream& out) {
  const auto mu = cfg.law();
  auto w = cost_writer(out);
  for (std::size_t k = 0; k < cfg.lambdas.size(); ++k)
    alpha_rows(w, cfg, cfg.lambdas[k], "quenched_cost", "quenched_alpha",
               run_quenched(cfg, mu, k).estimate);
}

void cmd_scan(const ExperimentConfig& cfg, std::ostream& out) {
  const auto mu = cfg.law();
  auto w = cost_writer(out);
  const std::int64_t n = largest_n(cfg);
  for (std::size_t k = 0; k < cfg.lambdas.size(); ++k) {
    const double lambda = cfg.lambdas[k];
    const AsymptoticReport r = report(mu, cfg.eps, lambda, cfg.d);
    const ExponentEstimate ann = run_annealed(cfg, mu, k);
    const ExponentEstimate que = run_quenched(cfg, mu, k).estimate;
    const double pred = r.predicted_alpha;
    cost_row(w, cfg, lambda, n, "predicted_alpha", pred, 0.0, 0.0, 0);
    cost_row(w, cfg, lambda, n, "annealed_alpha", ann.alpha, ann.std_error, max_censored(ann),
             cfg.replicas);
    cost_row(w, cfg, lambda, n, "quenched_alpha", que.alpha, que.std_error, max_censored(que),
             cfg.replicas);
    cost_row(w, cfg, lambda, n, "annealed_ratio", ann.alpha / pred, ann.std_error / pred,
             max_censored(ann), cfg.replicas);
    cost_row(w, cfg, lambda, n, "quenched_ratio", que.alpha / pred, que.std_error / pred,
             max_censored(que), cfg.replicas);
  }
}

void cmd_certify(const ExperimentConfig& cfg, std::ostream& out) {
  const auto mu = cfg.law();
  const double lambda = cfg.lambdas.front();
  const double scale = scale_for(cfg, mu, lambda);
  GoodnessParams g = GoodnessParams::from(cfg.scenario(scale), lambda);
  const EnvironmentField env(environment_seed(cfg), mu, cfg.d);
  const std::int32_t half = cfg.region.value_or(static_cast<std::int32_t>(std::ceil(scale)));
  Box region{cfg.d, {}, {}};
  for (int i = 0; i < cfg.d; ++i) {
    region.lo[i] = -half;
    region.hi[i] = half;
  }
  const auto rep =
      certify_region(env, region, g, goodness_mode(cfg, mu, lambda), cfg.volume_cap, cfg.workers);
  out << to_json(rep) << '\n';
}

void cmd_perc(const ExperimentConfig& cfg, std::ostream& out) {
  OrientedGrid grid;
  if (cfg.p_open) {
    grid = random_grid(cfg.N, cfg.j_max.value_or(cfg.N), *cfg.p_open, cfg.seed);
  } else {
    const auto mu = cfg.law();
    const double lambda = cfg.lambdas.front();
    const ScenarioParams p = checked_scenario(cfg, scale_for(cfg, mu, lambda));
    const EnvironmentField env(environment_seed(cfg), mu, cfg.d);
    grid = build_grid(env, p, lambda, cfg.N, cfg.j_max, goodness_mode(cfg, mu, lambda),
                      cfg.volume_cap, cfg.workers);
  }
  const auto path = directed_path(grid);
  if (cfg.ascii)
    out << render_ascii(grid, path);
  else
    out << to_json(grid, path) << '\n';
}

void cmd_events(const ExperimentConfig& cfg, std::ostream& out) {
  const ScenarioParams p = checked_scenario(cfg, cfg.L.value_or(30.0));
  const auto mu = cfg.law();
  const double lambda = cfg.lambdas.front();
  const EnvironmentField env(environment_seed(cfg), mu, cfg.d);
  const double cutoff = cfg.eps / lambda;
  std::vector<EventSpec> specs;
  for (const auto& name : cfg.events) {
    EventSpec s;
    s.kind = event_kind(name);
    if (s.kind == EventKind::kChain) {
      s.path_columns.push_back(0);
      for (int i = 1; i <= cfg.N; ++i) s.path_columns.push_back(i % 2);
    }
    if (s.kind == EventKind::kCase2) {
      s.chi = cfg.chi == "diffusive" ? ChiReading::kDiffusive : ChiReading::kLiteral;
      s.important = [&env, cutoff](const Site& x) { return env.value_at(x) >= cutoff; };
    }
    specs.push_back(std::move(s));
  }
  const auto rates = event_rates(p, specs, cfg.replicas, cfg.seed, cfg.workers);
  CsvWriter w(out, {"kind", "d", "M", "L", "eps0", "probability", "stderr", "hits", "undecided",
                    "rate", "replicas", "seed"});
  for (const auto& r : rates) {
    w << to_string(r.kind) << cfg.d << p.M << p.L << p.eps0 << r.probability.value
      << r.probability.std_error << static_cast<std::uint64_t>(r.hits)
      << static_cast<std::uint64_t>(r.undecided) << r.rate
      << static_cast<std::uint64_t>(cfg.replicas) << cfg.seed;
    w.end_row();
  }
}

void cmd_oracle(const ExperimentConfig& cfg, std::ostream& out) {
  const auto mu = cfg.law();
  auto w = cost_writer(out);
  const std::int64_t n = cfg.n_window.front();
  for (std::size_t k = 0; k < cfg.lambdas.size(); ++k) {
    const double lambda = cfg.lambdas[k];
    const WalkConfig wc = walk_config(cfg, mu, lambda);
    const auto opts = sampling(cfg, lambda_seed(cfg, 0x6f, k));
    if (cfg.d == 1) {
      const AnnealedBracket b = enumerate_annealed(mu, lambda, n, cfg.t_cap);
      const PassageCost c = annealed_cost(mu, lambda, n, wc, opts);
      cost_row(w, cfg, lambda, n, "bracket_cost_low", -std::log(b.z_upper()), 0.0, 0.0, 0);
      cost_row(w, cfg, lambda, n, "bracket_cost_high", -std::log(b.z_lower), 0.0, 0.0, 0);
      cost_row(w, cfg, lambda, n, "annealed_cost", c.value, c.std_error, c.censored_mass,
               c.replicas);
      continue;
    }
    const EnvironmentField env(environment_seed(cfg), mu, cfg.d);
    Box box{cfg.d, {}, {}};
    for (int i = 0; i < cfg.d; ++i) {
      box.lo[i] = -cfg.box;
      box.hi[i] = cfg.box;
    }
    box.hi[0] = static_cast<std::int32_t>(n);
    const ConvergedPassage exact = exact_passage_converged(env, lambda, n, box, 1e-9, 1.5,
                                                           cfg.volume_cap);
    const PassageCost c = quenched_cost(env, lambda, n, wc, opts);
    cost_row(w, cfg, lambda, n, "exact_passage", -std::log(exact.solution.z), 0.0, 0.0, 0);
    cost_row(w, cfg, lambda, n, "quenched_cost", c.value, c.std_error, c.censored_mass,
             c.replicas);
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rwlab: random walk in random potential laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> d;
  std::optional<std::string> mu;
  std::vector<double> lambdas;
  std::optional<double> eps;
  std::vector<std::int64_t> n_window;
  std::optional<std::size_t> replicas;
  std::optional<unsigned> workers;
  std::optional<std::string> out_path;
  std::optional<double> tilt, M, eps0, delta, delta1, L, p_open;
  std::optional<std::size_t> env_seeds;
  std::optional<std::string> fit, mode, chi, method, cache;
  std::optional<int> N, j_max, t_cap;
  std::optional<std::int32_t> region, box;
  std::vector<std::string> events;
  bool ascii = false;

  app.add_option("--config", config_path, "JSON config file; flags override its fields");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--d", d, "lattice dimension");
  app.add_option("--mu", mu, "potential law, e.g. pareto:0.7,1");
  app.add_option("--lambda", lambdas, "lambda values (comma separated)")->delimiter(',');
  app.add_option("--eps", eps, "truncation epsilon");
  app.add_option("--n", n_window, "plane distances (comma separated)")->delimiter(',');
  app.add_option("--replicas", replicas, "Monte Carlo replicas");
  app.add_option("--workers", workers, "worker threads (never changes results)");
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--tilt", tilt, "tilt override");
  app.add_option("--env-seeds", env_seeds, "environments averaged by quenched estimators");
  app.add_option("--fit", fit, "slopeFit or largestN");
  app.add_option("--M", M, "block length");
  app.add_option("--eps0", eps0, "sigma radius factor");
  app.add_option("--delta", delta, "annulus width factor");
  app.add_option("--delta1", delta1, "mesoscopic box factor");
  app.add_option("--L", L, "length scale (default L_lambda)");
  app.add_option("--mode", mode, "auto, Case1 or Case2");
  app.add_option("--region", region, "certify: half-width of the cube region");
  app.add_option("--N", N, "perc: columns; events: Chain blocks");
  app.add_option("--jmax", j_max, "perc: row truncation");
  app.add_option("--p-open", p_open, "perc: i.i.d. open probability instead of certification");
  app.add_flag("--ascii", ascii, "perc: ASCII rendering instead of JSON");
  app.add_option("--events", events, "event kinds (comma separated)")->delimiter(',');
  app.add_option("--chi", chi, "Case2 time bound reading: literal or diffusive");
  app.add_option("--method", method, "qd: quadrature or montecarlo");
  app.add_option("--cache", cache, "qd: cache file");
  app.add_option("--t-cap", t_cap, "oracle: enumeration horizon (d = 1)");
  app.add_option("--box", box, "oracle: initial box half-width");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"qd", "escape probability q_d"},
      {"predict", "asymptotic report per lambda"},
      {"annealed", "annealed costs and exponent"},
      {"quenched", "quenched costs and exponent"},
      {"scan", "lambda sweep with ratios to the predicted exponent"},
      {"certify", "goodness certification of a region"},
      {"perc", "oriented block grid and directed path"},
      {"events", "empirical event rates"},
      {"oracle", "exact solvers against Monte Carlo"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (d) cfg.d = *d;
    if (mu) cfg.mu = *mu;
    if (!lambdas.empty()) cfg.lambdas = lambdas;
    if (eps) cfg.eps = *eps;
    if (!n_window.empty()) cfg.n_window = n_window;
    if (replicas) cfg.replicas = *replicas;
    if (workers) cfg.workers = *workers;
    if (out_path) cfg.out = *out_path;
    if (tilt) cfg.tilt = tilt;
    if (env_seeds) cfg.env_seeds = *env_seeds;
    if (fit) apply_json(cfg, {{"fit", *fit}});
    if (M) cfg.M = *M;
    if (eps0) cfg.eps0 = *eps0;
    if (delta) cfg.delta = *delta;
    if (delta1) cfg.delta1 = delta1;
    if (L) cfg.L = L;
    if (mode) cfg.mode = *mode;
    if (region) cfg.region = region;
    if (N) cfg.N = *N;
    if (j_max) cfg.j_max = j_max;
    if (p_open) cfg.p_open = p_open;
    if (ascii) cfg.ascii = true;
    if (!events.empty()) cfg.events = events;
    if (chi) cfg.chi = *chi;
    if (method) cfg.qd_method = *method;
    if (cache) cfg.cache = *cache;
    if (t_cap) cfg.t_cap = *t_cap;
    if (box) cfg.box = *box;
    validate(cfg);

    std::ofstream file;
    std::ostream* sink = &out;
    if (!cfg.out.empty()) {
      file.open(cfg.out);
      if (!file) throw ConfigError("config field 'out': cannot open " + cfg.out);
      sink = &file;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "qd") cmd_qd(cfg, *sink);
    else if (name == "predict") cmd_predict(cfg, *sink);
    else if (name == "annealed") cmd_annealed(cfg, *sink);
    else if (name == "quenched") cmd_quenched(cfg, *sink);
    else if (name == "scan") cmd_scan(cfg, *sink);
    else if (name == "certify") cmd_certify(cfg, *sink);
    else if (name == "perc") cmd_perc(cfg, *sink);
    else if (name == "events") cmd_events(cfg, *sink);
    else cmd_oracle(cfg, *sink);
    sink->flush();
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kConfig;
  } catch (const DegenerateError& e) {
    err << "degenerate input: " << e.what() << '\n';
    return kConfig;
  } catch (const ResourceError& e) {
    err << "resource cap: " << e.what() << '\n';
    return kResource;
  } catch (const StatisticalError& e) {
    err << "statistical failure: " << e.what() << '\n';
    return kStatistical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace rwlab::app
