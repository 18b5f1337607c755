// Command-line front end: solves LQ games exactly or with group-sparse
// feedback, iterates non-LQ scenarios, and runs the noisy-observation sweep.
//
// Exit codes: 0 success, 2 solver failure, 3 configuration error.

#include <sparsegames/game_io.h>

#include <CLI11.hpp>
#include <glog/logging.h>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace sg = sparsegames;
using sg::Json;

namespace {

constexpr int kSolverFailure = 2;
constexpr int kConfigError = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string config_path;
  bool verbose = false;

  Json config = Json::object();
};

std::string OutPath(const Globals& g, const std::string& name) {
  return (std::filesystem::path(g.out_dir) / name).string();
}

void Emit(const Globals& g, const std::string& name,
          const std::string& contents) {
  const std::string path = OutPath(g, name);
  sg::WriteFile(path, contents);
  std::cout << "wrote " << path << "\n";
}

template <typename Writer>
void EmitWith(const Globals& g, const std::string& name, Writer&& write) {
  std::ostringstream out;
  write(out);
  Emit(g, name, out.str());
}

Json Section(const Json& config, const std::string& key) {
  return config.contains(key) ? config.at(key) : Json::object();
}

bool IsNavigation(const std::string& name) {
  return name == "navigation4" || name == "navigation8";
}

// A scenario named directly or by a JSON file of the --config schema with a
// "scenario" entry.
struct Scenario {
  std::string name;
  sg::NavigationConfig navigation;
  sg::FormationConfig formation;
  Json ilq = Json::object();
};

Scenario ResolveScenario(const std::string& arg, const Json& config) {
  Json merged = config;
  std::string name = arg;
  if (std::filesystem::is_regular_file(arg)) {
    const Json file = sg::ReadJsonFile(arg);
    if (!file.is_object() || !file.contains("scenario") ||
        !file.at("scenario").is_string()) {
      throw sg::ConfigError(arg + ": expected a \"scenario\" name");
    }
    name = file.at("scenario").get<std::string>();
    for (const char* key : {"navigation", "formation", "ilq"}) {
      if (file.contains(key)) merged[key] = file.at(key);
    }
  }
  const std::vector<std::string> names = sg::ScenarioNames();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw sg::ConfigError("unknown scenario '" + name + "'");
  }
  Scenario s;
  s.name = name;
  if (IsNavigation(name)) {
    s.navigation = sg::NavigationConfig::Default(name == "navigation8" ? 8 : 4);
    sg::ApplyOverrides(Section(merged, "navigation"), &s.navigation);
  }
  sg::ApplyOverrides(Section(merged, "formation"), &s.formation);
  s.ilq = Section(merged, "ilq");
  return s;
}

// Game files, or the LQ scenario by name.
sg::LqGame ResolveLqGame(const std::string& arg, const Json& config) {
  if (arg == "formation3") {
    sg::FormationConfig cfg;
    sg::ApplyOverrides(Section(config, "formation"), &cfg);
    return sg::BuildFormationGame(cfg).game;
  }
  if (IsNavigation(arg)) {
    throw sg::ConfigError(arg + " is not an LQ game; use solve-ilq");
  }
  return sg::LqGameFromJson(sg::ReadJsonFile(arg));
}

std::vector<double> Costs(const sg::LqGame& game, const sg::Trajectory& traj) {
  std::vector<double> out;
  for (int i = 0; i < game.dims.num_players(); ++i) {
    out.push_back(sg::EvalCost(game, traj, i));
  }
  return out;
}

// Planar positions of every player; navigation states are [px, py, phi, v],
// formation states [px, vx, py, vy].
std::vector<std::vector<Eigen::Vector2d>> Positions(
    const sg::Trajectory& traj, int num_players, bool navigation) {
  std::vector<std::vector<Eigen::Vector2d>> out(num_players);
  for (const sg::VectorXd& x : traj.x) {
    for (int i = 0; i < num_players; ++i) {
      out[i].emplace_back(x(4 * i), x(4 * i + (navigation ? 1 : 2)));
    }
  }
  return out;
}

int SolveLq(const Globals& g, const std::string& game_arg) {
  const sg::LqGame game = ResolveLqGame(game_arg, g.config);
  const sg::NashSolution nash = sg::SolveFeedbackNash(game);
  Json out;
  out["strategies"] = sg::StrategiesToJson(nash.strategies);
  out["sigma_min"] = nash.sigma_min;
  out["sigma_max"] = nash.sigma_max;
  out["costs"] = Costs(game, sg::Rollout(game, nash.strategies));
  Emit(g, "solve_lq.json", out.dump(1) + "\n");
  return 0;
}

int SolveSparse(const Globals& g, const std::string& game_arg, double lambda,
                const std::string& backend) {
  const sg::LqGame game = ResolveLqGame(game_arg, g.config);
  sg::SparseSolveOptions options;
  options.backend = sg::ParseBackend(backend);
  const sg::SparseSolveReport report = sg::SolveRegularized(
      game, sg::RegularizationWeights(game.dims.num_players(), lambda),
      options);
  Json out;
  out["lambda"] = lambda;
  out["backend"] = backend;
  out["strategies"] = sg::StrategiesToJson(report.strategies);
  out["sparsity"] = sg::SparsityToJson(report.sparsity);
  out["delta_P"] = report.delta_P;
  out["lemma1_bound"] = report.lemma1_bound;
  out["kkt_residual"] = report.kkt;
  out["sigma_min"] = report.sigma_min;
  out["costs"] = Costs(game, sg::Rollout(game, report.strategies));
  Emit(g, "solve_sparse.json", out.dump(1) + "\n");
  return 0;
}

int GroupLasso(const Globals& g, const std::string& path,
               const std::string& backend) {
  const sg::GroupLassoProblem problem =
      sg::GroupLassoProblemFromJson(sg::ReadJsonFile(path));
  const sg::GroupLassoSolution sol =
      sg::SolveGroupLasso(problem, sg::ParseBackend(backend));
  Json out;
  out["backend"] = sg::ToString(sol.backend);
  out["P_hat"] = sg::ToJson(sol.P_hat);
  out["objective"] = sol.objective;
  out["kkt_residual"] = sol.kkt_residual;
  out["iterations"] = sol.iterations;
  Emit(g, "group_lasso.json", out.dump(1) + "\n");
  return 0;
}

// Riccati traces on the time-invariant extension of stage 1, with the
// distance to the unregularized fixed point.
std::vector<sg::ConvergenceTrace> Traces(const sg::LqGame& game,
                                         const std::vector<double>& lambdas,
                                         int steps) {
  const int N = game.dims.num_players();
  sg::FixedPointOptions exact;
  exact.max_steps = 100000;
  std::optional<std::vector<sg::MatrixXd>> reference;
  try {
    reference = sg::InfiniteHorizonFixedPoint(
                    game, sg::RegularizationWeights(N, 0.0), exact)
                    .Z;
  } catch (const sg::RiccatiNotConverged&) {
    LOG(WARNING) << "unregularized recursion did not settle; traces omit "
                    "the fixed-point error";
  }
  std::vector<sg::ConvergenceTrace> traces;
  for (double lambda : lambdas) {
    sg::FixedPointOptions options;
    options.max_steps = steps;
    options.tol = 0.0;
    options.reference = reference;
    traces.push_back(sg::InfiniteHorizonFixedPoint(
                         game, sg::RegularizationWeights(N, lambda), options)
                         .trace);
  }
  return traces;
}

std::string LambdaLabel(double lambda) {
  std::ostringstream out;
  out << "lambda=" << lambda;
  return out.str();
}

void EmitTraces(const Globals& g, const std::string& stem,
                const std::vector<double>& lambdas,
                const std::vector<sg::ConvergenceTrace>& traces,
                const std::string& tag) {
  EmitWith(g, stem + ".csv", [&](std::ostream& out) {
    sg::WriteTraceCsv(out, lambdas, traces, tag);
  });
  std::vector<sg::Series> series;
  for (size_t l = 0; l < traces.size(); ++l) {
    sg::Series s{LambdaLabel(lambdas[l]), {}, traces[l].delta_P};
    for (size_t k = 0; k < s.y.size(); ++k) s.x.push_back(k + 1.0);
    series.push_back(std::move(s));
  }
  EmitWith(g, stem + ".svg", [&](std::ostream& out) {
    sg::WriteLineSvg(out, "Regularized Riccati recursion", "backward step",
                     "||Delta P||_F", series, true, tag);
  });
}

std::string Tag(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

int RiccatiTrace(const Globals& g, const std::string& game_arg,
                 const std::vector<double>& lambdas, int steps) {
  const sg::LqGame game = ResolveLqGame(game_arg, g.config);
  const std::vector<sg::ConvergenceTrace> traces =
      Traces(game, lambdas, steps);
  Json key = {{"game", sg::LqGameToJson(game)},
              {"lambdas", lambdas},
              {"steps", steps}};
  EmitTraces(g, "riccati_trace", lambdas, traces, Tag(key.dump()));
  return 0;
}

int SolveIlqCommand(const Globals& g, const std::string& scenario_arg,
                    double lambda, std::optional<int> iters) {
  const Scenario scenario = ResolveScenario(scenario_arg, g.config);
  const bool navigation = IsNavigation(scenario.name);
  sg::FormationGame formation;
  const sg::NonLqGame game =
      navigation ? sg::BuildNavigationGame(scenario.navigation)
                 : sg::WrapLqGame(
                       (formation = sg::BuildFormationGame(scenario.formation))
                           .game);
  sg::IlqSettings settings;
  sg::ApplyOverrides(scenario.ilq, &settings);
  if (iters) settings.max_outer_iters = *iters;
  settings.lambda = sg::RegularizationWeights(game.dims.num_players(), lambda);

  sg::IlqSolution solution;
  bool converged = true;
  try {
    solution = sg::SolveIlq(game, settings);
  } catch (const sg::IlqNotConverged& e) {
    solution = e.solution();
    converged = false;
  }
  const int N = game.dims.num_players();
  Json out;
  out["scenario"] = scenario.name;
  out["lambda"] = lambda;
  out["converged"] = converged;
  out["iterations"] = solution.diagnostics.size();
  out["strategies"] = sg::StrategiesToJson(solution.strategies);
  out["trajectory"] = sg::TrajectoryToJson(solution.trajectory);
  out["sparsity"] = sg::SparsityToJson(solution.sparsity);
  std::vector<double> costs;
  for (int i = 0; i < N; ++i) {
    costs.push_back(sg::EvalCost(game, solution.trajectory, i));
  }
  out["costs"] = costs;
  const std::string tag = Tag(out.dump());
  Emit(g, "solve_ilq.json", out.dump(1) + "\n");

  EmitWith(g, "ilq_diagnostics.csv", [&](std::ostream& csv) {
    csv << "# config_hash=" << tag << "\n";
    csv << "iteration,step_size,trajectory_change";
    for (int i = 0; i < N; ++i) csv << ",cost_p" << i + 1;
    for (int i = 0; i < N; ++i) csv << ",mean_nonzero_p" << i + 1;
    csv << "\n" << std::setprecision(17);
    for (const sg::IlqIterate& it : solution.diagnostics) {
      csv << it.iteration << ',' << it.step_size << ','
          << it.trajectory_change;
      for (double c : it.costs) csv << ',' << c;
      for (double c : it.mean_nonzero) csv << ',' << c;
      csv << "\n";
    }
  });
  EmitWith(g, "ilq_paths.svg", [&](std::ostream& svg) {
    sg::WritePathsSvg(svg, scenario.name + ", " + LambdaLabel(lambda),
                      Positions(solution.trajectory, N, navigation), tag);
  });
  if (!converged) {
    std::cerr << "iterations did not converge within "
              << settings.max_outer_iters << " outer steps\n";
    return kSolverFailure;
  }
  return 0;
}

struct SweepOptions {
  bool full = false;
  std::vector<double> noise_levels;
  std::vector<double> lambdas;
  std::optional<int> num_initial;
  std::optional<int> threads;
};

int Sweep(const Globals& g, const SweepOptions& options) {
  sg::SweepSpec spec = sg::SweepSpec::DeskScale();
  if (options.full) {
    spec.noise_levels = sg::Linspace(0.0, 2000.0, 50);
    spec.lambdas = sg::Linspace(0.0, 15.0, 50);
    spec.num_initial = 200;
  }
  sg::ApplyOverrides(Section(g.config, "sweep"), &spec);
  if (!options.noise_levels.empty()) spec.noise_levels = options.noise_levels;
  if (!options.lambdas.empty()) spec.lambdas = options.lambdas;
  if (options.num_initial) spec.num_initial = *options.num_initial;
  if (options.threads) spec.threads = *options.threads;
  if (g.seed) spec.seed = *g.seed;
  sg::FormationConfig scenario;
  sg::ApplyOverrides(Section(g.config, "formation"), &scenario);

  const sg::SweepResult result = sg::RunSweep(spec, scenario);
  EmitWith(g, "sweep_summary.csv", [&](std::ostream& out) {
    sg::WriteSweepSummaryCsv(out, result);
  });
  EmitWith(g, "sweep_records.csv", [&](std::ostream& out) {
    sg::WriteSweepRecordsCsv(out, result);
  });
  EmitWith(g, "sweep_sparsity.csv", [&](std::ostream& out) {
    sg::WriteSparsityCsv(out, sg::SparsityReport(spec.lambdas, result.sparsity),
                         result.config_hash);
  });
  for (size_t i = 0; i < result.mean_difference.size(); ++i) {
    const std::string player = std::to_string(i + 1);
    EmitWith(g, "sweep_difference_p" + player + ".svg", [&](std::ostream& out) {
      sg::WriteHeatmapSvg(out, "Player " + player + ": cost minus Nash cost",
                          spec.lambdas, spec.noise_levels,
                          result.mean_difference[i], result.config_hash);
    });
  }
  Json meta;
  meta["config_hash"] = result.config_hash;
  meta["git_revision"] = result.git_revision;
  meta["seed"] = spec.seed;
  meta["noise_levels"] = spec.noise_levels;
  meta["lambdas"] = spec.lambdas;
  meta["num_initial"] = spec.num_initial;
  meta["solve_errors"] = result.solve_errors;
  int failures = 0;
  for (const sg::SweepRecord& rec : result.records) failures += rec.ok ? 0 : 1;
  meta["failed_cells"] = failures;
  Emit(g, "sweep_meta.json", meta.dump(1) + "\n");

  bool any_error = failures > 0;
  for (const std::string& e : result.solve_errors) any_error |= !e.empty();
  return any_error ? kSolverFailure : 0;
}

struct ReportOptions {
  std::vector<double> lambdas{0.0, 1.5, 5.0, 15.0};
  int steps = 500;
  double noise = 1000.0;
  bool navigation = false;
};

int Report(const Globals& g, const ReportOptions& options) {
  sg::FormationConfig cfg;
  sg::ApplyOverrides(Section(g.config, "formation"), &cfg);
  const sg::FormationGame formation = sg::BuildFormationGame(cfg);
  const sg::LqGame& game = formation.game;
  const int N = game.dims.num_players();
  const Json key = {{"game", sg::LqGameToJson(game)},
                    {"lambdas", options.lambdas},
                    {"steps", options.steps},
                    {"noise", options.noise},
                    {"seed", g.seed.value_or(0)}};
  const std::string tag = Tag(key.dump());

  EmitTraces(g, "formation_trace", options.lambdas,
             Traces(game, options.lambdas, options.steps), tag);

  // Nonzero-block counts over time, and paths under noisy observation from a
  // shared random start.
  std::vector<sg::SparsityPattern> patterns;
  std::vector<sg::Series> totals;
  std::mt19937_64 rng(g.seed.value_or(0));
  std::uniform_real_distribution<double> box(-10.0, 10.0);
  sg::VectorXd x0 = sg::VectorXd::Zero(game.dims.state_dim());
  for (int i = 0; i < N; ++i) {
    x0(4 * i) = box(rng);
    x0(4 * i + 2) = box(rng);
  }
  const std::uint64_t noise_seed = rng();
  for (double lambda : options.lambdas) {
    const sg::SparseSolveReport report =
        sg::SolveRegularized(game, sg::RegularizationWeights(N, lambda));
    patterns.push_back(sg::ComputeSparsityPattern(
        game.dims, report.strategies, sg::kBcdSparsityThreshold));
    sg::Series s{LambdaLabel(lambda), {}, {}};
    for (size_t t = 0; t < patterns.back().counts.size(); ++t) {
      s.x.push_back(t + 1.0);
      s.y.push_back(patterns.back().counts[t].sum());
    }
    totals.push_back(std::move(s));
    const sg::Trajectory traj = sg::NoisyRollout(
        game, report.strategies, sg::NoiseModel{options.noise, noise_seed},
        x0);
    std::ostringstream name;
    name << "formation_paths_lambda" << lambda << ".svg";
    EmitWith(g, name.str(), [&](std::ostream& out) {
      sg::WritePathsSvg(out, "Formation, " + LambdaLabel(lambda),
                        Positions(traj, N, false), tag);
    });
  }
  EmitWith(g, "formation_sparsity.csv", [&](std::ostream& out) {
    sg::WriteSparsityCsv(out, sg::SparsityReport(options.lambdas, patterns),
                         tag);
  });
  EmitWith(g, "formation_sparsity.svg", [&](std::ostream& out) {
    sg::WriteLineSvg(out, "Nonzero blocks over time", "stage",
                     "nonzero blocks (all players)", totals, false, tag);
  });

  if (options.navigation) {
    sg::NavigationConfig nav = sg::NavigationConfig::Default(4);
    sg::ApplyOverrides(Section(g.config, "navigation"), &nav);
    sg::IlqSettings settings;
    sg::ApplyOverrides(Section(g.config, "ilq"), &settings);
    const sg::NonLqGame nav_game = sg::BuildNavigationGame(nav);
    const sg::IlqSolution solution = sg::SolveIlq(nav_game, settings);
    EmitWith(g, "navigation_paths.svg", [&](std::ostream& out) {
      sg::WritePathsSvg(out, "navigation4",
                        Positions(solution.trajectory, nav.num_players, true),
                        tag);
    });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;
  FLAGS_minloglevel = google::GLOG_WARNING;

  CLI::App app{"Feedback Nash equilibria of LQ games with group-sparse "
               "inter-player dependencies"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master random seed");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_option("--config", g.config_path,
                 "JSON file with navigation/formation/ilq/sweep overrides");
  app.add_flag("-v,--verbose", g.verbose, "Log solver progress");

  std::string game_arg;
  std::string backend = "bcd";
  double lambda = 0.0;
  std::vector<double> lambdas;
  int steps = 500;
  std::optional<int> iters;

  CLI::App* solve_lq = app.add_subcommand("solve-lq", "Exact feedback Nash");
  solve_lq->add_option("game", game_arg, "Game JSON or formation3")
      ->required();

  CLI::App* solve_sparse =
      app.add_subcommand("solve-sparse", "Group-sparse feedback strategies");
  solve_sparse->add_option("game", game_arg, "Game JSON or formation3")
      ->required();
  solve_sparse->add_option("--lambda", lambda, "Off-diagonal block weight");
  solve_sparse->add_option("--backend", backend, "bcd or conic");

  CLI::App* group_lasso =
      app.add_subcommand("group-lasso", "Solve one group-Lasso problem");
  group_lasso->add_option("problem", game_arg, "Problem JSON")->required();
  group_lasso->add_option("--backend", backend, "bcd or conic");

  CLI::App* trace = app.add_subcommand(
      "riccati-trace", "Regularized Riccati recursion on stage 1's data");
  trace->add_option("game", game_arg, "Game JSON or formation3")->required();
  trace->add_option("--lambda", lambdas, "Off-diagonal block weight(s)");
  trace->add_option("--steps", steps, "Backward steps")->check(
      CLI::PositiveNumber);

  CLI::App* ilq = app.add_subcommand("solve-ilq", "Iterative LQ game solver");
  ilq->add_option("scenario", game_arg,
                  "navigation4, navigation8, formation3 or a scenario JSON")
      ->required();
  ilq->add_option("--lambda", lambda, "Off-diagonal block weight");
  ilq->add_option("--iters", iters, "Maximum outer iterations");

  SweepOptions sweep_options;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Noisy-observation Monte Carlo sweep");
  sweep->add_flag("--full", sweep_options.full,
                  "50 noise levels x 50 weights x 200 starts");
  sweep->add_option("--noise-levels", sweep_options.noise_levels,
                    "Per-dimension noise variances");
  sweep->add_option("--lambdas", sweep_options.lambdas, "Block weights");
  sweep->add_option("--num-initial", sweep_options.num_initial,
                    "Random starts per cell");
  sweep->add_option("--threads", sweep_options.threads, "Worker threads");

  ReportOptions report_options;
  CLI::App* report = app.add_subcommand(
      "report", "Formation traces, sparsity and paths as CSV/SVG");
  report->add_option("--lambdas", report_options.lambdas, "Block weights");
  report->add_option("--steps", report_options.steps, "Trace length");
  report->add_option("--noise", report_options.noise,
                     "Noise variance for the plotted paths");
  report->add_flag("--navigation", report_options.navigation,
                   "Also solve and plot navigation4");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  if (g.verbose) FLAGS_minloglevel = google::GLOG_INFO;

  try {
    if (!g.config_path.empty()) g.config = sg::ReadJsonFile(g.config_path);
    if (!g.config.is_object()) throw sg::ConfigError("config must be an object");
    for (const auto& [key, value] : g.config.items()) {
      if (key != "navigation" && key != "formation" && key != "ilq" &&
          key != "sweep") {
        throw sg::ConfigError("unknown config section \"" + key + "\"");
      }
    }
    std::filesystem::create_directories(g.out_dir);
    if (*solve_lq) return SolveLq(g, game_arg);
    if (*solve_sparse) return SolveSparse(g, game_arg, lambda, backend);
    if (*group_lasso) return GroupLasso(g, game_arg, backend);
    if (*trace) {
      if (lambdas.empty()) lambdas = {0.0};
      return RiccatiTrace(g, game_arg, lambdas, steps);
    }
    if (*ilq) return SolveIlqCommand(g, game_arg, lambda, iters);
    if (*sweep) return Sweep(g, sweep_options);
    if (*report) return Report(g, report_options);
  } catch (const sg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const sg::DimensionError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const sg::SparseGamesError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const std::runtime_error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
