// Acceptance checks, one line per criterion:
//
//   acceptance          run all ten
//   acceptance 3 7      run the listed criteria
//
// Exit status is nonzero when any selected criterion fails.

#include <sparsegames/game_io.h>

#include <glog/logging.h>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "test_utils.h"

namespace sparsegames {
namespace {

namespace fs = std::filesystem;
using testutil::RandomGameOptions;
using testutil::RandomLqGame;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

std::string Fmt(double value) {
  std::ostringstream out;
  out << std::setprecision(3) << value;
  return out.str();
}

// Random games with N in [1, 4] and T in [1, 20].
std::vector<LqGame> RandomGames(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> players(1, 4);
  std::uniform_int_distribution<int> horizon(1, 20);
  std::vector<LqGame> games;
  for (int k = 0; k < count; ++k) {
    RandomGameOptions options;
    options.num_players = players(rng);
    options.horizon = horizon(rng);
    games.push_back(RandomLqGame(rng, options));
  }
  return games;
}

// Largest relative mismatch between the value function at x0 and the cost
// of rolling the strategies out.
double ValueRolloutError(const LqGame& game,
                         const AffineStrategyProfile& strategies,
                         const ValueProfile& values) {
  const Trajectory traj = Rollout(game, strategies);
  double worst = 0.0;
  for (int i = 0; i < game.dims.num_players(); ++i) {
    const double rollout = EvalCost(game, traj, i);
    const double value = values.CostToGo(0, i, game.x0);
    const double scale = std::max(std::abs(rollout), std::abs(value));
    if (scale > 0.0) worst = std::max(worst, std::abs(rollout - value) / scale);
  }
  return worst;
}

Outcome Criterion1() {
  Stopwatch clock;
  const std::vector<LqGame> games = RandomGames(101, 50);
  double worst = 0.0;
  for (const LqGame& game : games) {
    const NashSolution nash = SolveFeedbackNash(game);
    const SparseSolveReport report = SolveRegularized(
        game, RegularizationWeights(game.dims.num_players(), 0.0));
    for (int t = 0; t < game.dims.horizon(); ++t) {
      worst = std::max(worst,
                       (report.strategies.P[t] - nash.strategies.P[t]).norm());
      worst = std::max(worst, (report.strategies.alpha[t] -
                               nash.strategies.alpha[t])
                                  .norm());
    }
  }
  const double seconds = clock.Seconds();
  return {worst <= 1e-7 && seconds < 10.0,
          "50 games, max per-stage deviation " + Fmt(worst) + " (<= 1e-7), " +
              Fmt(seconds) + " s (< 10 s)"};
}

Outcome Criterion2() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> horizon(1, 30);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    RandomGameOptions options;
    options.num_players = 1;
    options.max_state_dim = 4;
    options.max_control_dim = 3;
    options.horizon = horizon(rng);
    const LqGame game = RandomLqGame(rng, options);
    const NashSolution nash = SolveFeedbackNash(game);
    const testutil::LqrOracleResult oracle = testutil::LqrOracle(game);
    auto rel = [](const auto& a, const auto& b) {
      return (a - b).norm() / std::max(b.norm(), 1e-300);
    };
    for (int t = 0; t < options.horizon; ++t) {
      worst = std::max(worst, rel(nash.strategies.P[t], oracle.K[t]));
      if (oracle.k[t].norm() > 0.0) {
        worst = std::max(worst, rel(nash.strategies.alpha[t], oracle.k[t]));
      }
      worst = std::max(worst, rel(nash.values.stages[t].Z[0], oracle.Z[t]));
    }
  }
  return {worst <= 1e-8,
          "50 single-player games against a textbook Riccati recursion, max "
          "relative error " +
              Fmt(worst) + " (<= 1e-8)"};
}

// Regularized solves shared by criteria 3, 4 and 9.
struct SolveCorpus {
  std::vector<LqGame> games;
  std::vector<SparseSolveReport> reports;
};

const SolveCorpus& Corpus() {
  static const SolveCorpus* corpus = [] {
    auto* c = new SolveCorpus;
    const std::vector<LqGame> games = RandomGames(303, 60);
    const double weights[] = {0.0, 0.01, 0.1, 1.0, 10.0};
    for (size_t k = 0; k < games.size(); ++k) {
      const double weight = weights[k % 5];
      c->games.push_back(games[k]);
      c->reports.push_back(SolveRegularized(
          games[k],
          RegularizationWeights(games[k].dims.num_players(), weight)));
    }
    const LqGame formation = BuildFormationGame(FormationConfig{}).game;
    for (double weight : {0.0, 1.5, 5.0, 15.0}) {
      c->games.push_back(formation);
      c->reports.push_back(
          SolveRegularized(formation, RegularizationWeights(3, weight)));
    }
    return c;
  }();
  return *corpus;
}

Outcome Criterion3() {
  const SolveCorpus& corpus = Corpus();
  int stages = 0;
  int violations = 0;
  double tightest = 0.0;
  for (const SparseSolveReport& report : corpus.reports) {
    for (size_t t = 0; t < report.delta_P.size(); ++t) {
      ++stages;
      if (report.delta_P[t] > report.lemma1_bound[t] + 1e-7) ++violations;
      if (report.lemma1_bound[t] > 0.0) {
        tightest =
            std::max(tightest, report.delta_P[t] / report.lemma1_bound[t]);
      }
    }
  }
  return {stages >= 1000 && violations == 0,
          std::to_string(stages) + " stage problems, " +
              std::to_string(violations) +
              " violations of ||dP|| <= bound + 1e-7 (largest ||dP||/bound " +
              Fmt(tightest) + ")"};
}

Outcome Criterion4() {
  const SolveCorpus& corpus = Corpus();
  double worst_kkt = 0.0;
  int accepted = 0;
  for (const SparseSolveReport& report : corpus.reports) {
    for (double kkt : report.kkt) {
      worst_kkt = std::max(worst_kkt, kkt);
      ++accepted;
    }
  }
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> players(2, 4);
  std::uniform_real_distribution<double> scale(0.05, 3.0);
  double worst_gap = 0.0;
  for (int k = 0; k < 50; ++k) {
    const GroupLassoProblem problem = testutil::RandomGroupLassoProblem(
        rng, players(rng), 3, scale(rng));
    const GroupLassoSolution bcd = SolveBcd(problem);
    const GroupLassoSolution conic = SolveConic(problem);
    worst_kkt = std::max(worst_kkt, bcd.kkt_residual);
    worst_gap = std::max(worst_gap, std::abs(bcd.objective - conic.objective) /
                                        std::abs(bcd.objective));
  }
  return {worst_kkt <= 1e-7 && worst_gap <= 1e-5,
          std::to_string(accepted) + " pipeline + 50 standalone BCD "
              "solutions, max KKT residual " +
              Fmt(worst_kkt) + " (<= 1e-7); BCD vs conic objective gap " +
              Fmt(worst_gap) + " (<= 1e-5 relative)"};
}

Outcome Criterion5() {
  Stopwatch clock;
  const LqGame game = BuildFormationGame(FormationConfig{}).game;
  bool pass = true;
  std::ostringstream detail;
  detail << "last 50 of 500 steps, range/mean of ||dP||:";
  for (double weight : {0.0, 1.5, 5.0, 15.0}) {
    FixedPointOptions options;
    options.max_steps = 500;
    options.tol = 0.0;
    const FixedPointResult result =
        InfiniteHorizonFixedPoint(game, RegularizationWeights(3, weight),
                                  options);
    const std::vector<double>& dp = result.trace.delta_P;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double mean = 0.0;
    for (size_t k = dp.size() - 50; k < dp.size(); ++k) {
      lo = std::min(lo, dp[k]);
      hi = std::max(hi, dp[k]);
      mean += dp[k] / 50.0;
    }
    const bool ok = dp.size() == 500 && hi - lo <= 1e-6 * mean;
    pass &= ok;
    detail << " lambda=" << weight << ": "
           << (mean == 0.0 ? std::string("range 0, mean 0")
                           : Fmt((hi - lo) / mean))
           << (ok ? "" : " (not settled)") << ";";
  }
  const double seconds = clock.Seconds();
  pass &= seconds < 30.0;
  detail << " " << Fmt(seconds) << " s (< 30 s)";
  return {pass, detail.str()};
}

Outcome Criterion6() {
  const FormationGame formation = BuildFormationGame(FormationConfig{});
  const SparseSolveReport report =
      SolveRegularized(formation.game, RegularizationWeights(3, 15.0));
  int nonzero = 0;
  int total = 0;
  int first = -1;
  for (size_t t = 0; t < report.sparsity.size(); ++t) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        ++total;
        if (report.sparsity[t](i, j)) {
          ++nonzero;
          if (first < 0) first = static_cast<int>(t) + 1;
        }
      }
    }
  }
  std::string detail = "formation game at lambda=15: " +
                       std::to_string(nonzero) + " of " +
                       std::to_string(total) +
                       " off-diagonal blocks nonzero";
  if (nonzero > 0) {
    // Weight at which stage 1's system first zeros every coupling block.
    const SparseSolveReport exact =
        SolveRegularized(formation.game, RegularizationWeights(3, 0.0));
    GroupLassoProblem problem;
    problem.dims = formation.game.dims.WithHorizon(1);
    ValueSlice next;
    next.Z.resize(3);
    next.eta.resize(3);
    next.beta.assign(3, 0.0);
    for (int i = 0; i < 3; ++i) {
      next.Z[i] = exact.values.stages[1].Z[i];
      next.eta[i] = exact.values.stages[1].eta[i];
    }
    const StageSystem sys = AssembleStageSystem(formation.game, 0, next);
    problem.S = sys.S;
    problem.Y = sys.Y;
    problem.lambda = RegularizationWeights(3, 15.0);
    detail += " (first at stage " + std::to_string(first) +
              "; stage 1 needs lambda >= " + Fmt(ZeroingWeight(problem)) +
              " to decouple)";
  }
  return {nonzero == 0, detail};
}

Outcome Criterion7() {
  Stopwatch clock;
  const SweepSpec spec = SweepSpec::DeskScale();
  const SweepResult result = RunSweep(spec, FormationConfig{});
  const int V = static_cast<int>(spec.noise_levels.size());
  const int L = static_cast<int>(spec.lambdas.size());
  const auto& diff = result.mean_difference;
  auto favors = [&](int v, int l) {
    return diff[1](v, l) < 0.0 && diff[2](v, l) < 0.0;
  };
  bool a = true;
  bool b = true;
  int favoring = 0;
  int cells = 0;
  for (int v = 0; v < V; ++v) {
    if (spec.noise_levels[v] <= 0.0) continue;
    bool any = false;
    for (int l = 0; l < L; ++l) {
      if (spec.lambdas[l] <= 0.0) continue;
      ++cells;
      favoring += favors(v, l) ? 1 : 0;
      any |= favors(v, l);
      if (spec.noise_levels[v] >= 500.0 && !favors(v, l)) a = false;
    }
    b &= any;
  }
  double p1 = 0.0;
  for (int v = 0; v < V; ++v) {
    const double base = result.mean_cost[0](v, 0);
    for (int l = 0; l < L; ++l) {
      p1 = std::max(p1, std::abs(result.mean_cost[0](v, l) - base) / base);
    }
  }
  const bool c = p1 <= 0.005;
  const double fraction = cells > 0 ? static_cast<double>(favoring) / cells : 0;
  const bool d = fraction >= 0.6;
  int failures = 0;
  for (const SweepRecord& rec : result.records) failures += rec.ok ? 0 : 1;
  const double seconds = clock.Seconds();
  std::ostringstream detail;
  detail << "10x10x20 grid, " << failures << " failed cells, " << Fmt(seconds)
         << " s; (a) " << (a ? "pass" : "FAIL")
         << " (b) " << (b ? "pass" : "FAIL") << " (c) "
         << (c ? "pass" : "FAIL") << " player 1 varies " << Fmt(100 * p1)
         << "% (<= 0.5%) (d) " << (d ? "pass" : "FAIL") << " "
         << favoring << "/" << cells << " = " << Fmt(fraction)
         << " (>= 0.6)";
  return {a && b && c && d && failures == 0 && seconds < 600.0, detail.str()};
}

double MinPairwiseDistance(const Trajectory& traj, int num_players) {
  double best = std::numeric_limits<double>::infinity();
  for (const VectorXd& x : traj.x) {
    for (int i = 0; i < num_players; ++i) {
      for (int j = i + 1; j < num_players; ++j) {
        best = std::min(best,
                        (x.segment(4 * i, 2) - x.segment(4 * j, 2)).norm());
      }
    }
  }
  return best;
}

Outcome Criterion8() {
  Stopwatch clock;
  const NavigationConfig cfg = NavigationConfig::Default(4);
  const NonLqGame game = BuildNavigationGame(cfg);
  std::ostringstream detail;
  bool pass = true;

  IlqSolution base;
  try {
    base = SolveIlq(game, IlqSettings{});
  } catch (const IlqNotConverged& e) {
    base = e.solution();
  }
  double goal = 0.0;
  for (int i = 0; i < 4; ++i) {
    goal = std::max(goal, (base.trajectory.x.back().segment(4 * i, 2) -
                           cfg.goals[i].head(2))
                              .norm());
  }
  const double gap = MinPairwiseDistance(base.trajectory, 4);
  pass &= base.converged && gap > 0.0 && goal < 1.0;
  detail << "lambda=0: " << (base.converged ? "converged" : "NOT converged")
         << " in " << base.diagnostics.size() << " iterations, min distance "
         << Fmt(gap) << " m, worst goal distance " << Fmt(goal) << " m;";

  const double weights[] = {1.0, 10.0, 100.0};
  std::vector<std::vector<double>> counts;
  for (double weight : weights) {
    IlqSettings settings;
    settings.lambda = RegularizationWeights(4, weight);
    IlqSolution solution;
    try {
      solution = SolveIlq(game, settings);
    } catch (const IlqNotConverged& e) {
      solution = e.solution();
      detail << " lambda=" << weight << " did not converge;";
    }
    counts.push_back(solution.diagnostics.back().mean_nonzero);
  }
  detail << " mean nonzero blocks per player at lambda=1/10/100:";
  for (int i = 0; i < 4; ++i) {
    detail << " p" << i + 1 << " " << Fmt(counts[0][i]) << "/"
           << Fmt(counts[1][i]) << "/" << Fmt(counts[2][i]);
    for (size_t k = 1; k < counts.size(); ++k) {
      if (counts[k][i] > counts[k - 1][i] + 1.0) pass = false;
    }
  }
  const double seconds = clock.Seconds();
  pass &= seconds < 120.0;
  detail << "; " << Fmt(seconds) << " s (< 120 s)";
  return {pass, detail.str()};
}

Outcome Criterion9() {
  const SolveCorpus& corpus = Corpus();
  double worst = 0.0;
  int solves = 0;
  for (size_t k = 0; k < corpus.games.size(); ++k) {
    const LqGame& game = corpus.games[k];
    worst = std::max(worst, ValueRolloutError(game, corpus.reports[k].strategies,
                                              corpus.reports[k].values));
    const NashSolution nash = SolveFeedbackNash(game);
    worst = std::max(worst,
                     ValueRolloutError(game, nash.strategies, nash.values));
    solves += 2;
  }
  for (const LqGame& game : RandomGames(101, 50)) {
    const NashSolution nash = SolveFeedbackNash(game);
    worst = std::max(worst,
                     ValueRolloutError(game, nash.strategies, nash.values));
    ++solves;
  }
  return {worst <= 1e-6, std::to_string(solves) +
                             " solved games, max relative value/rollout "
                             "mismatch " +
                             Fmt(worst) + " (<= 1e-6)"};
}

int RunCli(const std::string& args) {
  const std::string cmd =
      std::string(SPARSEGAMES_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream out;
  out << in.rdbuf();
  return out.str();
}

Outcome Criterion10() {
  const fs::path root = fs::temp_directory_path() / "sparsegames_acceptance";
  fs::remove_all(root);
  const fs::path first = root / "first";
  const fs::path second = root / "second";
  const int a = RunCli("--seed 11 --out-dir " + first.string() + " sweep");
  const int b = RunCli("--seed 11 --out-dir " + second.string() + " sweep");
  if (a != 0 || b != 0) {
    return {false, "sweep exited with " + std::to_string(a) + " and " +
                       std::to_string(b)};
  }
  int compared = 0;
  std::string differing;
  for (const auto& entry : fs::directory_iterator(first)) {
    const fs::path name = entry.path().filename();
    ++compared;
    if (Slurp(first / name) != Slurp(second / name)) {
      differing += " " + name.string();
    }
  }
  fs::remove_all(root);
  return {compared > 0 && differing.empty(),
          "two seeded desk-scale sweeps, " + std::to_string(compared) +
              " output files compared" +
              (differing.empty() ? ", all byte-identical"
                                 : ", differing:" + differing)};
}

}  // namespace
}  // namespace sparsegames

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;
  FLAGS_minloglevel = google::GLOG_ERROR;

  using sparsegames::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>>
      criteria = {
          {"lambda=0 equivalence", sparsegames::Criterion1},
          {"LQR oracle", sparsegames::Criterion2},
          {"deviation certificate", sparsegames::Criterion3},
          {"group-Lasso KKT and backend agreement", sparsegames::Criterion4},
          {"formation Riccati convergence", sparsegames::Criterion5},
          {"full decoupling at lambda=15", sparsegames::Criterion6},
          {"Monte Carlo directional claims", sparsegames::Criterion7},
          {"navigation game", sparsegames::Criterion8},
          {"value/rollout consistency", sparsegames::Criterion9},
          {"sweep determinism", sparsegames::Criterion10},
      };
  std::vector<int> selected;
  for (int k = 1; k < argc; ++k) {
    const int id = std::atoi(argv[k]);
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::cerr << "usage: " << argv[0] << " [criterion 1-10 ...]\n";
      return 3;
    }
    selected.push_back(id);
  }
  if (selected.empty()) {
    for (int id = 1; id <= static_cast<int>(criteria.size()); ++id) {
      selected.push_back(id);
    }
  }
  int failed = 0;
  for (int id : selected) {
    const auto& [name, check] = criteria[id - 1];
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    failed += outcome.pass ? 0 : 1;
    std::cout << "criterion " << id << " " << (outcome.pass ? "PASS" : "FAIL")
              << " " << name << ": " << outcome.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
