#include <sparsegames/ilq_solver.h>
#include <sparsegames/lq_solver.h>
#include <sparsegames/scenarios.h>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_utils.h"

namespace sparsegames {
namespace {

using testutil::RandomGameOptions;
using testutil::RandomLqGame;

double MaxDistance(const Trajectory& a, const Trajectory& b) {
  double worst = 0.0;
  for (size_t t = 0; t < a.x.size(); ++t) {
    worst = std::max(worst, (a.x[t] - b.x[t]).cwiseAbs().maxCoeff());
  }
  return worst;
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

TEST(WrapLqGameTest, AgreesWithLqGame) {
  std::mt19937_64 rng(21);
  RandomGameOptions options;
  options.num_players = 3;
  const LqGame game = RandomLqGame(rng, options);
  const NonLqGame wrapped = WrapLqGame(game);
  EXPECT_NO_THROW(wrapped.Validate());
  const NashSolution nash = SolveFeedbackNash(game);
  const Trajectory exact = Rollout(game, nash.strategies);
  const Trajectory simulated = ForwardSimulate(wrapped, nash.strategies, {});
  EXPECT_LE(MaxDistance(exact, simulated), 1e-12);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(EvalCost(wrapped, simulated, i), EvalCost(game, exact, i),
                1e-9 * (1.0 + std::abs(EvalCost(game, exact, i))));
  }
}

TEST(LinearizeTest, RecoversLqDynamics) {
  std::mt19937_64 rng(22);
  const LqGame game = RandomLqGame(rng, RandomGameOptions{});
  const NonLqGame wrapped = WrapLqGame(game);
  const Trajectory traj =
      ForwardSimulate(wrapped, AffineStrategyProfile::Zero(game.dims), {});
  const std::vector<DynamicsJacobian> jac = Linearize(wrapped, traj);
  for (int t = 0; t < game.dims.horizon(); ++t) {
    EXPECT_EQ(jac[t].A, game.A[t]);
    EXPECT_EQ(jac[t].B, game.StackedB(t));
  }
}

TEST(ForwardSimulateTest, ZeroStepReproducesOperatingPoint) {
  const NonLqGame game = BuildNavigationGame(NavigationConfig::Default(4));
  AffineStrategyProfile strategies = AffineStrategyProfile::Zero(game.dims);
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (int t = 0; t < game.dims.horizon(); ++t) {
    for (int k = 0; k < strategies.alpha[t].size(); ++k) {
      strategies.alpha[t](k) = normal(rng);
    }
  }
  const Trajectory op = ForwardSimulate(game, strategies, {});
  strategies.P[0].setConstant(0.3);
  const Trajectory same = ForwardSimulate(game, strategies, op, 0.0);
  EXPECT_EQ(MaxDistance(op, same), 0.0);
}

TEST(ForwardSimulateTest, DivergenceReportsStage) {
  LqGame game = LqGame::Zero(Dims({1}, {1}, 4));
  for (int t = 0; t < 4; ++t) {
    game.A[t] = MatrixXd::Constant(1, 1, 1e200);
    game.B[t][0] = MatrixXd::Ones(1, 1);
    game.R[t][0][0] = MatrixXd::Ones(1, 1);
  }
  game.x0 = VectorXd::Ones(1);
  game.Finalize();
  try {
    ForwardSimulate(WrapLqGame(game), AffineStrategyProfile::Zero(game.dims),
                    {});
    FAIL() << "expected DivergedRollout";
  } catch (const DivergedRollout& e) {
    EXPECT_EQ(e.stage(), 2);
  }
}

TEST(QuadraticizeTest, ConvexifiedData) {
  const NonLqGame game = BuildNavigationGame(NavigationConfig::Default(4));
  std::mt19937_64 rng(24);
  std::normal_distribution<double> normal(0.0, 2.0);
  Trajectory traj;
  for (int t = 0; t <= game.dims.horizon(); ++t) {
    VectorXd x(16);
    for (int k = 0; k < 16; ++k) x(k) = normal(rng) * (k % 4 == 3 ? 0.2 : 0.3);
    traj.x.push_back(x);
    if (t < game.dims.horizon()) {
      VectorXd u(8);
      for (int k = 0; k < 8; ++k) u(k) = normal(rng);
      traj.u.push_back(u);
    }
  }
  const double shift = 1e-3;
  const LqGame lq = Quadraticize(game, traj, shift);
  for (int t = 0; t <= game.dims.horizon(); ++t) {
    for (int i = 0; i < 4; ++i) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> q(lq.Q[t][i]);
      EXPECT_GE(q.eigenvalues().minCoeff(), -1e-10);
      if (t == game.dims.horizon()) continue;
      Eigen::SelfAdjointEigenSolver<MatrixXd> r(lq.R[t][i][i]);
      EXPECT_GE(r.eigenvalues().minCoeff(), shift - 1e-12);
    }
  }
}

TEST(QuadraticizeTest, RecoversLqCosts) {
  std::mt19937_64 rng(25);
  RandomGameOptions options;
  options.num_players = 3;
  const LqGame game = RandomLqGame(rng, options);
  const NonLqGame wrapped = WrapLqGame(game);
  const Trajectory traj =
      ForwardSimulate(wrapped, AffineStrategyProfile::Zero(game.dims), {});
  const LqGame lq = Quadraticize(wrapped, traj, 1e-3);
  for (int t = 0; t < game.dims.horizon(); ++t) {
    for (int i = 0; i < 3; ++i) {
      EXPECT_LE((lq.Q[t][i] - game.Q[t][i]).norm(), 1e-10);
      EXPECT_LE((lq.q[t][i] - game.Q[t][i] * traj.x[t] - game.q[t][i]).norm(),
                1e-10);
      EXPECT_LE((lq.R[t][i][i] - game.R[t][i][i]).norm(), 1e-10);
      const VectorXd ru = game.R[t][i][i] * traj.u[t].segment(
                                                game.dims.control_offset(i),
                                                game.dims.control_dim(i)) +
                          game.r[t][i][i];
      EXPECT_LE((lq.r[t][i][i] - ru).norm(), 1e-10);
    }
  }
  EXPECT_EQ(lq.x0.norm(), 0.0);
}

TEST(DerivativeCheckTest, WrappedLqGameIsExact) {
  std::mt19937_64 rng(26);
  RandomGameOptions options;
  options.num_players = 2;
  const LqGame game = RandomLqGame(rng, options);
  const NonLqGame wrapped = WrapLqGame(game);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd x(game.dims.state_dim());
    VectorXd u(game.dims.control_dim());
    for (int k = 0; k < x.size(); ++k) x(k) = normal(rng);
    for (int k = 0; k < u.size(); ++k) u(k) = normal(rng);
    const DerivativeCheck check = CheckDerivatives(wrapped, trial % 5, x, u);
    EXPECT_LE(check.jacobian, 1e-8);
    EXPECT_LE(check.gradient, 1e-8);
    EXPECT_LE(check.hessian, 1e-8);
    const DerivativeCheck terminal = CheckTerminalDerivatives(wrapped, x);
    EXPECT_LE(terminal.gradient, 1e-8);
  }
}

TEST(SolveIlqTest, LqGameConvergesToNash) {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 5; ++trial) {
    RandomGameOptions options;
    options.num_players = 2 + trial % 2;
    options.horizon = 8;
    // Keep the first step inside the trust radius.
    options.linear_scale = 0.05;
    const LqGame game = RandomLqGame(rng, options);
    const NashSolution nash = SolveFeedbackNash(game);
    const Trajectory exact = Rollout(game, nash.strategies);
    const IlqSolution solution = SolveIlq(WrapLqGame(game), IlqSettings{});
    EXPECT_TRUE(solution.converged);
    EXPECT_LE(solution.diagnostics.size(), 2u);
    EXPECT_EQ(solution.diagnostics.front().step_size, 1.0);
    EXPECT_LE(MaxDistance(solution.trajectory, exact), 1e-6);
    for (int t = 0; t < options.horizon; ++t) {
      EXPECT_LE((solution.strategies.P[t] - nash.strategies.P[t]).norm(), 1e-6);
      EXPECT_LE(
          (solution.strategies.alpha[t] - nash.strategies.alpha[t]).norm(),
          1e-6);
    }
  }
}

TEST(SolveIlqTest, OneIterationFromZeroMatchesSparseDp) {
  std::mt19937_64 rng(28);
  RandomGameOptions options;
  options.num_players = 3;
  options.horizon = 6;
  options.linear_scale = 0.05;
  LqGame game = RandomLqGame(rng, options);
  // With x0 = 0 the zero-control rollout is the zero operating point, so
  // deviation and absolute coordinates coincide.
  game.x0.setZero();
  const RegularizationWeights lambda(3, 0.3);
  const SparseSolveReport report = SolveRegularized(game, lambda);
  IlqSettings settings;
  settings.lambda = lambda;
  settings.max_outer_iters = 1;
  IlqSolution solution;
  try {
    solution = SolveIlq(WrapLqGame(game), settings);
  } catch (const IlqNotConverged& e) {
    solution = e.solution();
  }
  ASSERT_EQ(solution.diagnostics.size(), 1u);
  EXPECT_EQ(solution.diagnostics[0].step_size, 1.0);
  EXPECT_LE(MaxDistance(solution.trajectory, Rollout(game, report.strategies)),
            1e-6);
  for (int t = 0; t < options.horizon; ++t) {
    EXPECT_LE((solution.strategies.P[t] - report.strategies.P[t]).norm(),
              1e-6);
    EXPECT_LE(
        (solution.strategies.alpha[t] - report.strategies.alpha[t]).norm(),
        1e-6);
    EXPECT_EQ(solution.sparsity[t].count(), report.sparsity[t].count());
  }
}

TEST(SolveIlqTest, SettingsValidation) {
  const NonLqGame game = BuildNavigationGame(NavigationConfig::Default(4));
  IlqSettings settings;
  settings.max_outer_iters = 0;
  EXPECT_THROW(SolveIlq(game, settings), ConfigError);
  settings = IlqSettings{};
  settings.lambda = RegularizationWeights(3, 1.0);
  EXPECT_THROW(SolveIlq(game, settings), ConfigError);
  settings = IlqSettings{};
  settings.psd_shift = 0.0;
  EXPECT_THROW(SolveIlq(game, settings), ConfigError);
}

TEST(SolveIlqTest, NotConvergedCarriesSolution) {
  const NonLqGame game = BuildNavigationGame(NavigationConfig::Default(4));
  IlqSettings settings;
  settings.max_outer_iters = 3;
  try {
    SolveIlq(game, settings);
    FAIL() << "expected IlqNotConverged";
  } catch (const IlqNotConverged& e) {
    EXPECT_EQ(e.solution().diagnostics.size(), 3u);
    EXPECT_FALSE(e.solution().converged);
    EXPECT_EQ(e.solution().trajectory.x.size(), 151u);
  }
}

class NavigationSolve : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cfg_ = new NavigationConfig(NavigationConfig::Default(4));
    game_ = new NonLqGame(BuildNavigationGame(*cfg_));
    solution_ = new IlqSolution(SolveIlq(*game_, IlqSettings{}));
  }
  static void TearDownTestSuite() {
    delete solution_;
    delete game_;
    delete cfg_;
  }

  static NavigationConfig* cfg_;
  static NonLqGame* game_;
  static IlqSolution* solution_;
};

NavigationConfig* NavigationSolve::cfg_ = nullptr;
NonLqGame* NavigationSolve::game_ = nullptr;
IlqSolution* NavigationSolve::solution_ = nullptr;

TEST_F(NavigationSolve, ConvergesWithoutCollision) {
  EXPECT_TRUE(solution_->converged);
  EXPECT_LE(solution_->diagnostics.size(), 200u);
  EXPECT_GT(MinPairwiseDistance(solution_->trajectory, 4), 0.0);
  const VectorXd& last = solution_->trajectory.x.back();
  for (int i = 0; i < 4; ++i) {
    EXPECT_LT((last.segment(4 * i, 2) - cfg_->goals[i].head(2)).norm(), 1.0);
  }
}

TEST_F(NavigationSolve, AbsoluteStrategiesReproduceTrajectory) {
  const Trajectory replay = ForwardSimulate(*game_, solution_->strategies, {});
  EXPECT_LE(MaxDistance(replay, solution_->trajectory), 1e-9);
}

TEST_F(NavigationSolve, FixedPointResidual) {
  IlqSettings settings;
  EXPECT_LE(FixedPointResidual(*game_, settings, *solution_),
            10 * settings.convergence_tol);
}

TEST_F(NavigationSolve, DiagnosticsAreComplete) {
  for (const IlqIterate& it : solution_->diagnostics) {
    EXPECT_EQ(it.costs.size(), 4u);
    EXPECT_EQ(it.mean_nonzero.size(), 4u);
    EXPECT_GT(it.step_size, 0.0);
    EXPECT_LE(it.step_size, 1.0);
  }
  EXPECT_LE(solution_->diagnostics.back().trajectory_change, 1e-3);
}

}  // namespace
}  // namespace sparsegames
