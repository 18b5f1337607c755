#include <sparsegames/harness.h>
#include <sparsegames/lq_solver.h>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "test_utils.h"

namespace sparsegames {
namespace {

using testutil::RandomGameOptions;
using testutil::RandomLqGame;

bool SameBits(const Trajectory& a, const Trajectory& b) {
  if (a.x.size() != b.x.size() || a.u.size() != b.u.size()) return false;
  for (size_t t = 0; t < a.x.size(); ++t) {
    if (!(a.x[t].array() == b.x[t].array()).all()) return false;
  }
  for (size_t t = 0; t < a.u.size(); ++t) {
    if (!(a.u[t].array() == b.u[t].array()).all()) return false;
  }
  return true;
}

// Removes every off-diagonal block from a strategy profile.
AffineStrategyProfile Decoupled(const Dims& dims, AffineStrategyProfile s) {
  for (MatrixXd& P : s.P) {
    for (int i = 0; i < dims.num_players(); ++i) {
      for (int j = 0; j < dims.num_players(); ++j) {
        if (i != j) BlockView(P, dims, i, j).setZero();
      }
    }
  }
  return s;
}

int DataRows(const std::string& csv) {
  int rows = 0;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  return rows - 1;  // header
}

TEST(NoisyRolloutTest, ZeroNoiseIsRollout) {
  std::mt19937_64 rng(31);
  RandomGameOptions options;
  options.num_players = 3;
  const LqGame game = RandomLqGame(rng, options);
  const NashSolution nash = SolveFeedbackNash(game);
  const Trajectory noisy =
      NoisyRollout(game, nash.strategies, NoiseModel{0.0, 5}, game.x0);
  EXPECT_TRUE(SameBits(noisy, Rollout(game, nash.strategies)));
}

TEST(NoisyRolloutTest, DecoupledStrategiesIgnoreNoise) {
  std::mt19937_64 rng(32);
  RandomGameOptions options;
  options.num_players = 3;
  const LqGame game = RandomLqGame(rng, options);
  const AffineStrategyProfile s =
      Decoupled(game.dims, SolveFeedbackNash(game).strategies);
  const Trajectory clean = NoisyRollout(game, s, NoiseModel{0.0, 1}, game.x0);
  for (double variance : {1.0, 500.0, 2000.0}) {
    const Trajectory noisy =
        NoisyRollout(game, s, NoiseModel{variance, 7}, game.x0);
    EXPECT_TRUE(SameBits(clean, noisy)) << variance;
  }
}

TEST(NoisyRolloutTest, NoiseReachesCoupledStrategies) {
  std::mt19937_64 rng(33);
  RandomGameOptions options;
  options.num_players = 2;
  const LqGame game = RandomLqGame(rng, options);
  const AffineStrategyProfile s = SolveFeedbackNash(game).strategies;
  const Trajectory clean = NoisyRollout(game, s, NoiseModel{0.0, 1}, game.x0);
  const Trajectory noisy = NoisyRollout(game, s, NoiseModel{1.0, 1}, game.x0);
  EXPECT_FALSE(SameBits(clean, noisy));
  // The initial state is never perturbed.
  EXPECT_TRUE((clean.x[0].array() == noisy.x[0].array()).all());
}

TEST(NoisyRolloutTest, DeterministicPerSeed) {
  std::mt19937_64 rng(34);
  RandomGameOptions options;
  options.num_players = 3;
  const LqGame game = RandomLqGame(rng, options);
  const AffineStrategyProfile s = SolveFeedbackNash(game).strategies;
  std::uint64_t a = 0, b = 0, c = 0;
  const Trajectory first = NoisyRollout(game, s, NoiseModel{3.0, 9}, game.x0, &a);
  const Trajectory second =
      NoisyRollout(game, s, NoiseModel{3.0, 9}, game.x0, &b);
  NoisyRollout(game, s, NoiseModel{3.0, 10}, game.x0, &c);
  EXPECT_TRUE(SameBits(first, second));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  // Different strategies draw the same stream.
  std::uint64_t d = 0;
  NoisyRollout(game, Decoupled(game.dims, s), NoiseModel{3.0, 9}, game.x0, &d);
  EXPECT_EQ(a, d);
}

TEST(NoisyRolloutTest, ObservationNoiseHasRequestedVariance) {
  // One scalar player observing another whose gain is 1: the applied control
  // is -(x2 + e), so u + x2 recovers the noise sample.
  LqGame game = LqGame::Zero(Dims({1, 1}, {1, 1}, 4000));
  for (int t = 0; t < 4000; ++t) {
    game.R[t][0][0] = MatrixXd::Ones(1, 1);
    game.R[t][1][1] = MatrixXd::Ones(1, 1);
  }
  game.x0 = Eigen::Vector2d(0.0, 2.0);
  game.Finalize();
  AffineStrategyProfile s = AffineStrategyProfile::Zero(game.dims);
  for (MatrixXd& P : s.P) P(0, 1) = 1.0;
  const Trajectory traj = NoisyRollout(game, s, NoiseModel{4.0, 3}, game.x0);
  double mean = 0.0;
  double second = 0.0;
  for (int t = 0; t < 4000; ++t) {
    const double e = -traj.u[t](0) - traj.x[t](1);
    mean += e / 4000;
    second += e * e / 4000;
  }
  EXPECT_NEAR(mean, 0.0, 0.15);
  EXPECT_NEAR(second - mean * mean, 4.0, 0.3);
}

TEST(NoisyRolloutTest, RejectsBadInput) {
  const LqGame game = LqGame::Zero(Dims({1}, {1}, 2));
  const AffineStrategyProfile s = AffineStrategyProfile::Zero(game.dims);
  EXPECT_THROW(NoisyRollout(game, s, NoiseModel{-1.0, 0}, game.x0),
               ConfigError);
  EXPECT_THROW(NoisyRollout(game, s, NoiseModel{0.0, 0}, VectorXd::Zero(3)),
               DimensionError);
}

TEST(SweepSpecTest, DeskScaleAndValidation) {
  const SweepSpec spec = SweepSpec::DeskScale();
  ASSERT_EQ(spec.noise_levels.size(), 10u);
  ASSERT_EQ(spec.lambdas.size(), 10u);
  EXPECT_EQ(spec.noise_levels.back(), 2000.0);
  EXPECT_EQ(spec.lambdas.back(), 15.0);
  EXPECT_EQ(spec.num_initial, 20);
  EXPECT_NO_THROW(spec.Validate());
  SweepSpec bad = spec;
  bad.lambdas.clear();
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = spec;
  bad.box_width = 0.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = spec;
  bad.noise_levels[1] = -3.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
  EXPECT_EQ(Linspace(0.0, 1.0, 3), (std::vector<double>{0.0, 0.5, 1.0}));
}

class SmallSweep : public ::testing::Test {
 protected:
  static SweepSpec Spec() {
    SweepSpec spec;
    spec.noise_levels = {0.0, 800.0};
    spec.lambdas = {0.0, 5.0};
    spec.num_initial = 3;
    spec.seed = 42;
    return spec;
  }
  static FormationConfig Scenario() {
    FormationConfig cfg;
    cfg.horizon = 60;
    return cfg;
  }
};

TEST_F(SmallSweep, BaselineAndZeroNoise) {
  const SweepResult result = RunSweep(Spec(), Scenario());
  ASSERT_EQ(result.records.size(), 2u * 2u * 3u);
  for (const SweepRecord& rec : result.records) {
    ASSERT_TRUE(rec.ok) << rec.error;
    if (rec.lambda_index == 0) {
      for (int i = 0; i < 3; ++i) EXPECT_EQ(rec.cost[i], rec.baseline_cost[i]);
    }
  }
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(result.mean_difference[i](0, 0), 0.0);
    EXPECT_EQ(result.mean_difference[i](1, 0), 0.0);
  }
  // Without noise the exact equilibrium cannot be beaten by players 2, 3.
  for (int i = 1; i < 3; ++i) {
    EXPECT_GE(result.mean_difference[i](0, 1),
              -1e-6 * std::abs(result.mean_cost[i](0, 1)));
  }
  EXPECT_EQ(result.sparsity.size(), 2u);
  EXPECT_EQ(result.config_hash.size(), 16u);
}

TEST_F(SmallSweep, PlayerOneIgnoresNoise) {
  const SweepResult result = RunSweep(Spec(), Scenario());
  for (int l = 0; l < 2; ++l) {
    EXPECT_EQ(result.mean_cost[0](0, l), result.mean_cost[0](1, l));
  }
}

TEST_F(SmallSweep, CsvRowCountsAndDeterminism) {
  const SweepResult first = RunSweep(Spec(), Scenario());
  std::ostringstream a, b, records;
  WriteSweepSummaryCsv(a, first);
  WriteSweepRecordsCsv(records, first);
  EXPECT_EQ(DataRows(a.str()), 4 * 3);
  EXPECT_EQ(DataRows(records.str()), 12 * 3);
  EXPECT_EQ(a.str().rfind("# config_hash=" + first.config_hash, 0), 0u);

  SweepSpec threaded = Spec();
  threaded.threads = 3;
  const SweepResult second = RunSweep(threaded, Scenario());
  WriteSweepSummaryCsv(b, second);
  // Thread count is not part of the configuration.
  EXPECT_EQ(a.str(), b.str());

  SweepSpec reseeded = Spec();
  reseeded.seed = 43;
  EXPECT_NE(ConfigHash(reseeded, Scenario()), first.config_hash);
}

TEST(SweepCsvTest, EmptyResultIsHeaderOnly) {
  SweepResult empty;
  empty.config_hash = "0";
  std::ostringstream out;
  WriteSweepSummaryCsv(out, empty);
  EXPECT_EQ(DataRows(out.str()), 0);
  std::ostringstream records;
  WriteSweepRecordsCsv(records, empty);
  EXPECT_EQ(DataRows(records.str()), 0);
}

TEST(SparsityReportTest, FormationCounts) {
  const FormationGame formation = BuildFormationGame(FormationConfig{});
  const std::vector<double> lambdas = {0.0, 1.5, 5.0, 15.0};
  std::vector<SparsityPattern> patterns;
  for (double weight : lambdas) {
    const SparseSolveReport report =
        SolveRegularized(formation.game, RegularizationWeights(3, weight));
    patterns.push_back(ComputeSparsityPattern(
        formation.game.dims, report.strategies, kBcdSparsityThreshold));
  }
  const int T = formation.game.dims.horizon();
  // The last stage has no cost-to-go, so its gain vanishes.
  for (int t = 0; t < T - 1; ++t) {
    EXPECT_EQ(patterns[0].counts[t](0), 1) << t;
    EXPECT_EQ(patterns[0].counts[t](1), 3) << t;
    EXPECT_EQ(patterns[0].counts[t](2), 3) << t;
  }
  for (size_t l = 1; l < lambdas.size(); ++l) {
    for (int t = 0; t < T; ++t) {
      EXPECT_TRUE((patterns[l].counts[t].array() <=
                   patterns[l - 1].counts[t].array())
                      .all())
          << "lambda " << lambdas[l] << " stage " << t;
    }
  }
  const std::vector<SparsityRow> rows = SparsityReport(lambdas, patterns);
  EXPECT_EQ(rows.size(), lambdas.size() * 3 * T);
  EXPECT_EQ(rows.front().stage, 1);
  EXPECT_EQ(rows.front().player, 1);
  std::ostringstream csv;
  WriteSparsityCsv(csv, rows, "abc");
  EXPECT_EQ(DataRows(csv.str()), static_cast<int>(rows.size()));
  EXPECT_THROW(SparsityReport({0.0}, {}), DimensionError);
}

TEST(SvgTest, WritersEmitTaggedDocuments) {
  std::ostringstream line, heat, paths;
  WriteLineSvg(line, "trace", "step", "dP",
               {{"a", {1, 2, 3}, {1.0, 0.1, 0.01}}, {"b", {1, 2}, {0.0, 2.0}}},
               true, "feed");
  MatrixXd values(2, 2);
  values << 0.0, -1.0, 2.0, std::nan("");
  WriteHeatmapSvg(heat, "diff", {0.0, 1.0}, {0.0, 5.0}, values, "feed");
  WritePathsSvg(paths, "paths",
                {{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)},
                 {Eigen::Vector2d(1, 0)}},
                "feed");
  for (const std::string& svg : {line.str(), heat.str(), paths.str()}) {
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("config_hash=feed"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
  }
  EXPECT_EQ(heat.str().find("nan\""), std::string::npos);
}

TEST(CsvTest, TrajectoryAndTrace) {
  Trajectory traj;
  traj.x = {Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)};
  traj.u = {VectorXd::Ones(1)};
  std::ostringstream out;
  WriteTrajectoryCsv(out, traj, "h");
  EXPECT_EQ(out.str(), "# config_hash=h\nstage,x0,x1,u0\n1,1,2,1\n2,3,4,\n");
  ConvergenceTrace trace{{0.5, 0.25}, {1.0, 0.5}, {}};
  std::ostringstream tr;
  WriteTraceCsv(tr, {1.5}, {trace}, "h");
  EXPECT_EQ(tr.str(),
            "# config_hash=h\nlambda,step,delta_P,z_change,z_error\n"
            "1.5,1,0.5,1,\n1.5,2,0.25,0.5,\n");
}

TEST(WriteFileTest, NamesPathOnFailure) {
  try {
    WriteFile("/nonexistent-dir/out.csv", "x");
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/out.csv"),
              std::string::npos);
  }
}

}  // namespace
}  // namespace sparsegames
