// Monte Carlo evaluation of regularized strategies under noisy observations
// of the other players' states, plus the CSV/SVG writers used by the CLI.

#pragma once

#include <sparsegames/game.h>
#include <sparsegames/scenarios.h>
#include <sparsegames/sparse_dp.h>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sparsegames {

struct NoiseModel {
  double variance = 0.0;  // per dimension
  std::uint64_t seed = 0;

  void Validate() const;
};

// Player i applies u^i = -P^i x~(i) - alpha^i where x~(i) carries i's own
// block exactly and every other player's block perturbed by fresh
// N(0, variance I) noise; draws are independent per step, observer and
// observed player. The true state advances with game.A/B from x0. With zero
// variance this is Rollout bit for bit.
//
// When `checksum` is non-null it receives a hash of every draw consumed.
Trajectory NoisyRollout(const LqGame& game,
                        const AffineStrategyProfile& strategies,
                        const NoiseModel& noise, const VectorXd& x0,
                        std::uint64_t* checksum = nullptr);

std::vector<double> Linspace(double lo, double hi, int count);

struct SweepSpec {
  std::vector<double> noise_levels;  // per-dimension variance
  std::vector<double> lambdas;       // uniform off-diagonal weights
  int num_initial = 20;              // random initial positions per cell
  double box_width = 20.0;           // sampling box centred at the origin
  double box_height = 20.0;
  std::uint64_t seed = 0;
  int threads = 1;

  // 10 noise levels in [0, 2000], 10 weights in [0, 15], 20 positions.
  static SweepSpec DeskScale();
  void Validate() const;
};

// One (noise, lambda, initial position) comparison.
struct SweepRecord {
  int noise_index = 0;
  int lambda_index = 0;
  int seed_index = 0;
  std::vector<double> cost;           // per player, regularized strategies
  std::vector<double> baseline_cost;  // per player, lambda = 0 strategies
  bool ok = true;
  std::string error;
};

struct SweepResult {
  SweepSpec spec;
  FormationConfig scenario;
  std::vector<SweepRecord> records;  // noise-major, then lambda, then seed
  // [player](noise, lambda): mean over seeds of cost - baseline_cost, and
  // the mean regularized cost. NaN where every seed failed.
  std::vector<MatrixXd> mean_difference;
  std::vector<MatrixXd> mean_cost;
  // [lambda index] nonzero-block counts of the solved strategies.
  std::vector<SparsityPattern> sparsity;
  std::vector<std::string> solve_errors;  // per lambda, empty when solved
  std::string git_revision;
  std::string config_hash;
};

// Solves the formation game once per lambda and evaluates every
// (noise, lambda, position) cell against the lambda = 0 baseline under
// common random numbers. Solver failures are recorded, not thrown.
SweepResult RunSweep(const SweepSpec& spec, const FormationConfig& scenario);

// FNV-1a of the canonical JSON of the inputs, as 16 hex digits.
std::string ConfigHash(const SweepSpec& spec, const FormationConfig& scenario);

// Per-stage nonzero-block counts for each labelled solution.
struct SparsityRow {
  double lambda = 0.0;
  int player = 0;
  int stage = 0;  // 1-based
  int count = 0;
};
std::vector<SparsityRow> SparsityReport(
    const std::vector<double>& lambdas,
    const std::vector<SparsityPattern>& patterns);

// CSV writers. Every file starts with a "# config_hash=<hash>" line followed
// by the header.
void WriteSweepSummaryCsv(std::ostream& out, const SweepResult& result);
void WriteSweepRecordsCsv(std::ostream& out, const SweepResult& result);
void WriteSparsityCsv(std::ostream& out, const std::vector<SparsityRow>& rows,
                      const std::string& config_hash);
void WriteTrajectoryCsv(std::ostream& out, const Trajectory& traj,
                        const std::string& config_hash);
void WriteTraceCsv(std::ostream& out, const std::vector<double>& lambdas,
                   const std::vector<ConvergenceTrace>& traces,
                   const std::string& config_hash);

// Minimal SVG renderings.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};
void WriteLineSvg(std::ostream& out, const std::string& title,
                  const std::string& x_label, const std::string& y_label,
                  const std::vector<Series>& series, bool log_y,
                  const std::string& config_hash);
// Rows are y (noise), columns are x (lambda).
void WriteHeatmapSvg(std::ostream& out, const std::string& title,
                     const std::vector<double>& xs,
                     const std::vector<double>& ys, const MatrixXd& values,
                     const std::string& config_hash);
// Planar paths; `positions[i]` lists player i's (x, y) over time.
void WritePathsSvg(std::ostream& out, const std::string& title,
                   const std::vector<std::vector<Eigen::Vector2d>>& positions,
                   const std::string& config_hash);

// Writes `contents` to `path`, throwing std::runtime_error naming the path
// on failure.
void WriteFile(const std::string& path, const std::string& contents);

}  // namespace sparsegames
