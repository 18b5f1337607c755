///////////////////////////////////////////////////////////////////////////////
//
// Feedback Nash equilibrium of a finite-horizon LQ game by backward dynamic
// programming. At each stage the players' first-order conditions couple into
// one linear system
//
//     S_t P_t = Y_t,        S_t alpha_t = Y_alpha_t,
//
// with block (i,j) of S_t equal to B^i' Z_{t+1}^i B^j (+ R^ii on the
// diagonal), row block i of Y_t equal to B^i' Z_{t+1}^i A and row block i of
// Y_alpha_t equal to B^i' eta_{t+1}^i + r^ii. The value data (Z, eta, beta)
// then follow from the closed-loop quadratic cost-to-go.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <sparsegames/game.h>

#include <vector>

namespace sparsegames {

struct StageSystem {
  MatrixXd S;        // n x n
  MatrixXd Y;        // n x m
  VectorXd Y_alpha;  // n
};

StageSystem AssembleStageSystem(const LqGame& game, int t,
                                const ValueSlice& next);

struct StageSolution {
  MatrixXd P;      // n x m
  VectorXd alpha;  // n
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

// Relative singularity threshold on sigma_min(S) / sigma_max(S).
inline constexpr double kSingularThreshold = 1e-12;

// Solves both right-hand sides with one LU factorization of S (plus one step
// of iterative refinement). Throws SingularSystemError, tagged with `stage`,
// when sigma_min(S) < 1e-12 sigma_max(S).
StageSolution SolveStage(const StageSystem& sys, int stage = -1);

// One step of the value recursion under the installed policy (P_t, alpha_t),
// whatever produced it. Z is symmetrized on output.
ValueSlice ValueStep(const LqGame& game, int t, const MatrixXd& P,
                     const VectorXd& alpha, const ValueSlice& next);

struct NashSolution {
  AffineStrategyProfile strategies;
  ValueProfile values;
  std::vector<double> sigma_min;  // per stage, of S_t
  std::vector<double> sigma_max;
};

NashSolution SolveFeedbackNash(const LqGame& game);

}  // namespace sparsegames
