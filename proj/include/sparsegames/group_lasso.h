///////////////////////////////////////////////////////////////////////////////
//
// Adaptive group Lasso over the player-block partition of a policy matrix:
//
//     minimize_P   1/2 ||S P - Y||_F^2 + sum_{i,j} lambda_ij ||P^i[j]||_F
//
// where P is n x m and P^i[j] is the n_i x m_j block mapping player j's state
// to player i's control. Two independent backends are provided: cyclic block
// coordinate descent with exact block minimization (produces exact zeros),
// and a log-barrier interior-point method on the second-order-cone epigraph
// form. CertifyKkt measures distance from the subgradient optimality
// condition and is what both backends report.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <sparsegames/game.h>

#include <string>

namespace sparsegames {

enum class GroupLassoBackend { kBcd, kConic };

std::string ToString(GroupLassoBackend backend);
GroupLassoBackend ParseBackend(const std::string& name);

struct GroupLassoProblem {
  MatrixXd S;  // n x n
  MatrixXd Y;  // n x m
  Dims dims;
  RegularizationWeights lambda;

  void Validate() const;
  double Objective(const MatrixXd& P) const;
  // Sum of lambda_ij ||P^i[j]||_F.
  double Penalty(const MatrixXd& P) const;
};

struct GroupLassoSolution {
  MatrixXd P_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  GroupLassoBackend backend = GroupLassoBackend::kBcd;
};

// Proximal operator of kappa ||.||_F: zero when ||G||_F <= kappa, otherwise
// (1 - kappa / ||G||_F) G.
MatrixXd BlockSoftThreshold(const MatrixXd& G, double kappa);

// Largest KKT violation over blocks. With G = S'(S P - Y): for a nonzero block
// ||G^i[j] + lambda_ij P^i[j] / ||P^i[j]|| ||, for a zero block
// max(0, ||G^i[j]|| - lambda_ij). Zero exactly at the optimum.
double CertifyKkt(const GroupLassoProblem& problem, const MatrixXd& P_hat);

// Smallest uniform off-diagonal weight at which P = 0 on every penalized
// block is optimal given the unpenalized blocks are re-fit: computed from
// the zero-block condition at the least-squares fit of the diagonal blocks.
double ZeroingWeight(const GroupLassoProblem& problem);

struct BcdOptions {
  double tol = 1e-8;
  int max_iter = 10000;
  // Adds 1e-9 I to the block normal matrices when S is rank deficient instead
  // of failing. Only the iterative (non-LQ) solver turns this on.
  bool allow_ridge = false;
};

// Cyclic block coordinate descent. Sweeps visit the diagonal blocks first,
// then the off-diagonal blocks row-major. Each block update is an exact
// minimization: a zero test followed by a safeguarded Newton solve of the
// scalar secular equation for the block's shrinkage.
// Throws MaxIterExceeded (carrying the last KKT residual), NumericalBreakdown
// if a sweep increases the objective, SingularSystemError for rank-deficient
// S without allow_ridge.
GroupLassoSolution SolveBcd(const GroupLassoProblem& problem,
                            const BcdOptions& options = {});

// Blocks of a conic solution whose norm is below this fraction of
// (1 + ||P||_F) are snapped to exact zeros.
inline constexpr double kConicZeroThreshold = 1e-6;

struct ConicOptions {
  // Target on the barrier duality-gap bound, relative to max(1, |objective|).
  double tol = 1e-10;
  int max_newton_steps = 500;
};

// Interior-point solve of the epigraph reformulation
//   min 1/2 ||(I (x) S) vec(P) - vec(Y)||^2 + sum lambda_ij s_ij
//   s.t. (s_ij, vec(P^i[j])) in the second-order cone.
// Throws SolverFailure with a status string when Newton stalls.
GroupLassoSolution SolveConic(const GroupLassoProblem& problem,
                              const ConicOptions& options = {});

GroupLassoSolution SolveGroupLasso(const GroupLassoProblem& problem,
                                   GroupLassoBackend backend,
                                   double tol = 1e-8);

}  // namespace sparsegames
