///////////////////////////////////////////////////////////////////////////////
//
// Iterative LQ games with group sparsity. Each outer iteration linearizes the
// dynamics and quadraticizes the costs about the current operating point
// (x_bar, u_bar), solves the resulting LQ game in deviation coordinates with
// the regularized backward recursion, and installs
//
//     u_t = u_bar_t - P_t (x_t - x_bar_t) - eta alpha_t
//
// with eta chosen by backtracking on the forward rollout: halve from 1 until
// the largest state deviation from the operating point is within
// min(trust_radius, max_growth * previous deviation), or eta hits min_step.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <sparsegames/game.h>
#include <sparsegames/sparse_dp.h>

#include <functional>
#include <vector>

namespace sparsegames {

// Second-order data of a scalar cost at one point. du/duu are empty for
// terminal costs.
struct CostExpansion {
  double value = 0.0;
  VectorXd dx;
  VectorXd du;
  MatrixXd dxx;
  MatrixXd duu;
};

struct DynamicsJacobian {
  MatrixXd A;  // m x m
  MatrixXd B;  // m x n, joint controls
};

struct NonLqGame {
  Dims dims;
  VectorXd x0;

  // Stage index t is 0-based; u is the joint control.
  std::function<VectorXd(int t, const VectorXd& x, const VectorXd& u)>
      dynamics;
  std::function<DynamicsJacobian(int t, const VectorXd& x, const VectorXd& u)>
      dynamics_jacobian;
  std::function<double(int t, int player, const VectorXd& x,
                       const VectorXd& u)>
      stage_cost;
  std::function<CostExpansion(int t, int player, const VectorXd& x,
                              const VectorXd& u)>
      stage_cost_expansion;
  std::function<double(int player, const VectorXd& x)> terminal_cost;
  std::function<CostExpansion(int player, const VectorXd& x)>
      terminal_cost_expansion;

  // Throws ConfigError if a callable is missing or x0 has the wrong size.
  void Validate() const;
};

// Stage-wise dynamics and costs of an LqGame behind the non-LQ interface.
NonLqGame WrapLqGame(const LqGame& game);

double EvalCost(const NonLqGame& game, const Trajectory& traj, int player);

// Largest relative disagreement between the oracles and central differences
// with step h (scaled by max(1, |z_k|)) at one point.
struct DerivativeCheck {
  double jacobian = 0.0;
  double gradient = 0.0;
  double hessian = 0.0;
};
DerivativeCheck CheckDerivatives(const NonLqGame& game, int t,
                                 const VectorXd& x, const VectorXd& u,
                                 double h = 1e-5);
DerivativeCheck CheckTerminalDerivatives(const NonLqGame& game,
                                         const VectorXd& x, double h = 1e-5);

// Rolls out u_t = u_bar_t - P_t (x_t - x_bar_t) - eta alpha_t. With an empty
// operating point, x_bar and u_bar are taken as zero. Throws DivergedRollout
// at the first non-finite state.
Trajectory ForwardSimulate(const NonLqGame& game,
                           const AffineStrategyProfile& strategies,
                           const Trajectory& operating_point,
                           double eta = 1.0);

std::vector<DynamicsJacobian> Linearize(const NonLqGame& game,
                                        const Trajectory& traj);

// The LQ game in deviation coordinates about `traj`: A, B from Linearize,
// Q = clamp(d2g/dx2), q = dg/dx, R^ij = block j of d2g^i/du2 (R^ii shifted
// to min eigenvalue >= psd_shift), r^ij = block j of dg^i/du. Mixed x-u and
// cross-player control terms are dropped. x0 is zero.
LqGame Quadraticize(const NonLqGame& game, const Trajectory& traj,
                    double psd_shift);

struct IlqSettings {
  int max_outer_iters = 200;
  double convergence_tol = 1e-3;  // on ||x_new - x_old||_inf
  double trust_radius = 1.0;      // max per-step state deviation
  double min_step = 1.0 / 64.0;
  // The accepted deviation may exceed the previous iteration's by at most
  // this factor; damps the limit cycles that soft-constraint kinks cause.
  double max_growth = 1.5;
  double psd_shift = 1e-3;
  RegularizationWeights lambda;   // empty means all zero
  SparseSolveOptions solve;

  void Validate(const Dims& dims) const;
};

struct IlqIterate {
  int iteration = 0;
  double step_size = 0.0;
  double trajectory_change = 0.0;
  std::vector<double> costs;             // per player
  std::vector<double> mean_nonzero;      // per player, time-averaged
};

struct IlqSolution {
  // The installed policy rewritten in absolute form u = -P x - alpha, i.e.
  // alpha = eta alpha_dev - u_bar - P x_bar about the operating point it was
  // computed at. ForwardSimulate with an empty operating point reproduces
  // `trajectory`.
  AffineStrategyProfile strategies;
  Trajectory trajectory;
  std::vector<IlqIterate> diagnostics;
  std::vector<BlockPattern> sparsity;  // of the last LQ solve
  bool converged = false;
};

class IlqNotConverged : public MaxIterExceeded {
 public:
  explicit IlqNotConverged(IlqSolution solution);
  const IlqSolution& solution() const { return solution_; }

 private:
  IlqSolution solution_;
};

// Starts from zero strategies about the zero-control rollout.
IlqSolution SolveIlq(const NonLqGame& game, const IlqSettings& settings);

// One further outer iteration from a returned solution; the size of the
// resulting change measures how close the solution is to a fixed point.
double FixedPointResidual(const NonLqGame& game, const IlqSettings& settings,
                          const IlqSolution& solution);

}  // namespace sparsegames
