#include <sparsegames/errors.h>
#include <sparsegames/ilq_solver.h>

#include <Eigen/Eigenvalues>
#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <memory>

namespace sparsegames {

void NonLqGame::Validate() const {
  if (!dynamics || !dynamics_jacobian || !stage_cost ||
      !stage_cost_expansion || !terminal_cost || !terminal_cost_expansion) {
    throw ConfigError("non-LQ game is missing a dynamics or cost callable");
  }
  if (x0.size() != dims.state_dim()) {
    throw ConfigError("initial state has wrong dimension");
  }
}

NonLqGame WrapLqGame(const LqGame& lq) {
  NonLqGame game;
  game.dims = lq.dims;
  game.x0 = lq.x0;
  const Dims dims = lq.dims;
  // The callables share one copy of the game data.
  auto data = std::make_shared<const LqGame>(lq);
  game.dynamics = [data](int t, const VectorXd& x, const VectorXd& u) {
    return VectorXd(data->A[t] * x + data->StackedB(t) * u);
  };
  game.dynamics_jacobian = [data](int t, const VectorXd&, const VectorXd&) {
    return DynamicsJacobian{data->A[t], data->StackedB(t)};
  };
  game.stage_cost_expansion = [data, dims](int t, int i, const VectorXd& x,
                                           const VectorXd& u) {
    CostExpansion e;
    const MatrixXd& Q = data->Q[t][i];
    e.dx = Q * x + data->q[t][i];
    e.dxx = Q;
    e.value = 0.5 * x.dot(Q * x) + data->q[t][i].dot(x);
    e.du = VectorXd::Zero(dims.control_dim());
    e.duu = MatrixXd::Zero(dims.control_dim(), dims.control_dim());
    for (int j = 0; j < dims.num_players(); ++j) {
      const int o = dims.control_offset(j);
      const int nj = dims.control_dim(j);
      const MatrixXd& R = data->R[t][i][j];
      const VectorXd uj = u.segment(o, nj);
      e.du.segment(o, nj) = R * uj + data->r[t][i][j];
      e.duu.block(o, o, nj, nj) = R;
      e.value += 0.5 * uj.dot(R * uj) + data->r[t][i][j].dot(uj);
    }
    return e;
  };
  game.stage_cost = [f = game.stage_cost_expansion](
                        int t, int i, const VectorXd& x, const VectorXd& u) {
    return f(t, i, x, u).value;
  };
  game.terminal_cost_expansion = [data](int i, const VectorXd& x) {
    const int T = data->dims.horizon();
    CostExpansion e;
    e.dxx = data->Q[T][i];
    e.dx = e.dxx * x + data->q[T][i];
    e.value = 0.5 * x.dot(e.dxx * x) + data->q[T][i].dot(x);
    return e;
  };
  game.terminal_cost = [f = game.terminal_cost_expansion](int i,
                                                           const VectorXd& x) {
    return f(i, x).value;
  };
  return game;
}

double EvalCost(const NonLqGame& game, const Trajectory& traj, int player) {
  const int T = game.dims.horizon();
  if (static_cast<int>(traj.x.size()) != T + 1 ||
      static_cast<int>(traj.u.size()) != T) {
    throw DimensionError("trajectory length does not match the horizon");
  }
  if (player < 0 || player >= game.dims.num_players()) {
    throw DimensionError("player index out of range", -1, player);
  }
  double cost = 0.0;
  for (int t = 0; t < T; ++t) cost += game.stage_cost(t, player, traj.x[t], traj.u[t]);
  return cost + game.terminal_cost(player, traj.x[T]);
}

namespace {

double RelativeError(const MatrixXd& analytic, const MatrixXd& numeric) {
  return (analytic - numeric).cwiseAbs().maxCoeff() /
         std::max(1.0, numeric.cwiseAbs().maxCoeff());
}

VectorXd Steps(const VectorXd& z, double h) {
  return (h * z.cwiseAbs().cwiseMax(1.0).array()).matrix();
}

// Central differences of a scalar function.
VectorXd NumericGradient(const std::function<double(const VectorXd&)>& f,
                         const VectorXd& z, double h) {
  const VectorXd step = Steps(z, h);
  VectorXd grad(z.size());
  for (int a = 0; a < z.size(); ++a) {
    VectorXd zp = z;
    VectorXd zm = z;
    zp(a) += step(a);
    zm(a) -= step(a);
    grad(a) = (f(zp) - f(zm)) / (2 * step(a));
  }
  return grad;
}

// Central differences of a gradient oracle; symmetrized.
MatrixXd NumericHessian(const std::function<VectorXd(const VectorXd&)>& grad,
                        const VectorXd& z, double h) {
  const VectorXd step = Steps(z, h);
  MatrixXd hess(z.size(), z.size());
  for (int a = 0; a < z.size(); ++a) {
    VectorXd zp = z;
    VectorXd zm = z;
    zp(a) += step(a);
    zm(a) -= step(a);
    hess.col(a) = (grad(zp) - grad(zm)) / (2 * step(a));
  }
  return Symmetrize(hess);
}

}  // namespace

DerivativeCheck CheckDerivatives(const NonLqGame& game, int t,
                                 const VectorXd& x, const VectorXd& u,
                                 double h) {
  const int m = game.dims.state_dim();
  const int n = game.dims.control_dim();
  DerivativeCheck check;

  const DynamicsJacobian jac = game.dynamics_jacobian(t, x, u);
  MatrixXd numeric(m, m + n);
  for (int k = 0; k < m + n; ++k) {
    VectorXd xp = x, xm = x, up = u, um = u;
    double step;
    if (k < m) {
      step = h * std::max(1.0, std::abs(x(k)));
      xp(k) += step;
      xm(k) -= step;
    } else {
      step = h * std::max(1.0, std::abs(u(k - m)));
      up(k - m) += step;
      um(k - m) -= step;
    }
    numeric.col(k) =
        (game.dynamics(t, xp, up) - game.dynamics(t, xm, um)) / (2 * step);
  }
  MatrixXd analytic(m, m + n);
  analytic << jac.A, jac.B;
  check.jacobian = RelativeError(analytic, numeric);

  VectorXd z(m + n);
  z << x, u;
  for (int i = 0; i < game.dims.num_players(); ++i) {
    const CostExpansion e = game.stage_cost_expansion(t, i, x, u);
    VectorXd g(m + n);
    g << e.dx, e.du;
    const VectorXd grad = NumericGradient(
        [&](const VectorXd& v) {
          return game.stage_cost(t, i, v.head(m), v.tail(n));
        },
        z, h);
    check.gradient = std::max(check.gradient, RelativeError(g, grad));
    const MatrixXd hess = NumericHessian(
        [&](const VectorXd& v) {
          const CostExpansion ev =
              game.stage_cost_expansion(t, i, v.head(m), v.tail(n));
          VectorXd gv(m + n);
          gv << ev.dx, ev.du;
          return gv;
        },
        z, h);
    // Mixed x-u and cross-player control blocks are not part of the
    // expansion; compare the blocks it does carry.
    check.hessian = std::max(
        check.hessian, RelativeError(e.dxx, hess.topLeftCorner(m, m)));
    for (int j = 0; j < game.dims.num_players(); ++j) {
      const int o = game.dims.control_offset(j);
      const int nj = game.dims.control_dim(j);
      check.hessian = std::max(
          check.hessian, RelativeError(e.duu.block(o, o, nj, nj),
                                       hess.block(m + o, m + o, nj, nj)));
    }
  }
  return check;
}

DerivativeCheck CheckTerminalDerivatives(const NonLqGame& game,
                                         const VectorXd& x, double h) {
  DerivativeCheck check;
  for (int i = 0; i < game.dims.num_players(); ++i) {
    const CostExpansion e = game.terminal_cost_expansion(i, x);
    const VectorXd grad = NumericGradient(
        [&](const VectorXd& v) { return game.terminal_cost(i, v); }, x, h);
    const MatrixXd hess = NumericHessian(
        [&](const VectorXd& v) { return game.terminal_cost_expansion(i, v).dx; },
        x, h);
    check.gradient = std::max(check.gradient, RelativeError(e.dx, grad));
    check.hessian = std::max(check.hessian, RelativeError(e.dxx, hess));
  }
  return check;
}

Trajectory ForwardSimulate(const NonLqGame& game,
                           const AffineStrategyProfile& strategies,
                           const Trajectory& operating_point, double eta) {
  const int T = game.dims.horizon();
  if (strategies.horizon() != T) {
    throw DimensionError("strategies do not cover the horizon");
  }
  const bool has_op = !operating_point.x.empty();
  if (has_op && (static_cast<int>(operating_point.x.size()) != T + 1 ||
                 static_cast<int>(operating_point.u.size()) != T)) {
    throw DimensionError("operating point length does not match the horizon");
  }
  Trajectory traj;
  traj.x.reserve(T + 1);
  traj.u.reserve(T);
  traj.x.push_back(game.x0);
  for (int t = 0; t < T; ++t) {
    const VectorXd& x = traj.x.back();
    VectorXd u;
    if (has_op) {
      u = operating_point.u[t] -
          strategies.P[t] * (x - operating_point.x[t]) -
          eta * strategies.alpha[t];
    } else {
      u = -strategies.P[t] * x - eta * strategies.alpha[t];
    }
    VectorXd next = game.dynamics(t, x, u);
    if (!u.allFinite() || !next.allFinite()) throw DivergedRollout(t + 1);
    traj.u.push_back(std::move(u));
    traj.x.push_back(std::move(next));
  }
  return traj;
}

std::vector<DynamicsJacobian> Linearize(const NonLqGame& game,
                                        const Trajectory& traj) {
  const int T = game.dims.horizon();
  std::vector<DynamicsJacobian> out;
  out.reserve(T);
  for (int t = 0; t < T; ++t) {
    out.push_back(game.dynamics_jacobian(t, traj.x[t], traj.u[t]));
  }
  return out;
}

namespace {

MatrixXd ClampPsd(const MatrixXd& M, double floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Symmetrize(M));
  const VectorXd& d = eig.eigenvalues();
  if (d.minCoeff() >= floor) return Symmetrize(M);
  const VectorXd clamped = d.cwiseMax(floor);
  return Symmetrize(eig.eigenvectors() * clamped.asDiagonal() *
                    eig.eigenvectors().transpose());
}

MatrixXd ShiftPd(const MatrixXd& M, double floor) {
  MatrixXd sym = Symmetrize(M);
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(sym, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  if (min_eig < floor) sym.diagonal().array() += floor - min_eig;
  return sym;
}

}  // namespace

LqGame Quadraticize(const NonLqGame& game, const Trajectory& traj,
                    double psd_shift) {
  if (!(psd_shift > 0.0)) throw ConfigError("psd_shift must be positive");
  const Dims& dims = game.dims;
  const int T = dims.horizon();
  const int N = dims.num_players();
  LqGame lq = LqGame::Zero(dims);
  const std::vector<DynamicsJacobian> jac = Linearize(game, traj);
  for (int t = 0; t < T; ++t) {
    lq.A[t] = jac[t].A;
    for (int i = 0; i < N; ++i) {
      lq.B[t][i] =
          jac[t].B.middleCols(dims.control_offset(i), dims.control_dim(i));
    }
    for (int i = 0; i < N; ++i) {
      const CostExpansion e =
          game.stage_cost_expansion(t, i, traj.x[t], traj.u[t]);
      lq.Q[t][i] = ClampPsd(e.dxx, 0.0);
      lq.q[t][i] = e.dx;
      for (int j = 0; j < N; ++j) {
        const int o = dims.control_offset(j);
        const int nj = dims.control_dim(j);
        const MatrixXd block = e.duu.block(o, o, nj, nj);
        lq.R[t][i][j] = i == j ? ShiftPd(block, psd_shift) : Symmetrize(block);
        lq.r[t][i][j] = e.du.segment(o, nj);
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    const CostExpansion e = game.terminal_cost_expansion(i, traj.x[T]);
    lq.Q[T][i] = ClampPsd(e.dxx, 0.0);
    lq.q[T][i] = e.dx;
  }
  lq.x0 = VectorXd::Zero(dims.state_dim());
  lq.Validate();
  return lq;
}

void IlqSettings::Validate(const Dims& dims) const {
  if (max_outer_iters < 1) throw ConfigError("max_outer_iters must be >= 1");
  if (!(convergence_tol > 0.0)) {
    throw ConfigError("convergence_tol must be positive");
  }
  if (!(trust_radius > 0.0)) throw ConfigError("trust_radius must be positive");
  if (!(min_step > 0.0 && min_step <= 1.0)) {
    throw ConfigError("min_step must lie in (0, 1]");
  }
  if (!(max_growth > 0.0)) throw ConfigError("max_growth must be positive");
  if (!(psd_shift > 0.0)) throw ConfigError("psd_shift must be positive");
  if (lambda.num_players() != 0 && lambda.num_players() != dims.num_players()) {
    throw ConfigError("lambda must be N x N");
  }
}

IlqNotConverged::IlqNotConverged(IlqSolution solution)
    : MaxIterExceeded("iterative LQ solver did not converge",
                      solution.diagnostics.empty()
                          ? 0.0
                          : solution.diagnostics.back().trajectory_change),
      solution_(std::move(solution)) {}

namespace {

double MaxDeviation(const Trajectory& a, const Trajectory& b) {
  double worst = 0.0;
  for (size_t t = 0; t < a.x.size(); ++t) {
    worst = std::max(worst, (a.x[t] - b.x[t]).cwiseAbs().maxCoeff());
  }
  return worst;
}

struct OuterStep {
  Trajectory traj;
  AffineStrategyProfile strategies;  // absolute form
  std::vector<BlockPattern> sparsity;
  double eta = 1.0;
  double change = 0.0;
};

OuterStep RunOuterStep(const NonLqGame& game, const IlqSettings& settings,
                       const RegularizationWeights& lambda,
                       const Trajectory& op, double radius) {
  const LqGame lq = Quadraticize(game, op, settings.psd_shift);
  SparseSolveOptions options = settings.solve;
  options.allow_ridge = true;
  SparseSolveReport report = SolveRegularized(lq, lambda, options);

  OuterStep step;
  for (double eta = 1.0;; eta *= 0.5) {
    step.eta = eta;
    step.traj = ForwardSimulate(game, report.strategies, op, eta);
    step.change = MaxDeviation(step.traj, op);
    if (step.change <= radius || eta * 0.5 < settings.min_step) {
      break;
    }
  }
  const int T = game.dims.horizon();
  step.strategies = report.strategies;
  for (int t = 0; t < T; ++t) {
    step.strategies.alpha[t] = step.eta * report.strategies.alpha[t] -
                               op.u[t] - report.strategies.P[t] * op.x[t];
  }
  step.sparsity = std::move(report.sparsity);
  return step;
}

}  // namespace

IlqSolution SolveIlq(const NonLqGame& game, const IlqSettings& settings) {
  game.Validate();
  settings.Validate(game.dims);
  const Dims& dims = game.dims;
  const int N = dims.num_players();
  const int T = dims.horizon();
  const RegularizationWeights lambda = settings.lambda.num_players() == 0
                                           ? RegularizationWeights(N, 0.0)
                                           : settings.lambda;

  IlqSolution solution;
  solution.strategies = AffineStrategyProfile::Zero(dims);
  solution.trajectory = ForwardSimulate(game, solution.strategies, {});
  double radius = settings.trust_radius;
  for (int iter = 1; iter <= settings.max_outer_iters; ++iter) {
    OuterStep step =
        RunOuterStep(game, settings, lambda, solution.trajectory, radius);
    radius = std::min(settings.trust_radius, settings.max_growth * step.change);

    IlqIterate diag;
    diag.iteration = iter;
    diag.step_size = step.eta;
    diag.trajectory_change = step.change;
    diag.mean_nonzero.assign(N, 0.0);
    for (const BlockPattern& pattern : step.sparsity) {
      for (int i = 0; i < N; ++i) {
        diag.mean_nonzero[i] += pattern.row(i).count() / static_cast<double>(T);
      }
    }
    for (int i = 0; i < N; ++i) diag.costs.push_back(EvalCost(game, step.traj, i));
    VLOG(1) << "ilq iteration " << iter << ": eta = " << step.eta
            << ", change = " << step.change;

    solution.diagnostics.push_back(std::move(diag));
    solution.trajectory = std::move(step.traj);
    solution.strategies = std::move(step.strategies);
    solution.sparsity = std::move(step.sparsity);
    if (step.change <= settings.convergence_tol) {
      solution.converged = true;
      return solution;
    }
  }
  throw IlqNotConverged(std::move(solution));
}

double FixedPointResidual(const NonLqGame& game, const IlqSettings& settings,
                          const IlqSolution& solution) {
  const int N = game.dims.num_players();
  const RegularizationWeights lambda = settings.lambda.num_players() == 0
                                           ? RegularizationWeights(N, 0.0)
                                           : settings.lambda;
  return RunOuterStep(game, settings, lambda, solution.trajectory,
                      settings.trust_radius)
      .change;
}

}  // namespace sparsegames
