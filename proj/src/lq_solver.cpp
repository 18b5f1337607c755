#include <sparsegames/errors.h>
#include <sparsegames/lq_solver.h>

#include <Eigen/LU>
#include <Eigen/SVD>
#include <glog/logging.h>

namespace sparsegames {

StageSystem AssembleStageSystem(const LqGame& game, int t,
                                const ValueSlice& next) {
  const Dims& dims = game.dims;
  const int N = dims.num_players();
  const int n = dims.control_dim();
  const int m = dims.state_dim();
  if (static_cast<int>(next.Z.size()) != N ||
      static_cast<int>(next.eta.size()) != N) {
    throw DimensionError("value slice needs one entry per player", t);
  }

  StageSystem sys;
  sys.S.resize(n, n);
  sys.Y.resize(n, m);
  sys.Y_alpha.resize(n);
  for (int i = 0; i < N; ++i) {
    const int row = dims.control_offset(i);
    const int ni = dims.control_dim(i);
    if (next.Z[i].rows() != m || next.Z[i].cols() != m ||
        next.eta[i].size() != m) {
      throw DimensionError("next-stage value data has wrong shape", t, i);
    }
    const MatrixXd BiZ = game.B[t][i].transpose() * next.Z[i];
    for (int j = 0; j < N; ++j) {
      sys.S.block(row, dims.control_offset(j), ni, dims.control_dim(j)) =
          BiZ * game.B[t][j];
    }
    sys.S.block(row, row, ni, ni) += game.R[t][i][i];
    sys.Y.middleRows(row, ni) = BiZ * game.A[t];
    sys.Y_alpha.segment(row, ni) =
        game.B[t][i].transpose() * next.eta[i] + game.r[t][i][i];
  }
  return sys;
}

StageSolution SolveStage(const StageSystem& sys, int stage) {
  const int n = static_cast<int>(sys.S.rows());
  if (sys.S.cols() != n || sys.Y.rows() != n || sys.Y_alpha.size() != n) {
    throw DimensionError("stage system has inconsistent shape", stage);
  }

  StageSolution solution;
  Eigen::JacobiSVD<MatrixXd> svd(sys.S);
  const auto& sv = svd.singularValues();
  solution.sigma_max = sv(0);
  solution.sigma_min = sv(n - 1);
  if (!(solution.sigma_min >= kSingularThreshold * solution.sigma_max) ||
      solution.sigma_max == 0.0) {
    throw SingularSystemError(stage, solution.sigma_min, solution.sigma_max);
  }
  VLOG(2) << "stage " << stage + 1
          << " cond(S) = " << solution.sigma_max / solution.sigma_min;

  MatrixXd rhs(n, sys.Y.cols() + 1);
  rhs << sys.Y, sys.Y_alpha;
  const Eigen::PartialPivLU<MatrixXd> lu(sys.S);
  MatrixXd x = lu.solve(rhs);
  x += lu.solve(rhs - sys.S * x);
  solution.P = x.leftCols(sys.Y.cols());
  solution.alpha = x.col(sys.Y.cols());
  return solution;
}

ValueSlice ValueStep(const LqGame& game, int t, const MatrixXd& P,
                     const VectorXd& alpha, const ValueSlice& next) {
  const Dims& dims = game.dims;
  const int N = dims.num_players();
  const MatrixXd B = game.StackedB(t);
  const MatrixXd F = game.A[t] - B * P;
  const VectorXd omega = -B * alpha;

  ValueSlice current;
  current.Z.resize(N);
  current.eta.resize(N);
  current.beta.resize(N);
  for (int i = 0; i < N; ++i) {
    MatrixXd Z = game.Q[t][i] + F.transpose() * next.Z[i] * F;
    VectorXd eta = game.q[t][i] +
                   F.transpose() * (next.Z[i] * omega + next.eta[i]);
    double beta = 0.5 * (next.Z[i] * omega + 2.0 * next.eta[i]).dot(omega) +
                  next.beta[i];
    for (int j = 0; j < N; ++j) {
      const int row = dims.control_offset(j);
      const int nj = dims.control_dim(j);
      const auto Pj = P.middleRows(row, nj);
      const auto aj = alpha.segment(row, nj);
      const MatrixXd& Rij = game.R[t][i][j];
      const VectorXd& rij = game.r[t][i][j];
      Z.noalias() += Pj.transpose() * Rij * Pj;
      eta.noalias() += Pj.transpose() * (Rij * aj - rij);
      beta += 0.5 * aj.dot(Rij * aj) - rij.dot(aj);
    }
    current.Z[i] = Symmetrize(Z);
    current.eta[i] = std::move(eta);
    current.beta[i] = beta;
  }
  return current;
}

NashSolution SolveFeedbackNash(const LqGame& game) {
  const int T = game.dims.horizon();
  NashSolution solution;
  solution.strategies = AffineStrategyProfile::Zero(game.dims);
  solution.values = ValueProfile::WithTerminal(game);
  solution.sigma_min.resize(T);
  solution.sigma_max.resize(T);
  for (int t = T - 1; t >= 0; --t) {
    const ValueSlice& next = solution.values.stages[t + 1];
    StageSolution stage = SolveStage(AssembleStageSystem(game, t, next), t);
    solution.values.stages[t] =
        ValueStep(game, t, stage.P, stage.alpha, next);
    solution.sigma_min[t] = stage.sigma_min;
    solution.sigma_max[t] = stage.sigma_max;
    solution.strategies.P[t] = std::move(stage.P);
    solution.strategies.alpha[t] = std::move(stage.alpha);
  }
  return solution;
}

}  // namespace sparsegames
