#include <sparsegames/errors.h>
#include <sparsegames/game.h>

#include <Eigen/Eigenvalues>
#include <string>

namespace sparsegames {
namespace {

void CheckShape(const MatrixXd& M, int rows, int cols, const std::string& name,
                int stage, int player) {
  if (M.rows() != rows || M.cols() != cols) {
    throw DimensionError(name + " is " + std::to_string(M.rows()) + "x" +
                             std::to_string(M.cols()) + ", expected " +
                             std::to_string(rows) + "x" + std::to_string(cols),
                         stage, player);
  }
}

void CheckSize(const VectorXd& v, int size, const std::string& name, int stage,
               int player) {
  if (v.size() != size) {
    throw DimensionError(name + " has length " + std::to_string(v.size()) +
                             ", expected " + std::to_string(size),
                         stage, player);
  }
}

double MinEigenvalue(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

}  // namespace

MatrixXd Symmetrize(const MatrixXd& M) {
  return 0.5 * (M + M.transpose());
}

Dims::Dims(std::vector<int> state_dims, std::vector<int> control_dims,
           int horizon)
    : state_dims_(std::move(state_dims)),
      control_dims_(std::move(control_dims)),
      horizon_(horizon) {
  if (state_dims_.empty()) throw DimensionError("at least one player needed");
  if (state_dims_.size() != control_dims_.size()) {
    throw DimensionError("state_dims and control_dims differ in length");
  }
  if (horizon_ < 1) throw DimensionError("horizon must be >= 1");
  for (size_t i = 0; i < state_dims_.size(); ++i) {
    if (state_dims_[i] < 1 || control_dims_[i] < 1) {
      throw DimensionError("per-player dimensions must be >= 1", -1,
                           static_cast<int>(i));
    }
    state_offsets_.push_back(state_offsets_.back() + state_dims_[i]);
    control_offsets_.push_back(control_offsets_.back() + control_dims_[i]);
  }
}

Dims Dims::WithHorizon(int horizon) const {
  return Dims(state_dims_, control_dims_, horizon);
}

LqGame LqGame::Zero(const Dims& dims) {
  const int N = dims.num_players();
  const int T = dims.horizon();
  const int m = dims.state_dim();
  LqGame game;
  game.dims = dims;
  game.A.assign(T, MatrixXd::Identity(m, m));
  game.B.resize(T);
  game.R.resize(T);
  game.r.resize(T);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      game.B[t].push_back(MatrixXd::Zero(m, dims.control_dim(i)));
    }
    game.R[t].resize(N);
    game.r[t].resize(N);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const int nj = dims.control_dim(j);
        game.R[t][i].push_back(MatrixXd::Zero(nj, nj));
        game.r[t][i].push_back(VectorXd::Zero(nj));
      }
    }
  }
  game.Q.assign(T + 1, std::vector<MatrixXd>(N, MatrixXd::Zero(m, m)));
  game.q.assign(T + 1, std::vector<VectorXd>(N, VectorXd::Zero(m)));
  game.x0 = VectorXd::Zero(m);
  return game;
}

void LqGame::Finalize() {
  for (auto& stage : Q) {
    for (auto& Qi : stage) {
      if (Qi.rows() == Qi.cols()) Qi = Symmetrize(Qi);
    }
  }
  for (auto& stage : R) {
    for (auto& row : stage) {
      for (auto& Rij : row) {
        if (Rij.rows() == Rij.cols()) Rij = Symmetrize(Rij);
      }
    }
  }
  Validate();
}

void LqGame::Validate() const {
  const int N = dims.num_players();
  const int T = dims.horizon();
  const int m = dims.state_dim();
  if (static_cast<int>(A.size()) != T || static_cast<int>(B.size()) != T ||
      static_cast<int>(R.size()) != T || static_cast<int>(r.size()) != T) {
    throw DimensionError("control-stage data must have T entries");
  }
  if (static_cast<int>(Q.size()) != T + 1 ||
      static_cast<int>(q.size()) != T + 1) {
    throw DimensionError("state-cost data must have T+1 entries");
  }
  CheckSize(x0, m, "x0", -1, -1);
  for (int t = 0; t <= T; ++t) {
    if (static_cast<int>(Q[t].size()) != N ||
        static_cast<int>(q[t].size()) != N) {
      throw DimensionError("Q/q need one entry per player", t);
    }
    for (int i = 0; i < N; ++i) {
      CheckShape(Q[t][i], m, m, "Q", t, i);
      CheckSize(q[t][i], m, "q", t, i);
      if ((Q[t][i] - Q[t][i].transpose()).cwiseAbs().maxCoeff() > 1e-8) {
        throw SparseGamesError("Q is not symmetric at stage " +
                               std::to_string(t + 1));
      }
      if (MinEigenvalue(Q[t][i]) < -1e-8) {
        throw SparseGamesError("Q is not positive semidefinite at stage " +
                               std::to_string(t + 1) + ", player " +
                               std::to_string(i + 1));
      }
    }
  }
  for (int t = 0; t < T; ++t) {
    CheckShape(A[t], m, m, "A", t, -1);
    if (static_cast<int>(B[t].size()) != N ||
        static_cast<int>(R[t].size()) != N ||
        static_cast<int>(r[t].size()) != N) {
      throw DimensionError("B/R/r need one entry per player", t);
    }
    for (int i = 0; i < N; ++i) {
      CheckShape(B[t][i], m, dims.control_dim(i), "B", t, i);
      if (static_cast<int>(R[t][i].size()) != N ||
          static_cast<int>(r[t][i].size()) != N) {
        throw DimensionError("R/r need one entry per player pair", t, i);
      }
      for (int j = 0; j < N; ++j) {
        const int nj = dims.control_dim(j);
        CheckShape(R[t][i][j], nj, nj, "R", t, i);
        CheckSize(r[t][i][j], nj, "r", t, i);
      }
      if (MinEigenvalue(R[t][i][i]) <= 1e-10) {
        throw SparseGamesError("R^ii is not positive definite at stage " +
                               std::to_string(t + 1) + ", player " +
                               std::to_string(i + 1));
      }
    }
  }
}

MatrixXd LqGame::StackedB(int t) const {
  MatrixXd stacked(dims.state_dim(), dims.control_dim());
  for (int i = 0; i < dims.num_players(); ++i) {
    stacked.middleCols(dims.control_offset(i), dims.control_dim(i)) = B[t][i];
  }
  return stacked;
}

AffineStrategyProfile AffineStrategyProfile::Zero(const Dims& dims) {
  AffineStrategyProfile profile;
  profile.P.assign(dims.horizon(),
                   MatrixXd::Zero(dims.control_dim(), dims.state_dim()));
  profile.alpha.assign(dims.horizon(), VectorXd::Zero(dims.control_dim()));
  return profile;
}

Eigen::Block<const MatrixXd> AffineStrategyProfile::PlayerGain(
    const Dims& dims, int t, int player) const {
  return P.at(t).middleRows(dims.control_offset(player),
                            dims.control_dim(player));
}

Eigen::VectorBlock<const VectorXd> AffineStrategyProfile::PlayerOffset(
    const Dims& dims, int t, int player) const {
  return alpha.at(t).segment(dims.control_offset(player),
                             dims.control_dim(player));
}

ValueProfile ValueProfile::WithTerminal(const LqGame& game) {
  const int T = game.dims.horizon();
  ValueProfile values;
  values.stages.resize(T + 1);
  ValueSlice& terminal = values.stages[T];
  terminal.Z = game.Q[T];
  terminal.eta = game.q[T];
  terminal.beta.assign(game.dims.num_players(), 0.0);
  return values;
}

double ValueProfile::CostToGo(int t, int player, const VectorXd& x) const {
  const ValueSlice& slice = stages.at(t);
  return 0.5 * x.dot(slice.Z[player] * x) + slice.eta[player].dot(x) +
         slice.beta[player];
}

RegularizationWeights::RegularizationWeights(int num_players,
                                             double off_diagonal)
    : lambda(MatrixXd::Constant(num_players, num_players, off_diagonal)) {
  if (off_diagonal < 0.0) {
    throw SparseGamesError("regularization weights must be nonnegative");
  }
  lambda.diagonal().setZero();
}

RegularizationWeights::RegularizationWeights(MatrixXd weights)
    : lambda(std::move(weights)) {
  if (lambda.rows() != lambda.cols()) {
    throw DimensionError("regularization weights must be square");
  }
  if ((lambda.array() < 0.0).any()) {
    throw SparseGamesError("regularization weights must be nonnegative");
  }
}

Trajectory Rollout(const LqGame& game, const AffineStrategyProfile& strategies) {
  const Dims& dims = game.dims;
  const int T = dims.horizon();
  if (strategies.horizon() != T ||
      static_cast<int>(strategies.alpha.size()) != T) {
    throw DimensionError("strategy horizon " +
                         std::to_string(strategies.horizon()) +
                         " does not match game horizon " + std::to_string(T));
  }
  Trajectory traj;
  traj.x.reserve(T + 1);
  traj.u.reserve(T);
  traj.x.push_back(game.x0);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < dims.num_players(); ++i) {
      const int rows = dims.control_dim(i);
      const int offset = dims.control_offset(i);
      if (strategies.P[t].rows() < offset + rows ||
          strategies.P[t].cols() != dims.state_dim() ||
          strategies.alpha[t].size() < offset + rows) {
        throw DimensionError("strategy block has wrong shape", t, i);
      }
    }
    if (strategies.P[t].rows() != dims.control_dim() ||
        strategies.alpha[t].size() != dims.control_dim()) {
      throw DimensionError("stacked strategy has wrong shape", t);
    }
    const VectorXd& x = traj.x.back();
    VectorXd u = -strategies.P[t] * x - strategies.alpha[t];
    VectorXd next = game.A[t] * x;
    for (int i = 0; i < dims.num_players(); ++i) {
      next += game.B[t][i] *
              u.segment(dims.control_offset(i), dims.control_dim(i));
    }
    traj.u.push_back(std::move(u));
    traj.x.push_back(std::move(next));
  }
  return traj;
}

double EvalCost(const LqGame& game, const Trajectory& traj, int player) {
  const Dims& dims = game.dims;
  const int T = dims.horizon();
  if (player < 0 || player >= dims.num_players()) {
    throw DimensionError("player index out of range", -1, player);
  }
  if (static_cast<int>(traj.x.size()) != T + 1 ||
      static_cast<int>(traj.u.size()) != T) {
    throw DimensionError("trajectory length does not match horizon");
  }
  double cost = 0.0;
  for (int t = 0; t <= T; ++t) {
    const VectorXd& x = traj.x[t];
    CheckSize(x, dims.state_dim(), "x", t, player);
    cost += 0.5 * x.dot(game.Q[t][player] * x) + game.q[t][player].dot(x);
    if (t == T) break;
    CheckSize(traj.u[t], dims.control_dim(), "u", t, player);
    for (int j = 0; j < dims.num_players(); ++j) {
      const auto uj =
          traj.u[t].segment(dims.control_offset(j), dims.control_dim(j));
      cost += 0.5 * uj.dot(game.R[t][player][j] * uj) +
              game.r[t][player][j].dot(uj);
    }
  }
  return cost;
}

namespace {

void CheckBlockIndex(const Dims& dims, int i, int j) {
  if (i < 0 || i >= dims.num_players() || j < 0 || j >= dims.num_players()) {
    throw DimensionError("block index (" + std::to_string(i + 1) + "," +
                         std::to_string(j + 1) + ") out of range");
  }
}

}  // namespace

Eigen::Block<MatrixXd> BlockView(MatrixXd& P, const Dims& dims, int i, int j) {
  CheckBlockIndex(dims, i, j);
  CheckShape(P, dims.control_dim(), dims.state_dim(), "P", -1, -1);
  return P.block(dims.control_offset(i), dims.state_offset(j),
                 dims.control_dim(i), dims.state_dim(j));
}

Eigen::Block<const MatrixXd> BlockView(const MatrixXd& P, const Dims& dims,
                                       int i, int j) {
  CheckBlockIndex(dims, i, j);
  CheckShape(P, dims.control_dim(), dims.state_dim(), "P", -1, -1);
  return P.block(dims.control_offset(i), dims.state_offset(j),
                 dims.control_dim(i), dims.state_dim(j));
}

Eigen::Block<MatrixXd> ColumnBlock(MatrixXd& P_i, const Dims& dims, int j) {
  CheckBlockIndex(dims, 0, j);
  if (P_i.cols() != dims.state_dim()) {
    throw DimensionError("player gain must have m columns");
  }
  return P_i.block(0, dims.state_offset(j), P_i.rows(), dims.state_dim(j));
}

Eigen::Block<const MatrixXd> ColumnBlock(const MatrixXd& P_i, const Dims& dims,
                                         int j) {
  CheckBlockIndex(dims, 0, j);
  if (P_i.cols() != dims.state_dim()) {
    throw DimensionError("player gain must have m columns");
  }
  return P_i.block(0, dims.state_offset(j), P_i.rows(), dims.state_dim(j));
}

}  // namespace sparsegames
