///////////////////////////////////////////////////////////////////////////////
//
// Core data model for N-player, discrete-time LQ games.
//
// Joint dynamics:   x_{t+1} = A_t x_t + sum_i B_t^i u_t^i
// Player i's cost:  J^i = sum_t [ 1/2 x'Q_t^i x + q_t^i'x
//                              + sum_j (1/2 u^j'R_t^ij u^j + r_t^ij'u^j) ]
//                       + 1/2 x_{T+1}'Q_{T+1}^i x_{T+1} + q_{T+1}^i'x_{T+1}
// Feedback policy:  u_t^i = -P_t^i x_t - alpha_t^i
//
// Time is written 1-based in comments (t = 1..T, terminal T+1). Storage is
// 0-based: stage t lives at index t-1, so control-indexed containers have T
// entries and state-indexed ones (Q, q, Z, eta, beta, x) have T+1.
//
// The joint state is the concatenation of per-player states; P_t stacks the
// per-player gains row-wise (n x m). Block (i,j) of P_t is the n_i x m_j
// slice mapping player j's state to player i's control.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sparsegames {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Returns (M + M')/2.
MatrixXd Symmetrize(const MatrixXd& M);

class Dims {
 public:
  Dims() = default;
  Dims(std::vector<int> state_dims, std::vector<int> control_dims,
       int horizon);

  int num_players() const { return static_cast<int>(state_dims_.size()); }
  int horizon() const { return horizon_; }

  // Joint dimensions m and n.
  int state_dim() const { return state_offsets_.back(); }
  int control_dim() const { return control_offsets_.back(); }

  int state_dim(int player) const { return state_dims_.at(player); }
  int control_dim(int player) const { return control_dims_.at(player); }
  int state_offset(int player) const { return state_offsets_.at(player); }
  int control_offset(int player) const { return control_offsets_.at(player); }

  const std::vector<int>& state_dims() const { return state_dims_; }
  const std::vector<int>& control_dims() const { return control_dims_; }

  Dims WithHorizon(int horizon) const;

  bool operator==(const Dims& other) const = default;

 private:
  std::vector<int> state_dims_;
  std::vector<int> control_dims_;
  std::vector<int> state_offsets_{0};
  std::vector<int> control_offsets_{0};
  int horizon_ = 0;
};

struct LqGame {
  Dims dims;
  std::vector<MatrixXd> A;                            // [t] m x m
  std::vector<std::vector<MatrixXd>> B;               // [t][i] m x n_i
  std::vector<std::vector<MatrixXd>> Q;               // [t][i] m x m, T+1
  std::vector<std::vector<VectorXd>> q;               // [t][i] m, T+1
  std::vector<std::vector<std::vector<MatrixXd>>> R;  // [t][i][j] n_j x n_j
  std::vector<std::vector<std::vector<VectorXd>>> r;  // [t][i][j] n_j
  VectorXd x0;

  // All-zero game of the given shape with A_t = I.
  static LqGame Zero(const Dims& dims);

  // Symmetrizes Q and R in place, then validates. Every constructor path
  // (JSON, scenarios, test generators) ends with this call.
  void Finalize();

  // Throws DimensionError / SparseGamesError on inconsistent shapes,
  // non-PSD Q (tolerance 1e-8) or non-PD R^ii (min eigenvalue <= 1e-10).
  void Validate() const;

  // [B_t^1 ... B_t^N], m x n.
  MatrixXd StackedB(int t) const;
};

struct AffineStrategyProfile {
  std::vector<MatrixXd> P;      // [t] n x m, stacked over players
  std::vector<VectorXd> alpha;  // [t] n

  static AffineStrategyProfile Zero(const Dims& dims);

  int horizon() const { return static_cast<int>(P.size()); }

  // Player i's n_i x m gain at stage index t.
  Eigen::Block<const MatrixXd> PlayerGain(const Dims& dims, int t,
                                          int player) const;
  Eigen::VectorBlock<const VectorXd> PlayerOffset(const Dims& dims, int t,
                                                  int player) const;
};

// Quadratic value data of all players at one stage:
// V_t^i(x) = 1/2 x'Z^i x + eta^i'x + beta^i.
struct ValueSlice {
  std::vector<MatrixXd> Z;
  std::vector<VectorXd> eta;
  std::vector<double> beta;
};

struct ValueProfile {
  std::vector<ValueSlice> stages;  // T+1

  // Allocates T+1 stages and sets the terminal condition Z = Q_{T+1},
  // eta = q_{T+1}, beta = 0.
  static ValueProfile WithTerminal(const LqGame& game);

  double CostToGo(int t, int player, const VectorXd& x) const;
};

struct Trajectory {
  std::vector<VectorXd> x;  // T+1 joint states
  std::vector<VectorXd> u;  // T joint controls
};

struct RegularizationWeights {
  MatrixXd lambda;

  RegularizationWeights() = default;
  // lambda_ii = 0, lambda_ij = off_diagonal for i != j.
  RegularizationWeights(int num_players, double off_diagonal);
  explicit RegularizationWeights(MatrixXd weights);

  int num_players() const { return static_cast<int>(lambda.rows()); }
  double Sum() const { return lambda.sum(); }
  bool IsZero() const { return (lambda.array() == 0.0).all(); }
};

// Exact closed-loop rollout of u_t = -P_t x_t - alpha_t through the linear
// dynamics, starting at game.x0.
Trajectory Rollout(const LqGame& game, const AffineStrategyProfile& strategies);

// J^i evaluated on a trajectory, including the terminal term.
double EvalCost(const LqGame& game, const Trajectory& traj, int player);

// Block (i,j) of a stacked n x m gain matrix. Writes go through to P.
Eigen::Block<MatrixXd> BlockView(MatrixXd& P, const Dims& dims, int i, int j);
Eigen::Block<const MatrixXd> BlockView(const MatrixXd& P, const Dims& dims,
                                       int i, int j);

// Player j's state columns of a single player's n_i x m gain.
Eigen::Block<MatrixXd> ColumnBlock(MatrixXd& P_i, const Dims& dims, int j);
Eigen::Block<const MatrixXd> ColumnBlock(const MatrixXd& P_i, const Dims& dims,
                                         int j);

}  // namespace sparsegames
