///////////////////////////////////////////////////////////////////////////////
//
// Regularized backward recursion. At each stage the feedback matrix is the
// group-Lasso solution on the stage system (S_t, Y_t) built from the
// regularized value data; the feedforward term solves S_t alpha_t = Y_alpha_t
// exactly. The value data then follow from ValueStep with the installed
// policy, so the reported cost-to-go is the true cost of (P_hat, alpha_hat).
//
// Per stage the report also carries the deviation from the exact solution of
// the same stage system and the certificate
//
//     ||P_hat_t - S_t^{-1} Y_t||_F <= sum_ij lambda_ij / sigma_min(S_t)^2.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <sparsegames/errors.h>
#include <sparsegames/game.h>
#include <sparsegames/group_lasso.h>

#include <optional>
#include <vector>

namespace sparsegames {

// N x N table, true where block (i,j) is nonzero.
using BlockPattern = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct SparsityPattern {
  std::vector<BlockPattern> nonzero;   // per stage
  std::vector<Eigen::VectorXi> counts;  // per stage, row sums
};

// Marks block (i,j) nonzero iff ||P_t^i[j]||_F > threshold.
SparsityPattern ComputeSparsityPattern(const Dims& dims,
                                       const AffineStrategyProfile& strategies,
                                       double threshold = 0.0);

// Default thresholds for counting nonzero blocks of each backend's output.
// Conic output has already been snapped, so both reduce to an exact-zero test
// in practice.
inline constexpr double kBcdSparsityThreshold = 1e-9;
inline constexpr double kConicSparsityThreshold = 1e-6;

// sum lambda / sigma_min(S)^2; +infinity when sigma_min < 1e-12 sigma_max.
double Lemma1Bound(const MatrixXd& S, const RegularizationWeights& lambda);

struct SparseSolveOptions {
  GroupLassoBackend backend = GroupLassoBackend::kBcd;
  double tol = 1e-8;
  // Lets BCD add a tiny ridge to rank-deficient stage systems (iLQ only).
  bool allow_ridge = false;
};

struct SparseSolveReport {
  AffineStrategyProfile strategies;
  ValueProfile values;
  std::vector<BlockPattern> sparsity;  // exact-zero pattern of P_hat
  std::vector<double> delta_P;         // ||P_hat_t - S_t^{-1} Y_t||_F
  std::vector<double> lemma1_bound;
  std::vector<double> kkt;
  std::vector<double> sigma_min;  // of S_t
};

// Throws SingularSystemError (with the stage) when a stage system is
// singular and StageError wrapping any group-Lasso failure.
SparseSolveReport SolveRegularized(const LqGame& game,
                                   const RegularizationWeights& lambda,
                                   const SparseSolveOptions& options = {});

// One regularized backward step on stage t of `game`.
struct RegularizedStep {
  MatrixXd P_hat;
  VectorXd alpha;
  MatrixXd P_exact;
  ValueSlice value;
  double delta_P = 0.0;
  double lemma1_bound = 0.0;
  double kkt = 0.0;
  double sigma_min = 0.0;
};

RegularizedStep SolveRegularizedStage(const LqGame& game, int t,
                                      const ValueSlice& next,
                                      const RegularizationWeights& lambda,
                                      const SparseSolveOptions& options = {});

// Copies stage 1 of `game` over `horizon` stages, keeping its terminal cost.
LqGame TimeInvariantExtension(const LqGame& game, int horizon);

struct ConvergenceTrace {
  std::vector<double> delta_P;   // ||Delta P_t||_F per backward step
  std::vector<double> z_change;  // ||Z_t - Z_{t+1}||_F, all players stacked
  std::vector<double> z_error;   // ||Z_t - Z*||_F when Z* is supplied
};

struct FixedPointResult {
  std::vector<MatrixXd> Z;  // last iterate, per player
  MatrixXd P;               // last feedback matrix
  ConvergenceTrace trace;
  bool converged = false;
};

struct FixedPointOptions {
  int max_steps = 500;
  // Stop once z_change <= tol. With tol <= 0 every step runs and nothing is
  // thrown.
  double tol = 1e-10;
  SparseSolveOptions solve;
  std::optional<std::vector<MatrixXd>> reference;  // Z* for z_error
};

class RiccatiNotConverged : public MaxIterExceeded {
 public:
  explicit RiccatiNotConverged(FixedPointResult result);
  const FixedPointResult& result() const { return result_; }

 private:
  FixedPointResult result_;
};

// Iterates the (regularized) Riccati recursion backward on stage 1's data of
// `game`, starting from its terminal cost.
FixedPointResult InfiniteHorizonFixedPoint(const LqGame& game,
                                           const RegularizationWeights& lambda,
                                           const FixedPointOptions& options);

// ||Z - tau(Z)||_F for one unregularized Riccati step on stage 1's data.
double InfiniteHorizonResidual(const LqGame& game,
                               const std::vector<MatrixXd>& Z);

}  // namespace sparsegames
