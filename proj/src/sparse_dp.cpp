#include <sparsegames/lq_solver.h>
#include <sparsegames/sparse_dp.h>

#include <Eigen/SVD>
#include <glog/logging.h>

#include <cmath>
#include <limits>

namespace sparsegames {

namespace {

double StackedDistance(const std::vector<MatrixXd>& a,
                       const std::vector<MatrixXd>& b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]).squaredNorm();
  return std::sqrt(sum);
}

}  // namespace

SparsityPattern ComputeSparsityPattern(const Dims& dims,
                                       const AffineStrategyProfile& strategies,
                                       double threshold) {
  const int N = dims.num_players();
  SparsityPattern pattern;
  for (const MatrixXd& P : strategies.P) {
    BlockPattern nonzero(N, N);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        nonzero(i, j) = BlockView(P, dims, i, j).norm() > threshold;
      }
    }
    pattern.counts.push_back(nonzero.cast<int>().rowwise().sum().matrix());
    pattern.nonzero.push_back(std::move(nonzero));
  }
  return pattern;
}

double Lemma1Bound(const MatrixXd& S, const RegularizationWeights& lambda) {
  if (S.rows() != S.cols() || S.rows() == 0) {
    throw DimensionError("S must be square and nonempty");
  }
  const double total = lambda.Sum();
  if (total == 0.0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(S);
  const auto& sv = svd.singularValues();
  const double sigma_min = sv(sv.size() - 1);
  if (!(sigma_min >= kSingularThreshold * sv(0)) || sv(0) == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return total / (sigma_min * sigma_min);
}

RegularizedStep SolveRegularizedStage(const LqGame& game, int t,
                                      const ValueSlice& next,
                                      const RegularizationWeights& lambda,
                                      const SparseSolveOptions& options) {
  if (lambda.num_players() != game.dims.num_players()) {
    throw DimensionError("lambda must be N x N", t);
  }
  const StageSystem sys = AssembleStageSystem(game, t, next);
  StageSolution exact = SolveStage(sys, t);

  RegularizedStep step;
  step.sigma_min = exact.sigma_min;
  step.lemma1_bound =
      lambda.IsZero() ? 0.0
                      : lambda.Sum() / (exact.sigma_min * exact.sigma_min);
  if (lambda.IsZero()) {
    step.P_hat = exact.P;
  } else {
    GroupLassoProblem problem{sys.S, sys.Y, game.dims, lambda};
    try {
      if (options.backend == GroupLassoBackend::kBcd) {
        BcdOptions bcd;
        bcd.tol = options.tol;
        bcd.allow_ridge = options.allow_ridge;
        GroupLassoSolution solution = SolveBcd(problem, bcd);
        step.P_hat = std::move(solution.P_hat);
        step.kkt = solution.kkt_residual;
      } else {
        GroupLassoSolution solution = SolveConic(problem);
        step.P_hat = std::move(solution.P_hat);
        step.kkt = solution.kkt_residual;
      }
    } catch (const SparseGamesError& e) {
      throw StageError(t, e.what());
    }
  }
  step.delta_P = (step.P_hat - exact.P).norm();
  step.alpha = std::move(exact.alpha);
  step.P_exact = std::move(exact.P);
  step.value = ValueStep(game, t, step.P_hat, step.alpha, next);
  return step;
}

SparseSolveReport SolveRegularized(const LqGame& game,
                                   const RegularizationWeights& lambda,
                                   const SparseSolveOptions& options) {
  const Dims& dims = game.dims;
  const int T = dims.horizon();
  const int N = dims.num_players();
  SparseSolveReport report;
  report.strategies = AffineStrategyProfile::Zero(dims);
  report.values = ValueProfile::WithTerminal(game);
  report.sparsity.resize(T);
  report.delta_P.resize(T);
  report.lemma1_bound.resize(T);
  report.kkt.resize(T);
  report.sigma_min.resize(T);
  for (int t = T - 1; t >= 0; --t) {
    RegularizedStep step = SolveRegularizedStage(
        game, t, report.values.stages[t + 1], lambda, options);
    BlockPattern nonzero(N, N);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        nonzero(i, j) = !(BlockView(step.P_hat, dims, i, j).array() == 0.0)
                             .all();
      }
    }
    report.sparsity[t] = std::move(nonzero);
    report.delta_P[t] = step.delta_P;
    report.lemma1_bound[t] = step.lemma1_bound;
    report.kkt[t] = step.kkt;
    report.sigma_min[t] = step.sigma_min;
    if (step.delta_P > step.lemma1_bound + 1e-7) {
      LOG(WARNING) << "stage " << t + 1 << ": ||dP|| = " << step.delta_P
                   << " exceeds the certificate " << step.lemma1_bound;
    }
    report.values.stages[t] = std::move(step.value);
    report.strategies.P[t] = std::move(step.P_hat);
    report.strategies.alpha[t] = std::move(step.alpha);
  }
  return report;
}

LqGame TimeInvariantExtension(const LqGame& game, int horizon) {
  const Dims dims = game.dims.WithHorizon(horizon);
  const int T = game.dims.horizon();
  LqGame out = LqGame::Zero(dims);
  for (int t = 0; t < horizon; ++t) {
    out.A[t] = game.A[0];
    out.B[t] = game.B[0];
    out.R[t] = game.R[0];
    out.r[t] = game.r[0];
    out.Q[t] = game.Q[0];
    out.q[t] = game.q[0];
  }
  out.Q[horizon] = game.Q[T];
  out.q[horizon] = game.q[T];
  out.x0 = game.x0;
  return out;
}

RiccatiNotConverged::RiccatiNotConverged(FixedPointResult result)
    : MaxIterExceeded("Riccati recursion did not reach its fixed point",
                      result.trace.z_change.empty()
                          ? std::numeric_limits<double>::infinity()
                          : result.trace.z_change.back()),
      result_(std::move(result)) {}

FixedPointResult InfiniteHorizonFixedPoint(const LqGame& game,
                                           const RegularizationWeights& lambda,
                                           const FixedPointOptions& options) {
  if (options.max_steps < 1) throw ConfigError("max_steps must be positive");
  const int T = game.dims.horizon();
  FixedPointResult result;
  ValueSlice value;
  value.Z = game.Q[T];
  value.eta = game.q[T];
  value.beta.assign(game.dims.num_players(), 0.0);
  for (int step = 0; step < options.max_steps; ++step) {
    RegularizedStep next =
        SolveRegularizedStage(game, 0, value, lambda, options.solve);
    result.trace.delta_P.push_back(next.delta_P);
    result.trace.z_change.push_back(StackedDistance(next.value.Z, value.Z));
    if (options.reference) {
      result.trace.z_error.push_back(
          StackedDistance(next.value.Z, *options.reference));
    }
    value = std::move(next.value);
    result.P = std::move(next.P_hat);
    if (options.tol > 0.0 && result.trace.z_change.back() <= options.tol) {
      result.converged = true;
      break;
    }
  }
  result.Z = value.Z;
  if (options.tol > 0.0 && !result.converged) {
    throw RiccatiNotConverged(std::move(result));
  }
  return result;
}

double InfiniteHorizonResidual(const LqGame& game,
                               const std::vector<MatrixXd>& Z) {
  ValueSlice value;
  value.Z = Z;
  value.eta.assign(Z.size(), VectorXd::Zero(game.dims.state_dim()));
  value.beta.assign(Z.size(), 0.0);
  const StageSolution stage =
      SolveStage(AssembleStageSystem(game, 0, value), 0);
  const ValueSlice next = ValueStep(game, 0, stage.P, stage.alpha, value);
  return StackedDistance(next.Z, Z);
}

}  // namespace sparsegames
