#include <sparsegames/errors.h>
#include <sparsegames/group_lasso.h>
#include <sparsegames/lq_solver.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace sparsegames {

std::string ToString(GroupLassoBackend backend) {
  return backend == GroupLassoBackend::kBcd ? "bcd" : "conic";
}

GroupLassoBackend ParseBackend(const std::string& name) {
  if (name == "bcd") return GroupLassoBackend::kBcd;
  if (name == "conic") return GroupLassoBackend::kConic;
  throw ConfigError("unknown group lasso backend '" + name +
                    "' (expected bcd or conic)");
}

void GroupLassoProblem::Validate() const {
  const int n = dims.control_dim();
  const int m = dims.state_dim();
  if (S.rows() != n || S.cols() != n) {
    throw DimensionError("S must be n x n");
  }
  if (Y.rows() != n || Y.cols() != m) {
    throw DimensionError("Y must be n x m");
  }
  if (lambda.num_players() != dims.num_players()) {
    throw DimensionError("lambda must be N x N");
  }
  if ((lambda.lambda.array() < 0.0).any()) {
    throw SparseGamesError("lambda must be nonnegative");
  }
}

double GroupLassoProblem::Penalty(const MatrixXd& P) const {
  double penalty = 0.0;
  const int N = dims.num_players();
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (lambda.lambda(i, j) > 0.0) {
        penalty += lambda.lambda(i, j) * BlockView(P, dims, i, j).norm();
      }
    }
  }
  return penalty;
}

double GroupLassoProblem::Objective(const MatrixXd& P) const {
  return 0.5 * (S * P - Y).squaredNorm() + Penalty(P);
}

MatrixXd BlockSoftThreshold(const MatrixXd& G, double kappa) {
  if (kappa < 0.0) throw SparseGamesError("kappa must be nonnegative");
  const double norm = G.norm();
  if (norm <= kappa) return MatrixXd::Zero(G.rows(), G.cols());
  return (1.0 - kappa / norm) * G;
}

double CertifyKkt(const GroupLassoProblem& problem, const MatrixXd& P_hat) {
  const Dims& dims = problem.dims;
  const MatrixXd G =
      problem.S.transpose() * (problem.S * P_hat - problem.Y);
  double worst = 0.0;
  for (int i = 0; i < dims.num_players(); ++i) {
    for (int j = 0; j < dims.num_players(); ++j) {
      const double weight = problem.lambda.lambda(i, j);
      const auto block = BlockView(P_hat, dims, i, j);
      const auto grad = BlockView(G, dims, i, j);
      const double block_norm = block.norm();
      double violation;
      if (block_norm > 0.0) {
        violation = (grad + (weight / block_norm) * block).norm();
      } else {
        violation = std::max(0.0, grad.norm() - weight);
      }
      worst = std::max(worst, violation);
    }
  }
  return worst;
}

double ZeroingWeight(const GroupLassoProblem& problem) {
  problem.Validate();
  const Dims& dims = problem.dims;
  const int N = dims.num_players();
  // Fit the unpenalized blocks of each column block by least squares with
  // every penalized block held at zero.
  MatrixXd P = MatrixXd::Zero(dims.control_dim(), dims.state_dim());
  for (int j = 0; j < N; ++j) {
    std::vector<int> rows;
    for (int i = 0; i < N; ++i) {
      if (problem.lambda.lambda(i, j) == 0.0) {
        for (int k = 0; k < dims.control_dim(i); ++k) {
          rows.push_back(dims.control_offset(i) + k);
        }
      }
    }
    if (rows.empty()) continue;
    MatrixXd S_free(problem.S.rows(), rows.size());
    for (size_t k = 0; k < rows.size(); ++k) {
      S_free.col(k) = problem.S.col(rows[k]);
    }
    const MatrixXd Y_j =
        problem.Y.middleCols(dims.state_offset(j), dims.state_dim(j));
    const MatrixXd X = S_free.colPivHouseholderQr().solve(Y_j);
    for (size_t k = 0; k < rows.size(); ++k) {
      P.block(rows[k], dims.state_offset(j), 1, dims.state_dim(j)) = X.row(k);
    }
  }
  const MatrixXd G = problem.S.transpose() * (problem.S * P - problem.Y);
  double weight = 0.0;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (problem.lambda.lambda(i, j) > 0.0) {
        weight = std::max(weight, BlockView(G, dims, i, j).norm());
      }
    }
  }
  return weight;
}

namespace {

// Eigendecomposition of one row block's normal matrix H_i = S_i' S_i.
struct BlockNormal {
  MatrixXd V;
  VectorXd d;
};

// Minimizes 1/2 tr(X'HX) + tr(X'G) + weight ||X||_F over X.
MatrixXd MinimizeBlock(const BlockNormal& H, const MatrixXd& G,
                       double weight) {
  const MatrixXd Gt = H.V.transpose() * G;
  if (weight == 0.0) {
    return -H.V * (H.d.cwiseInverse().asDiagonal() * Gt);
  }
  const double g_norm = Gt.norm();
  if (g_norm <= weight) return MatrixXd::Zero(G.rows(), G.cols());

  // X(mu) = -(H + mu I)^{-1} G with mu = weight / ||X(mu)||. Solve
  // phi(mu) = 1/||X(mu)|| - mu/weight = 0 by bracketed Newton.
  const VectorXd g2 = Gt.rowwise().squaredNorm();
  auto eval = [&](double mu, double* deriv) {
    const VectorXd inv = (H.d.array() + mu).inverse().matrix();
    const double s = (g2.array() * inv.array().square()).sum();
    const double ds = -2.0 * (g2.array() * inv.array().cube()).sum();
    const double root = std::sqrt(s);
    *deriv = -0.5 * ds / (s * root) - 1.0 / weight;
    return 1.0 / root - mu / weight;
  };
  double lo = 0.0;
  double hi = H.d.maxCoeff() * weight / (g_norm - weight);
  hi = hi * (1.0 + 1e-12) + std::numeric_limits<double>::min();
  double mu = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    double deriv;
    const double phi = eval(mu, &deriv);
    if (phi > 0.0) {
      lo = mu;
    } else {
      hi = mu;
    }
    if (phi == 0.0 || hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    double next = mu - phi / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - mu) <= 1e-16 * std::max(1.0, mu)) {
      mu = next;
      break;
    }
    mu = next;
  }
  const VectorXd inv = (H.d.array() + mu).inverse().matrix();
  return -H.V * (inv.asDiagonal() * Gt);
}

// Newton's method on the objective restricted to the current support
// (nonzero blocks plus every unpenalized block), where it is smooth. Returns
// false when the support changes or the step fails to decrease the objective.
bool PolishSupport(const GroupLassoProblem& problem, double ridge,
                   MatrixXd* P) {
  const Dims& dims = problem.dims;
  const int N = dims.num_players();
  struct Group {
    int row, col, rows, cols;
    double weight;
    int offset;  // first variable index
  };
  std::vector<Group> groups;
  int size = 0;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const double weight = problem.lambda.lambda(i, j);
      if (weight > 0.0 && BlockView(*P, dims, i, j).norm() == 0.0) continue;
      groups.push_back({dims.control_offset(i), dims.state_offset(j),
                        dims.control_dim(i), dims.state_dim(j), weight, size});
      size += dims.control_dim(i) * dims.state_dim(j);
    }
  }
  if (size == 0) return true;
  // Variable k of a group is entry (r, c) of its block, column-major.
  std::vector<int> var_row(size);
  std::vector<int> var_col(size);
  for (const Group& g : groups) {
    for (int c = 0; c < g.cols; ++c) {
      for (int r = 0; r < g.rows; ++r) {
        var_row[g.offset + c * g.rows + r] = g.row + r;
        var_col[g.offset + c * g.rows + r] = g.col + c;
      }
    }
  }
  MatrixXd StS = problem.S.transpose() * problem.S;
  StS.diagonal().array() += ridge;
  MatrixXd current = *P;
  double objective = problem.Objective(current);
  for (int iter = 0; iter < 50; ++iter) {
    const MatrixXd G =
        problem.S.transpose() * (problem.S * current - problem.Y) +
        ridge * current;
    VectorXd grad(size);
    MatrixXd hess = MatrixXd::Zero(size, size);
    for (int a = 0; a < size; ++a) {
      grad(a) = G(var_row[a], var_col[a]);
      for (int b = 0; b < size; ++b) {
        if (var_col[a] == var_col[b]) hess(a, b) = StS(var_row[a], var_row[b]);
      }
    }
    for (const Group& g : groups) {
      if (g.weight == 0.0) continue;
      const MatrixXd block = current.block(g.row, g.col, g.rows, g.cols);
      const VectorXd p = Eigen::Map<const VectorXd>(block.data(), block.size());
      const double norm = p.norm();
      const int len = static_cast<int>(p.size());
      grad.segment(g.offset, len) += g.weight * p / norm;
      hess.block(g.offset, g.offset, len, len) +=
          g.weight * (MatrixXd::Identity(len, len) / norm -
                      p * p.transpose() / (norm * norm * norm));
    }
    if (grad.norm() <= 1e-14 * (1.0 + G.norm())) break;
    const Eigen::LDLT<MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) return false;
    const VectorXd step = -ldlt.solve(grad);
    double eta = 1.0;
    MatrixXd trial;
    double trial_objective = objective;
    for (; eta > 1e-10; eta *= 0.5) {
      trial = current;
      for (int a = 0; a < size; ++a) {
        trial(var_row[a], var_col[a]) += eta * step(a);
      }
      trial_objective = problem.Objective(trial);
      if (trial_objective <= objective) break;
    }
    if (!(trial_objective <= objective)) break;
    const bool stalled = objective - trial_objective <=
                         1e-16 * std::max(1.0, std::abs(objective));
    current = std::move(trial);
    objective = trial_objective;
    if (stalled) break;
  }
  for (const Group& g : groups) {
    if (g.weight > 0.0 &&
        current.block(g.row, g.col, g.rows, g.cols).norm() == 0.0) {
      return false;
    }
  }
  *P = std::move(current);
  return true;
}

std::vector<std::pair<int, int>> SweepOrder(int N) {
  std::vector<std::pair<int, int>> order;
  for (int i = 0; i < N; ++i) order.emplace_back(i, i);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (i != j) order.emplace_back(i, j);
    }
  }
  return order;
}

}  // namespace

GroupLassoSolution SolveBcd(const GroupLassoProblem& problem,
                            const BcdOptions& options) {
  problem.Validate();
  const Dims& dims = problem.dims;
  const int N = dims.num_players();
  const MatrixXd& S = problem.S;

  double ridge = 0.0;
  {
    Eigen::JacobiSVD<MatrixXd> svd(S);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) >= kSingularThreshold * sv(0)) || sv(0) == 0.0) {
      if (!options.allow_ridge) {
        throw SingularSystemError(-1, sv(sv.size() - 1), sv(0));
      }
      LOG(WARNING) << "group lasso: rank-deficient S (sigma_min = "
                   << sv(sv.size() - 1) << "), adding ridge 1e-9";
      ridge = 1e-9;
    }
  }

  std::vector<BlockNormal> normals(N);
  for (int i = 0; i < N; ++i) {
    const auto Si = S.middleCols(dims.control_offset(i), dims.control_dim(i));
    MatrixXd H = Si.transpose() * Si;
    H.diagonal().array() += ridge;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Symmetrize(H));
    normals[i].V = eig.eigenvectors();
    normals[i].d = eig.eigenvalues();
  }

  MatrixXd P = MatrixXd::Zero(dims.control_dim(), dims.state_dim());
  MatrixXd residual = -problem.Y;  // S P - Y
  const auto order = SweepOrder(N);

  GroupLassoSolution solution;
  solution.backend = GroupLassoBackend::kBcd;
  double objective = problem.Objective(P);
  double kkt = CertifyKkt(problem, P);
  int sweep = 0;
  while (kkt > options.tol) {
    if (sweep >= options.max_iter) {
      throw MaxIterExceeded("block coordinate descent did not reach KKT "
                            "tolerance in " +
                                std::to_string(options.max_iter) + " sweeps",
                            kkt);
    }
    ++sweep;
    for (const auto& [i, j] : order) {
      const int row = dims.control_offset(i);
      const int ni = dims.control_dim(i);
      const int col = dims.state_offset(j);
      const int mj = dims.state_dim(j);
      const auto Si = S.middleCols(row, ni);
      const MatrixXd old = P.block(row, col, ni, mj);
      // Gradient of the smooth part at X = 0 with the other blocks fixed.
      const MatrixXd G =
          Si.transpose() * (residual.middleCols(col, mj) - Si * old);
      MatrixXd updated =
          MinimizeBlock(normals[i], G, problem.lambda.lambda(i, j));
      residual.middleCols(col, mj) += Si * (updated - old);
      P.block(row, col, ni, mj) = std::move(updated);
    }
    // Recompute the residual to keep incremental updates from drifting.
    residual = S * P - problem.Y;
    const double next_objective = problem.Objective(P);
    if (next_objective > objective + 1e-10 * std::max(1.0, std::abs(objective))) {
      throw NumericalBreakdown("block coordinate descent objective increased "
                               "from " +
                               std::to_string(objective) + " to " +
                               std::to_string(next_objective));
    }
    objective = next_objective;
    kkt = CertifyKkt(problem, P);
    // Sweeps converge linearly; once the support has settled a few Newton
    // steps on it finish the job.
    if (kkt > options.tol && sweep % 20 == 0) {
      MatrixXd polished = P;
      if (PolishSupport(problem, ridge, &polished)) {
        const double polished_kkt = CertifyKkt(problem, polished);
        if (polished_kkt < kkt && problem.Objective(polished) <= objective) {
          P = std::move(polished);
          residual = S * P - problem.Y;
          objective = problem.Objective(P);
          kkt = polished_kkt;
        }
      }
    }
  }
  {
    MatrixXd polished = P;
    if (PolishSupport(problem, ridge, &polished)) {
      const double polished_kkt = CertifyKkt(problem, polished);
      if (polished_kkt <= kkt && problem.Objective(polished) <= objective) {
        P = std::move(polished);
        objective = problem.Objective(P);
        kkt = polished_kkt;
      }
    }
  }
  solution.P_hat = std::move(P);
  solution.objective = objective;
  solution.kkt_residual = kkt;
  solution.iterations = sweep;
  return solution;
}

namespace {

// Penalized blocks carry an epigraph slack and a second-order-cone barrier;
// unpenalized blocks are free variables.
struct ConeBlock {
  int i;
  int j;
  double weight;
  std::vector<int> indices;  // positions in vec(P), column-major
};

}  // namespace

GroupLassoSolution SolveConic(const GroupLassoProblem& problem,
                              const ConicOptions& options) {
  problem.Validate();
  const Dims& dims = problem.dims;
  const int N = dims.num_players();
  const int n = dims.control_dim();
  const int m = dims.state_dim();
  const int nm = n * m;

  std::vector<ConeBlock> cones;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const double weight = problem.lambda.lambda(i, j);
      if (weight <= 0.0) continue;
      ConeBlock cone{i, j, weight, {}};
      for (int c = 0; c < dims.state_dim(j); ++c) {
        for (int r = 0; r < dims.control_dim(i); ++r) {
          cone.indices.push_back((dims.state_offset(j) + c) * n +
                                 dims.control_offset(i) + r);
        }
      }
      cones.push_back(std::move(cone));
    }
  }
  const int K = static_cast<int>(cones.size());
  const int size = nm + K;

  const MatrixXd StS = problem.S.transpose() * problem.S;
  const MatrixXd StY = problem.S.transpose() * problem.Y;
  const double y2 = problem.Y.squaredNorm();

  auto unpack = [&](const VectorXd& z) {
    return Eigen::Map<const MatrixXd>(z.data(), n, m);
  };
  // Smooth objective 1/2||SP - Y||^2 + sum w s.
  auto objective = [&](const VectorXd& z) {
    const auto P = unpack(z);
    double value = 0.5 * (P.transpose() * StS * P).trace() -
                   (P.array() * StY.array()).sum() + 0.5 * y2;
    for (int k = 0; k < K; ++k) value += cones[k].weight * z(nm + k);
    return value;
  };
  auto cone_gap = [&](const VectorXd& z, int k) {
    double p2 = 0.0;
    for (int idx : cones[k].indices) p2 += z(idx) * z(idx);
    const double s = z(nm + k);
    return std::make_pair(s * s - p2, s);
  };
  auto feasible = [&](const VectorXd& z) {
    for (int k = 0; k < K; ++k) {
      const auto [g, s] = cone_gap(z, k);
      if (!(g > 0.0 && s > 0.0)) return false;
    }
    return true;
  };
  auto barrier = [&](const VectorXd& z) {
    double value = 0.0;
    for (int k = 0; k < K; ++k) value -= std::log(cone_gap(z, k).first);
    return value;
  };

  // Start from the least-squares solution with comfortable slacks.
  VectorXd z = VectorXd::Zero(size);
  {
    const MatrixXd P0 = problem.S.colPivHouseholderQr().solve(problem.Y);
    Eigen::Map<MatrixXd>(z.data(), n, m) = P0;
    for (int k = 0; k < K; ++k) {
      double p2 = 0.0;
      for (int idx : cones[k].indices) p2 += z(idx) * z(idx);
      z(nm + k) = std::sqrt(p2) + 1.0;
    }
  }

  // Barrier weight: minimize f0 + barrier / t; duality gap <= 2K / t.
  double t = std::max(1.0, 2.0 * K / std::max(1.0, std::abs(objective(z))));
  const double mu = 8.0;
  int newton_steps = 0;
  while (true) {
    // Centering by damped Newton on f0 + barrier / t.
    for (int inner = 0;; ++inner) {
      if (newton_steps >= options.max_newton_steps) {
        throw SolverFailure("newton step limit reached at barrier weight " +
                            std::to_string(t));
      }
      VectorXd grad = VectorXd::Zero(size);
      MatrixXd hess = MatrixXd::Zero(size, size);
      {
        const auto P = unpack(z);
        Eigen::Map<MatrixXd>(grad.data(), n, m) = StS * P - StY;
        for (int c = 0; c < m; ++c) {
          hess.block(c * n, c * n, n, n) = StS;
        }
      }
      for (int k = 0; k < K; ++k) {
        const auto& idx = cones[k].indices;
        const auto [g, s] = cone_gap(z, k);
        grad(nm + k) += cones[k].weight;
        // d/du of -log(s^2 - |p|^2), u = (s, p).
        const int len = static_cast<int>(idx.size()) + 1;
        VectorXd dg(len);
        dg(0) = 2.0 * s;
        for (int a = 0; a < len - 1; ++a) dg(a + 1) = -2.0 * z(idx[a]);
        MatrixXd local = dg * dg.transpose() / (g * g);
        local(0, 0) -= 2.0 / g;
        for (int a = 1; a < len; ++a) local(a, a) += 2.0 / g;
        std::vector<int> pos(len);
        pos[0] = nm + k;
        for (int a = 1; a < len; ++a) pos[a] = idx[a - 1];
        for (int a = 0; a < len; ++a) {
          grad(pos[a]) -= dg(a) / g / t;
          for (int b = 0; b < len; ++b) {
            hess(pos[a], pos[b]) += local(a, b) / t;
          }
        }
      }
      const Eigen::LDLT<MatrixXd> ldlt(hess);
      if (ldlt.info() != Eigen::Success) {
        throw SolverFailure("barrier Hessian factorization failed");
      }
      const VectorXd step = -ldlt.solve(grad);
      const double decrement2 = -grad.dot(step);
      ++newton_steps;
      if (!(decrement2 >= 0.0) || !std::isfinite(decrement2)) {
        throw SolverFailure("non-descent Newton direction");
      }
      // Centering only needs to be accurate relative to the current gap.
      const double centering_tol =
          K > 0 ? 1e-3 * 2.0 * K / t
                : 1e-14 * std::max(1.0, std::abs(objective(z)));
      if (decrement2 * 0.5 <= centering_tol) break;
      // Backtracking line search, staying strictly inside the cones.
      const double current = objective(z) + barrier(z) / t;
      double step_size = 1.0;
      VectorXd candidate = z + step;
      while (!feasible(candidate) ||
             objective(candidate) + barrier(candidate) / t >
                 current - 0.25 * step_size * decrement2) {
        step_size *= 0.5;
        if (step_size < 1e-14) break;
        candidate = z + step_size * step;
      }
      if (step_size < 1e-14) break;  // stalled at numerical precision
      z = std::move(candidate);
    }
    const double gap = 2.0 * K / t;
    if (K == 0 || gap <= options.tol * std::max(1.0, std::abs(objective(z)))) {
      break;
    }
    t *= mu;
  }

  GroupLassoSolution solution;
  solution.backend = GroupLassoBackend::kConic;
  MatrixXd P = unpack(z);
  const double scale = kConicZeroThreshold * (1.0 + P.norm());
  for (const auto& cone : cones) {
    auto block = BlockView(P, dims, cone.i, cone.j);
    if (block.norm() < scale) block.setZero();
  }
  solution.objective = problem.Objective(P);
  solution.kkt_residual = CertifyKkt(problem, P);
  solution.iterations = newton_steps;
  solution.P_hat = std::move(P);
  return solution;
}

GroupLassoSolution SolveGroupLasso(const GroupLassoProblem& problem,
                                   GroupLassoBackend backend, double tol) {
  if (backend == GroupLassoBackend::kBcd) {
    BcdOptions options;
    options.tol = tol;
    return SolveBcd(problem, options);
  }
  return SolveConic(problem);
}

}  // namespace sparsegames
