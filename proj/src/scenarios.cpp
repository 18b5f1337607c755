#include <sparsegames/errors.h>
#include <sparsegames/scenarios.h>

#include <cmath>
#include <memory>

namespace sparsegames {

double SoftConstraint(double r, double lo, double hi) {
  if (r < lo) return (r - lo) * (r - lo);
  if (r > hi) return (r - hi) * (r - hi);
  return 0.0;
}

double SoftConstraintDerivative(double r, double lo, double hi) {
  if (r < lo) return 2.0 * (r - lo);
  if (r > hi) return 2.0 * (r - hi);
  return 0.0;
}

double SoftConstraintSecondDerivative(double r, double lo, double hi) {
  return r < lo || r > hi ? 2.0 : 0.0;
}

VectorXd UnicycleStep(const VectorXd& x, const VectorXd& u, double dt) {
  if (x.size() != 4 || u.size() != 2) {
    throw DimensionError("unicycle state is 4-D and control is 2-D");
  }
  VectorXd next(4);
  next << x(0) + dt * x(3) * std::cos(x(2)), x(1) + dt * x(3) * std::sin(x(2)),
      x(2) + dt * u(0), x(3) + dt * u(1);
  return next;
}

MatrixXd DoubleIntegratorA(double dt) {
  MatrixXd A = MatrixXd::Identity(4, 4);
  A(0, 1) = dt;
  A(2, 3) = dt;
  return A;
}

MatrixXd DoubleIntegratorB(double dt) {
  MatrixXd B = MatrixXd::Zero(4, 2);
  B(0, 0) = 0.5 * dt * dt;
  B(1, 0) = dt;
  B(2, 1) = 0.5 * dt * dt;
  B(3, 1) = dt;
  return B;
}

VectorXd DoubleIntegratorStep(const VectorXd& x, const VectorXd& u,
                              double dt) {
  if (x.size() != 4 || u.size() != 2) {
    throw DimensionError("double integrator state is 4-D and control is 2-D");
  }
  return DoubleIntegratorA(dt) * x + DoubleIntegratorB(dt) * u;
}

NavigationConfig NavigationConfig::Default(int num_players) {
  if (num_players < 2) throw ConfigError("navigation needs at least 2 players");
  NavigationConfig cfg;
  cfg.num_players = num_players;
  const double kPi = 3.14159265358979323846;
  const double kOffsets[] = {0.0, 0.15, -0.1, 0.2, -0.05, 0.1, -0.15, 0.05};
  for (int i = 0; i < num_players; ++i) {
    const double theta = 2.0 * kPi * i / num_players + kOffsets[i % 8];
    const double heading = theta + kPi;
    VectorXd start(4);
    start << 5.0 * std::cos(theta), 5.0 * std::sin(theta), heading, 0.0;
    VectorXd goal(4);
    goal << -start(0), -start(1), heading, 0.0;
    cfg.initial.push_back(start);
    cfg.goals.push_back(goal);
  }
  return cfg;
}

void NavigationConfig::Validate() const {
  if (num_players < 1) throw ConfigError("num_players must be >= 1");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(d_min >= 0.0)) throw ConfigError("d_min must be nonnegative");
  if (!(v_min <= v_max) || !(omega_max >= 0.0) || !(accel_max >= 0.0)) {
    throw ConfigError("soft constraint bounds must satisfy min <= max");
  }
  for (double w : {goal_weight, heading_goal_weight, velocity_weight,
                   soft_weight, proximity_weight, control_weight}) {
    if (!(w >= 0.0)) throw ConfigError("cost weights must be nonnegative");
  }
  if (static_cast<int>(initial.size()) != num_players ||
      static_cast<int>(goals.size()) != num_players) {
    throw ConfigError("need one initial state and one goal per player");
  }
  for (int i = 0; i < num_players; ++i) {
    if (initial[i].size() != 4 || goals[i].size() != 4) {
      throw ConfigError("navigation states are [px, py, phi, v]");
    }
  }
}

namespace {

struct NavigationModel {
  NavigationConfig cfg;

  bool GoalActive(int t) const { return t * cfg.dt > cfg.t_active; }

  // State-only part of player i's running cost, with derivatives added into
  // (dx, dxx) when they are non-null.
  double StateCost(int i, const VectorXd& x, bool goal_active, VectorXd* dx,
                   MatrixXd* dxx) const {
    const int s = 4 * i;
    double cost = 0.0;
    if (goal_active) {
      const VectorXd e = x.segment(s, 4) - cfg.goals[i];
      const double w[4] = {cfg.goal_weight, cfg.goal_weight,
                           cfg.heading_goal_weight, 0.0};
      for (int k = 0; k < 4; ++k) {
        cost += 0.5 * w[k] * e(k) * e(k);
        if (dx) {
          (*dx)(s + k) += w[k] * e(k);
          (*dxx)(s + k, s + k) += w[k];
        }
      }
    }
    const double v = x(s + 3);
    cost += 0.5 * cfg.velocity_weight * v * v +
            cfg.soft_weight * SoftConstraint(v, cfg.v_min, cfg.v_max);
    if (dx) {
      (*dx)(s + 3) += cfg.velocity_weight * v +
                      cfg.soft_weight *
                          SoftConstraintDerivative(v, cfg.v_min, cfg.v_max);
      (*dxx)(s + 3, s + 3) +=
          cfg.velocity_weight +
          cfg.soft_weight *
              SoftConstraintSecondDerivative(v, cfg.v_min, cfg.v_max);
    }
    for (int j = 0; j < cfg.num_players; ++j) {
      if (j == i) continue;
      const int o = 4 * j;
      const Eigen::Vector2d delta(x(s) - x(o), x(s + 1) - x(o + 1));
      const double d = std::max(delta.norm(), 1e-6);
      const double gap = cfg.d_min - d;
      if (gap <= 0.0) continue;
      cost += cfg.proximity_weight * gap * gap;
      if (dx) {
        const Eigen::Vector2d g = -2.0 * cfg.proximity_weight * gap * delta / d;
        const Eigen::Matrix2d outer = delta * delta.transpose() / (d * d);
        const Eigen::Matrix2d H =
            2.0 * cfg.proximity_weight *
            (outer - gap * (Eigen::Matrix2d::Identity() - outer) / d);
        dx->segment(s, 2) += g;
        dx->segment(o, 2) -= g;
        dxx->block(s, s, 2, 2) += H;
        dxx->block(o, o, 2, 2) += H;
        dxx->block(s, o, 2, 2) -= H;
        dxx->block(o, s, 2, 2) -= H;
      }
    }
    return cost;
  }

  double ControlCost(int i, const VectorXd& u, VectorXd* du,
                     MatrixXd* duu) const {
    const int c = 2 * i;
    const double omega = u(c);
    const double a = u(c + 1);
    double cost = 0.5 * cfg.control_weight * (omega * omega + a * a) +
                  cfg.soft_weight * (SoftConstraint(omega, -cfg.omega_max,
                                                    cfg.omega_max) +
                                     SoftConstraint(a, -cfg.accel_max,
                                                    cfg.accel_max));
    if (du) {
      (*du)(c) += cfg.control_weight * omega +
                  cfg.soft_weight * SoftConstraintDerivative(
                                        omega, -cfg.omega_max, cfg.omega_max);
      (*du)(c + 1) += cfg.control_weight * a +
                      cfg.soft_weight * SoftConstraintDerivative(
                                            a, -cfg.accel_max, cfg.accel_max);
      (*duu)(c, c) += cfg.control_weight +
                      cfg.soft_weight * SoftConstraintSecondDerivative(
                                            omega, -cfg.omega_max,
                                            cfg.omega_max);
      (*duu)(c + 1, c + 1) +=
          cfg.control_weight +
          cfg.soft_weight * SoftConstraintSecondDerivative(a, -cfg.accel_max,
                                                           cfg.accel_max);
    }
    return cost;
  }
};

}  // namespace

NonLqGame BuildNavigationGame(const NavigationConfig& cfg) {
  cfg.Validate();
  const int N = cfg.num_players;
  NonLqGame game;
  game.dims = Dims(std::vector<int>(N, 4), std::vector<int>(N, 2),
                   cfg.horizon);
  game.x0.resize(4 * N);
  for (int i = 0; i < N; ++i) game.x0.segment(4 * i, 4) = cfg.initial[i];

  auto model = std::make_shared<const NavigationModel>(NavigationModel{cfg});
  const double dt = cfg.dt;
  game.dynamics = [N, dt](int, const VectorXd& x, const VectorXd& u) {
    VectorXd next(4 * N);
    for (int i = 0; i < N; ++i) {
      next.segment(4 * i, 4) =
          UnicycleStep(x.segment(4 * i, 4), u.segment(2 * i, 2), dt);
    }
    return next;
  };
  game.dynamics_jacobian = [N, dt](int, const VectorXd& x, const VectorXd&) {
    DynamicsJacobian jac{MatrixXd::Identity(4 * N, 4 * N),
                         MatrixXd::Zero(4 * N, 2 * N)};
    for (int i = 0; i < N; ++i) {
      const int s = 4 * i;
      const double phi = x(s + 2);
      const double v = x(s + 3);
      jac.A(s, s + 2) = -dt * v * std::sin(phi);
      jac.A(s, s + 3) = dt * std::cos(phi);
      jac.A(s + 1, s + 2) = dt * v * std::cos(phi);
      jac.A(s + 1, s + 3) = dt * std::sin(phi);
      jac.B(s + 2, 2 * i) = dt;
      jac.B(s + 3, 2 * i + 1) = dt;
    }
    return jac;
  };
  game.stage_cost = [model](int t, int i, const VectorXd& x,
                            const VectorXd& u) {
    return model->StateCost(i, x, model->GoalActive(t), nullptr, nullptr) +
           model->ControlCost(i, u, nullptr, nullptr);
  };
  game.stage_cost_expansion = [model, N](int t, int i, const VectorXd& x,
                                         const VectorXd& u) {
    CostExpansion e;
    e.dx = VectorXd::Zero(4 * N);
    e.dxx = MatrixXd::Zero(4 * N, 4 * N);
    e.du = VectorXd::Zero(2 * N);
    e.duu = MatrixXd::Zero(2 * N, 2 * N);
    e.value = model->StateCost(i, x, model->GoalActive(t), &e.dx, &e.dxx) +
              model->ControlCost(i, u, &e.du, &e.duu);
    return e;
  };
  const int T = cfg.horizon;
  game.terminal_cost = [model, T](int i, const VectorXd& x) {
    return model->StateCost(i, x, model->GoalActive(T), nullptr, nullptr);
  };
  game.terminal_cost_expansion = [model, N, T](int i, const VectorXd& x) {
    CostExpansion e;
    e.dx = VectorXd::Zero(4 * N);
    e.dxx = MatrixXd::Zero(4 * N, 4 * N);
    e.value = model->StateCost(i, x, model->GoalActive(T), &e.dx, &e.dxx);
    return e;
  };
  return game;
}

void FormationConfig::Validate() const {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(tracking_weight >= 0.0)) {
    throw ConfigError("tracking weight must be nonnegative");
  }
  if (!(control_weight > 0.0)) {
    throw ConfigError("control weight must be positive");
  }
  if (!(width >= 0.0 && height >= 0.0)) {
    throw ConfigError("formation width and height must be nonnegative");
  }
  if (x0.size() != 12) throw ConfigError("formation x0 must have 12 entries");
}

Eigen::Vector2d FormationConfig::Target(int t) const {
  return {amplitude * std::cos(t * dt), amplitude * std::sin(3.0 * t * dt)};
}

std::vector<Eigen::Vector2d> FormationConfig::Offsets() const {
  return {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(-0.5 * width, -height),
          Eigen::Vector2d(0.5 * width, -height)};
}

FormationGame BuildFormationGame(const FormationConfig& cfg) {
  cfg.Validate();
  constexpr int N = 3;
  const int T = cfg.horizon;
  FormationGame out;
  out.game = LqGame::Zero(Dims({4, 4, 4}, {2, 2, 2}, T));
  out.cost_offset.assign(N, 0.0);
  LqGame& game = out.game;
  const double w = cfg.tracking_weight;
  const auto offsets = cfg.Offsets();
  for (int t = 0; t < T; ++t) {
    game.A[t] = MatrixXd::Zero(12, 12);
    for (int i = 0; i < N; ++i) {
      game.A[t].block(4 * i, 4 * i, 4, 4) = DoubleIntegratorA(cfg.dt);
      game.B[t][i] = MatrixXd::Zero(12, 2);
      game.B[t][i].middleRows(4 * i, 4) = DoubleIntegratorB(cfg.dt);
      game.R[t][i][i] = cfg.control_weight * MatrixXd::Identity(2, 2);
    }
  }
  for (int t = 0; t < T; ++t) {
    // Player 1 tracks the target; positions sit at offsets 0 and 2 of each
    // player's state block.
    const Eigen::Vector2d goal = cfg.Target(t + 1);
    for (int axis = 0; axis < 2; ++axis) {
      game.Q[t][0](2 * axis, 2 * axis) = w;
      game.q[t][0](2 * axis) = -w * goal(axis);
    }
    out.cost_offset[0] += 0.5 * w * goal.squaredNorm();

    // Players 2 and 3: residual p^i - p^j + (c^j - c^i) for each j != i.
    for (int i = 1; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        const Eigen::Vector2d d = offsets[j] - offsets[i];
        for (int axis = 0; axis < 2; ++axis) {
          const int pi = 4 * i + 2 * axis;
          const int pj = 4 * j + 2 * axis;
          game.Q[t][i](pi, pi) += w;
          game.Q[t][i](pj, pj) += w;
          game.Q[t][i](pi, pj) -= w;
          game.Q[t][i](pj, pi) -= w;
          game.q[t][i](pi) += w * d(axis);
          game.q[t][i](pj) -= w * d(axis);
        }
        out.cost_offset[i] += 0.5 * w * d.squaredNorm();
      }
    }
  }
  game.x0 = cfg.x0;
  game.Finalize();
  return out;
}

std::vector<std::string> ScenarioNames() {
  return {"navigation4", "navigation8", "formation3"};
}

}  // namespace sparsegames
