// Ready-made games: a multi-robot navigation game with unicycle players
// (non-LQ) and a three-player formation game with double-integrator players
// (LQ).

#pragma once

#include <sparsegames/game.h>
#include <sparsegames/ilq_solver.h>

#include <string>
#include <vector>

namespace sparsegames {

// (r - lo)^2 below lo, (r - hi)^2 above hi, zero in between.
double SoftConstraint(double r, double lo, double hi);
double SoftConstraintDerivative(double r, double lo, double hi);
double SoftConstraintSecondDerivative(double r, double lo, double hi);

// State [px, py, phi, v], control [omega, a]; explicit Euler.
VectorXd UnicycleStep(const VectorXd& x, const VectorXd& u, double dt);

// State [px, vx, py, vy], control [ax, ay]; exact zero-order hold.
VectorXd DoubleIntegratorStep(const VectorXd& x, const VectorXd& u, double dt);
MatrixXd DoubleIntegratorA(double dt);
MatrixXd DoubleIntegratorB(double dt);

struct NavigationConfig {
  int num_players = 4;
  int horizon = 150;
  double dt = 0.1;
  double d_min = 0.5;
  double t_active = 0.99 * 15.0;
  double goal_weight = 300.0;
  double heading_goal_weight = 300.0;
  double velocity_weight = 30.0;
  double soft_weight = 50.0;
  double proximity_weight = 50.0;
  double control_weight = 10.0;
  double v_min = -0.05;
  double v_max = 2.0;
  double omega_max = 3.14159265358979323846 / 18.0;
  double accel_max = 9.81;
  std::vector<VectorXd> initial;  // per player [px, py, phi, v]
  std::vector<VectorXd> goals;    // per player [px, py, phi, v]

  // Players on a circle of radius 5 heading toward the antipodal point,
  // with small angular offsets so they do not all reach the centre at once.
  static NavigationConfig Default(int num_players = 4);
  void Validate() const;
};

// Stage t (0-based) happens at time t * dt; the terminal state at T * dt.
// The goal term is active at times strictly after t_active, including the
// terminal state.
NonLqGame BuildNavigationGame(const NavigationConfig& cfg);

struct FormationConfig {
  int horizon = 250;
  double dt = 0.05;
  double tracking_weight = 1000.0;
  double control_weight = 1.0;
  double amplitude = 30.0;
  double width = 4.0;
  double height = 2.0;
  VectorXd x0 = VectorXd::Zero(12);

  void Validate() const;
  // p_goal at 1-based stage t.
  Eigen::Vector2d Target(int t) const;
  // Desired position of each player relative to player 1's: player 1 at the
  // apex, players 2 and 3 at the base corners behind it.
  std::vector<Eigen::Vector2d> Offsets() const;
};

struct FormationGame {
  LqGame game;
  // Constant terms of each player's expanded cost (which LqGame does not
  // carry); add them to EvalCost to get the cost as written.
  std::vector<double> cost_offset;

  double Cost(const Trajectory& traj, int player) const {
    return EvalCost(game, traj, player) + cost_offset.at(player);
  }
};

FormationGame BuildFormationGame(const FormationConfig& cfg);

// Names accepted by the CLI: navigation4, navigation8, formation3.
std::vector<std::string> ScenarioNames();

}  // namespace sparsegames
