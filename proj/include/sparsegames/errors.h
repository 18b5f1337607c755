// Exception hierarchy shared by all solvers. Every error carries enough
// context (stage, player, residual) for a caller to decide how to recover.

#pragma once

#include <stdexcept>
#include <string>

namespace sparsegames {

class SparseGamesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent matrix/vector shapes. `stage` and `player` are -1 when not
// applicable.
class DimensionError : public SparseGamesError {
 public:
  DimensionError(const std::string& what, int stage = -1, int player = -1);
  int stage() const { return stage_; }
  int player() const { return player_; }

 private:
  int stage_;
  int player_;
};

// The coupled stage system S_t is (numerically) singular, i.e. the stage game
// has no unique Nash equilibrium.
class SingularSystemError : public SparseGamesError {
 public:
  SingularSystemError(int stage, double sigma_min, double sigma_max);
  int stage() const { return stage_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }

 private:
  int stage_;
  double sigma_min_;
  double sigma_max_;
};

class MaxIterExceeded : public SparseGamesError {
 public:
  MaxIterExceeded(const std::string& what, double last_residual);
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

class NumericalBreakdown : public SparseGamesError {
 public:
  using SparseGamesError::SparseGamesError;
};

class SolverFailure : public SparseGamesError {
 public:
  SolverFailure(const std::string& status);
  const std::string& status() const { return status_; }

 private:
  std::string status_;
};

class DivergedRollout : public SparseGamesError {
 public:
  explicit DivergedRollout(int stage);
  int stage() const { return stage_; }

 private:
  int stage_;
};

class ConfigError : public SparseGamesError {
 public:
  using SparseGamesError::SparseGamesError;
};

// Wraps a lower-level failure with the backward-recursion stage it came from.
class StageError : public SparseGamesError {
 public:
  StageError(int stage, const std::string& what);
  int stage() const { return stage_; }

 private:
  int stage_;
};

}  // namespace sparsegames
