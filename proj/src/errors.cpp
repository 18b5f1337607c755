#include <sparsegames/errors.h>

#include <sstream>

namespace sparsegames {
namespace {

std::string WithContext(const std::string& what, int stage, int player) {
  std::ostringstream out;
  out << what;
  if (stage >= 0) out << " (stage " << stage + 1 << ")";
  if (player >= 0) out << " (player " << player + 1 << ")";
  return out.str();
}

}  // namespace

DimensionError::DimensionError(const std::string& what, int stage, int player)
    : SparseGamesError(WithContext("dimension mismatch: " + what, stage,
                                   player)),
      stage_(stage),
      player_(player) {}

SingularSystemError::SingularSystemError(int stage, double sigma_min,
                                         double sigma_max)
    : SparseGamesError([&] {
        std::ostringstream out;
        out << "singular stage system at stage " << stage + 1
            << ": sigma_min = " << sigma_min << ", sigma_max = " << sigma_max
            << " (no unique stage Nash equilibrium)";
        return out.str();
      }()),
      stage_(stage),
      sigma_min_(sigma_min),
      sigma_max_(sigma_max) {}

MaxIterExceeded::MaxIterExceeded(const std::string& what, double last_residual)
    : SparseGamesError(what), last_residual_(last_residual) {}

SolverFailure::SolverFailure(const std::string& status)
    : SparseGamesError("solver failure: " + status), status_(status) {}

DivergedRollout::DivergedRollout(int stage)
    : SparseGamesError("non-finite state in rollout at stage " +
                       std::to_string(stage + 1)),
      stage_(stage) {}

StageError::StageError(int stage, const std::string& what)
    : SparseGamesError("stage " + std::to_string(stage + 1) + ": " + what),
      stage_(stage) {}

}  // namespace sparsegames
