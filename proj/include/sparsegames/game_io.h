// JSON encodings of games, group-Lasso problems, solver output and the
// configuration files read by the command-line tool.
//
// Game files:
//
//   {
//     "state_dims": [2, 2], "control_dims": [1, 1], "horizon": 20,
//     "time_invariant": true,
//     "A": [[...], ...],            // m x m
//     "B": [B1, B2],                // per player, m x n_i
//     "Q": [Q1, Q2], "q": [q1, q2], // per player; q optional
//     "R": [R1, R2],                // per player: R^ii, or a list of N
//                                   // matrices R^i1 ... R^iN
//     "r": [...],                   // optional, shaped like a list-form R
//     "terminal": {"Q": [...], "q": [...]},  // optional, default zero
//     "x0": [...]
//   }
//
// With "time_invariant": false the stage keys move into a "stages" array of
// `horizon` objects instead. Matrices are lists of rows; a bare number is a
// 1 x 1 matrix.

#pragma once

#include <sparsegames/game.h>
#include <sparsegames/group_lasso.h>
#include <sparsegames/harness.h>
#include <sparsegames/ilq_solver.h>
#include <sparsegames/lq_solver.h>
#include <sparsegames/scenarios.h>
#include <sparsegames/sparse_dp.h>

#include <json.hpp>

#include <string>

namespace sparsegames {

using Json = nlohmann::json;

// Parse errors and missing files throw ConfigError naming the path.
Json ReadJsonFile(const std::string& path);

Json ToJson(const MatrixXd& M);
Json ToJson(const VectorXd& v);
// `what` names the field in error messages.
MatrixXd MatrixFromJson(const Json& j, const std::string& what);
VectorXd VectorFromJson(const Json& j, const std::string& what);

// Throws DimensionError on inconsistent shapes and ConfigError on anything
// else wrong with the input, including non-PSD Q and non-PD R^ii.
LqGame LqGameFromJson(const Json& j);
// Uses the time-invariant form when every stage carries identical data.
Json LqGameToJson(const LqGame& game);

// {"state_dims", "control_dims", "S", "Y", "lambda"}, where lambda is a
// number (uniform off-diagonal weight) or an N x N matrix.
GroupLassoProblem GroupLassoProblemFromJson(const Json& j);

Json StrategiesToJson(const AffineStrategyProfile& strategies);
Json TrajectoryToJson(const Trajectory& traj);
// {"nonzero": [stage][i][j] in {0, 1}, "counts": [stage][i]}.
Json SparsityToJson(const std::vector<BlockPattern>& pattern);

// Overwrite the fields named in `j`; unknown keys throw ConfigError.
void ApplyOverrides(const Json& j, NavigationConfig* cfg);
void ApplyOverrides(const Json& j, FormationConfig* cfg);
void ApplyOverrides(const Json& j, IlqSettings* settings);
void ApplyOverrides(const Json& j, SweepSpec* spec);

}  // namespace sparsegames
