#include <sparsegames/game_io.h>

#include <fstream>
#include <set>
#include <sstream>

namespace sparsegames {

namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

const Json& Field(const Json& j, const std::string& key) {
  Require(j.is_object() && j.contains(key), "missing field \"" + key + "\"");
  return j.at(key);
}

std::vector<int> IntList(const Json& j, const std::string& what) {
  Require(j.is_array(), what + " must be a list of integers");
  std::vector<int> out;
  for (const Json& v : j) {
    Require(v.is_number_integer(), what + " must be a list of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

double Number(const Json& j, const std::string& what) {
  Require(j.is_number(), what + " must be a number");
  return j.get<double>();
}

void CheckShape(const MatrixXd& M, int rows, int cols,
                const std::string& what) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream msg;
    msg << what << " is " << M.rows() << "x" << M.cols() << ", expected "
        << rows << "x" << cols;
    throw DimensionError(msg.str());
  }
}

std::vector<Json> PerPlayer(const Json& j, int N, const std::string& what) {
  Require(j.is_array() && static_cast<int>(j.size()) == N,
          what + " needs one entry per player");
  return std::vector<Json>(j.begin(), j.end());
}

// True for a number or a list whose entries are numbers or lists of numbers.
bool IsMatrixLiteral(const Json& j) {
  if (j.is_number()) return true;
  if (!j.is_array() || j.empty()) return false;
  return j.front().is_number() ||
         (j.front().is_array() &&
          (j.front().empty() || j.front().front().is_number()));
}

struct StageData {
  MatrixXd A;
  std::vector<MatrixXd> B;
  std::vector<MatrixXd> Q;
  std::vector<VectorXd> q;
  std::vector<std::vector<MatrixXd>> R;
  std::vector<std::vector<VectorXd>> r;
};

StageData ParseStage(const Json& j, const Dims& dims, const std::string& at) {
  const int N = dims.num_players();
  const int m = dims.state_dim();
  StageData s;
  s.A = MatrixFromJson(Field(j, "A"), at + "A");
  CheckShape(s.A, m, m, at + "A");
  const std::vector<Json> B = PerPlayer(Field(j, "B"), N, at + "B");
  const std::vector<Json> Q = PerPlayer(Field(j, "Q"), N, at + "Q");
  const std::vector<Json> R = PerPlayer(Field(j, "R"), N, at + "R");
  s.q.assign(N, VectorXd::Zero(m));
  s.R.assign(N, {});
  s.r.assign(N, {});
  for (int i = 0; i < N; ++i) {
    const std::string p = "[" + std::to_string(i + 1) + "]";
    s.B.push_back(MatrixFromJson(B[i], at + "B" + p));
    CheckShape(s.B[i], m, dims.control_dim(i), at + "B" + p);
    s.Q.push_back(MatrixFromJson(Q[i], at + "Q" + p));
    CheckShape(s.Q[i], m, m, at + "Q" + p);
    for (int k = 0; k < N; ++k) {
      s.R[i].push_back(MatrixXd::Zero(dims.control_dim(k), dims.control_dim(k)));
      s.r[i].push_back(VectorXd::Zero(dims.control_dim(k)));
    }
    if (IsMatrixLiteral(R[i])) {
      s.R[i][i] = MatrixFromJson(R[i], at + "R" + p);
    } else {
      const std::vector<Json> row = PerPlayer(R[i], N, at + "R" + p);
      for (int k = 0; k < N; ++k) {
        s.R[i][k] = MatrixFromJson(row[k], at + "R" + p);
      }
    }
    for (int k = 0; k < N; ++k) {
      CheckShape(s.R[i][k], dims.control_dim(k), dims.control_dim(k),
                 at + "R" + p);
    }
  }
  if (j.contains("q")) {
    const std::vector<Json> q = PerPlayer(j.at("q"), N, at + "q");
    for (int i = 0; i < N; ++i) {
      s.q[i] = VectorFromJson(q[i], at + "q");
      CheckShape(s.q[i], m, 1, at + "q");
    }
  }
  if (j.contains("r")) {
    const std::vector<Json> r = PerPlayer(j.at("r"), N, at + "r");
    for (int i = 0; i < N; ++i) {
      const std::vector<Json> row = PerPlayer(r[i], N, at + "r");
      for (int k = 0; k < N; ++k) {
        s.r[i][k] = VectorFromJson(row[k], at + "r");
        CheckShape(s.r[i][k], dims.control_dim(k), 1, at + "r");
      }
    }
  }
  return s;
}

void Install(const StageData& s, int t, LqGame* game) {
  game->A[t] = s.A;
  game->B[t] = s.B;
  game->Q[t] = s.Q;
  game->q[t] = s.q;
  game->R[t] = s.R;
  game->r[t] = s.r;
}

Json StageToJson(const LqGame& game, int t) {
  const int N = game.dims.num_players();
  Json j;
  j["A"] = ToJson(game.A[t]);
  for (int i = 0; i < N; ++i) {
    j["B"].push_back(ToJson(game.B[t][i]));
    j["Q"].push_back(ToJson(game.Q[t][i]));
    j["q"].push_back(ToJson(game.q[t][i]));
    Json R = Json::array();
    Json r = Json::array();
    for (int k = 0; k < N; ++k) {
      R.push_back(ToJson(game.R[t][i][k]));
      r.push_back(ToJson(game.r[t][i][k]));
    }
    j["R"].push_back(R);
    j["r"].push_back(r);
  }
  return j;
}

bool SameStage(const LqGame& game, int a, int b) {
  const int N = game.dims.num_players();
  if (game.A[a] != game.A[b]) return false;
  for (int i = 0; i < N; ++i) {
    if (game.B[a][i] != game.B[b][i] || game.Q[a][i] != game.Q[b][i] ||
        game.q[a][i] != game.q[b][i]) {
      return false;
    }
    for (int k = 0; k < N; ++k) {
      if (game.R[a][i][k] != game.R[b][i][k] ||
          game.r[a][i][k] != game.r[b][i][k]) {
        return false;
      }
    }
  }
  return true;
}

// Rejects keys outside `known`.
void CheckKeys(const Json& j, const std::set<std::string>& known,
               const std::string& what) {
  Require(j.is_object(), what + " overrides must be an object");
  for (const auto& [key, value] : j.items()) {
    Require(known.count(key) > 0, "unknown " + what + " field \"" + key + "\"");
  }
}

template <typename T>
void Set(const Json& j, const std::string& key, T* field) {
  if (!j.contains(key)) return;
  try {
    *field = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("field \"" + key + "\" has the wrong type");
  }
}

std::vector<VectorXd> VectorList(const Json& j, const std::string& what) {
  Require(j.is_array(), what + " must be a list");
  std::vector<VectorXd> out;
  for (const Json& v : j) out.push_back(VectorFromJson(v, what));
  return out;
}

}  // namespace

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json ToJson(const MatrixXd& M) {
  Json rows = Json::array();
  for (int r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

Json ToJson(const VectorXd& v) {
  Json out = Json::array();
  for (int k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

MatrixXd MatrixFromJson(const Json& j, const std::string& what) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  Require(j.is_array(), what + " must be a list of rows");
  if (j.empty()) return MatrixXd(0, 0);
  const size_t cols = j.front().is_array() ? j.front().size() : 0;
  MatrixXd M(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    Require(j[r].is_array() && j[r].size() == cols,
            what + " rows must be lists of equal length");
    for (size_t c = 0; c < cols; ++c) M(r, c) = Number(j[r][c], what);
  }
  return M;
}

VectorXd VectorFromJson(const Json& j, const std::string& what) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  Require(j.is_array(), what + " must be a list of numbers");
  VectorXd v(j.size());
  for (size_t k = 0; k < j.size(); ++k) v(k) = Number(j[k], what);
  return v;
}

LqGame LqGameFromJson(const Json& j) {
  Require(j.is_object(), "a game must be a JSON object");
  const Json& h = Field(j, "horizon");
  Require(h.is_number_integer(), "horizon must be an integer");
  const int horizon = h.get<int>();
  Require(horizon >= 1, "horizon must be >= 1");
  const std::vector<int> state_dims =
      IntList(Field(j, "state_dims"), "state_dims");
  const std::vector<int> control_dims =
      IntList(Field(j, "control_dims"), "control_dims");
  Require(!state_dims.empty() && state_dims.size() == control_dims.size(),
          "state_dims and control_dims need one entry per player");
  for (size_t i = 0; i < state_dims.size(); ++i) {
    Require(state_dims[i] >= 1 && control_dims[i] >= 1,
            "player dimensions must be positive");
  }
  const Dims dims(state_dims, control_dims, horizon);
  const int N = dims.num_players();
  const int m = dims.state_dim();

  LqGame game = LqGame::Zero(dims);
  bool time_invariant = false;
  Set(j, "time_invariant", &time_invariant);
  if (time_invariant) {
    const StageData s = ParseStage(j, dims, "");
    for (int t = 0; t < horizon; ++t) Install(s, t, &game);
  } else {
    const Json& stages = Field(j, "stages");
    Require(stages.is_array() && static_cast<int>(stages.size()) == horizon,
            "\"stages\" must list one entry per stage");
    for (int t = 0; t < horizon; ++t) {
      Install(ParseStage(stages[t], dims,
                         "stages[" + std::to_string(t + 1) + "]."),
              t, &game);
    }
  }
  if (j.contains("terminal")) {
    const Json& terminal = j.at("terminal");
    if (terminal.contains("Q")) {
      const std::vector<Json> Q = PerPlayer(terminal.at("Q"), N, "terminal.Q");
      for (int i = 0; i < N; ++i) {
        game.Q[horizon][i] = MatrixFromJson(Q[i], "terminal.Q");
        CheckShape(game.Q[horizon][i], m, m, "terminal.Q");
      }
    }
    if (terminal.contains("q")) {
      const std::vector<Json> q = PerPlayer(terminal.at("q"), N, "terminal.q");
      for (int i = 0; i < N; ++i) {
        game.q[horizon][i] = VectorFromJson(q[i], "terminal.q");
        CheckShape(game.q[horizon][i], m, 1, "terminal.q");
      }
    }
  }
  game.x0 = VectorFromJson(Field(j, "x0"), "x0");
  CheckShape(game.x0, m, 1, "x0");
  try {
    game.Finalize();
  } catch (const DimensionError&) {
    throw;
  } catch (const SparseGamesError& e) {
    throw ConfigError(e.what());
  }
  return game;
}

Json LqGameToJson(const LqGame& game) {
  const int T = game.dims.horizon();
  const int N = game.dims.num_players();
  Json j;
  j["state_dims"] = game.dims.state_dims();
  j["control_dims"] = game.dims.control_dims();
  j["horizon"] = T;
  bool invariant = true;
  for (int t = 1; t < T && invariant; ++t) invariant = SameStage(game, 0, t);
  j["time_invariant"] = invariant;
  if (invariant) {
    j.update(StageToJson(game, 0));
  } else {
    for (int t = 0; t < T; ++t) j["stages"].push_back(StageToJson(game, t));
  }
  for (int i = 0; i < N; ++i) {
    j["terminal"]["Q"].push_back(ToJson(game.Q[T][i]));
    j["terminal"]["q"].push_back(ToJson(game.q[T][i]));
  }
  j["x0"] = ToJson(game.x0);
  return j;
}

GroupLassoProblem GroupLassoProblemFromJson(const Json& j) {
  Require(j.is_object(), "a group-Lasso problem must be a JSON object");
  const std::vector<int> state_dims =
      IntList(Field(j, "state_dims"), "state_dims");
  const std::vector<int> control_dims =
      IntList(Field(j, "control_dims"), "control_dims");
  Require(!state_dims.empty() && state_dims.size() == control_dims.size(),
          "state_dims and control_dims need one entry per player");
  GroupLassoProblem problem;
  problem.dims = Dims(state_dims, control_dims, 1);
  problem.S = MatrixFromJson(Field(j, "S"), "S");
  problem.Y = MatrixFromJson(Field(j, "Y"), "Y");
  const Json& lambda = Field(j, "lambda");
  if (lambda.is_number()) {
    problem.lambda = RegularizationWeights(problem.dims.num_players(),
                                           lambda.get<double>());
  } else {
    problem.lambda = RegularizationWeights(MatrixFromJson(lambda, "lambda"));
  }
  problem.Validate();
  return problem;
}

Json StrategiesToJson(const AffineStrategyProfile& strategies) {
  Json j;
  j["P"] = Json::array();
  j["alpha"] = Json::array();
  for (int t = 0; t < strategies.horizon(); ++t) {
    j["P"].push_back(ToJson(strategies.P[t]));
    j["alpha"].push_back(ToJson(strategies.alpha[t]));
  }
  return j;
}

Json TrajectoryToJson(const Trajectory& traj) {
  Json j;
  j["x"] = Json::array();
  j["u"] = Json::array();
  for (const VectorXd& x : traj.x) j["x"].push_back(ToJson(x));
  for (const VectorXd& u : traj.u) j["u"].push_back(ToJson(u));
  return j;
}

Json SparsityToJson(const std::vector<BlockPattern>& pattern) {
  Json j;
  j["nonzero"] = Json::array();
  j["counts"] = Json::array();
  for (const BlockPattern& stage : pattern) {
    Json rows = Json::array();
    Json counts = Json::array();
    for (int i = 0; i < stage.rows(); ++i) {
      Json row = Json::array();
      int count = 0;
      for (int k = 0; k < stage.cols(); ++k) {
        row.push_back(stage(i, k) ? 1 : 0);
        count += stage(i, k) ? 1 : 0;
      }
      rows.push_back(row);
      counts.push_back(count);
    }
    j["nonzero"].push_back(rows);
    j["counts"].push_back(counts);
  }
  return j;
}

void ApplyOverrides(const Json& j, NavigationConfig* cfg) {
  CheckKeys(j,
            {"num_players", "horizon", "dt", "d_min", "t_active",
             "goal_weight", "heading_goal_weight", "velocity_weight",
             "soft_weight", "proximity_weight", "control_weight", "v_min",
             "v_max", "omega_max", "accel_max", "initial", "goals"},
            "navigation");
  if (j.contains("num_players")) {
    int n = 0;
    Set(j, "num_players", &n);
    Require(n >= 1, "num_players must be >= 1");
    if (n != cfg->num_players) *cfg = NavigationConfig::Default(n);
  }
  Set(j, "horizon", &cfg->horizon);
  Set(j, "dt", &cfg->dt);
  Set(j, "d_min", &cfg->d_min);
  Set(j, "t_active", &cfg->t_active);
  Set(j, "goal_weight", &cfg->goal_weight);
  Set(j, "heading_goal_weight", &cfg->heading_goal_weight);
  Set(j, "velocity_weight", &cfg->velocity_weight);
  Set(j, "soft_weight", &cfg->soft_weight);
  Set(j, "proximity_weight", &cfg->proximity_weight);
  Set(j, "control_weight", &cfg->control_weight);
  Set(j, "v_min", &cfg->v_min);
  Set(j, "v_max", &cfg->v_max);
  Set(j, "omega_max", &cfg->omega_max);
  Set(j, "accel_max", &cfg->accel_max);
  if (j.contains("initial")) cfg->initial = VectorList(j.at("initial"), "initial");
  if (j.contains("goals")) cfg->goals = VectorList(j.at("goals"), "goals");
  cfg->Validate();
}

void ApplyOverrides(const Json& j, FormationConfig* cfg) {
  CheckKeys(j,
            {"horizon", "dt", "tracking_weight", "control_weight", "amplitude",
             "width", "height", "x0"},
            "formation");
  Set(j, "horizon", &cfg->horizon);
  Set(j, "dt", &cfg->dt);
  Set(j, "tracking_weight", &cfg->tracking_weight);
  Set(j, "control_weight", &cfg->control_weight);
  Set(j, "amplitude", &cfg->amplitude);
  Set(j, "width", &cfg->width);
  Set(j, "height", &cfg->height);
  if (j.contains("x0")) cfg->x0 = VectorFromJson(j.at("x0"), "x0");
  cfg->Validate();
}

void ApplyOverrides(const Json& j, IlqSettings* settings) {
  CheckKeys(j,
            {"max_outer_iters", "convergence_tol", "trust_radius", "min_step",
             "max_growth", "psd_shift", "backend"},
            "ilq");
  Set(j, "max_outer_iters", &settings->max_outer_iters);
  Set(j, "convergence_tol", &settings->convergence_tol);
  Set(j, "trust_radius", &settings->trust_radius);
  Set(j, "min_step", &settings->min_step);
  Set(j, "max_growth", &settings->max_growth);
  Set(j, "psd_shift", &settings->psd_shift);
  if (j.contains("backend")) {
    try {
      settings->solve.backend = ParseBackend(j.at("backend").get<std::string>());
    } catch (const Json::exception&) {
      throw ConfigError("field \"backend\" must be a string");
    }
  }
}

void ApplyOverrides(const Json& j, SweepSpec* spec) {
  CheckKeys(j,
            {"noise_levels", "lambdas", "num_initial", "box_width",
             "box_height", "seed", "threads"},
            "sweep");
  Set(j, "noise_levels", &spec->noise_levels);
  Set(j, "lambdas", &spec->lambdas);
  Set(j, "num_initial", &spec->num_initial);
  Set(j, "box_width", &spec->box_width);
  Set(j, "box_height", &spec->box_height);
  Set(j, "seed", &spec->seed);
  Set(j, "threads", &spec->threads);
  spec->Validate();
}

}  // namespace sparsegames
