#include <sparsegames/harness.h>

#include <glog/logging.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sparsegames {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t Fnv1a(std::uint64_t h, const void* data, size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (size_t k = 0; k < size; ++k) {
    h ^= bytes[k];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t HashDouble(std::uint64_t h, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  return Fnv1a(h, &bits, sizeof bits);
}

// Independent stream for a labelled purpose within the sweep.
std::mt19937_64 Stream(std::uint64_t master, std::uint64_t purpose,
                       std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(master),
                    static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(purpose),
                    static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kInitialStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::string Hex(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

// Shortest round-trip decimal for CSV cells.
std::string Num(double value) {
  if (std::isnan(value)) return "nan";
  std::ostringstream out;
  out << std::setprecision(17) << value;
  return out.str();
}

std::string Short(double value) {
  std::ostringstream out;
  out << std::setprecision(4) << value;
  return out.str();
}

std::string Escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void NoiseModel::Validate() const {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw ConfigError("noise variance must be finite and nonnegative");
  }
}

Trajectory NoisyRollout(const LqGame& game,
                        const AffineStrategyProfile& strategies,
                        const NoiseModel& noise, const VectorXd& x0,
                        std::uint64_t* checksum) {
  noise.Validate();
  const Dims& dims = game.dims;
  const int T = dims.horizon();
  const int N = dims.num_players();
  if (strategies.horizon() != T) {
    throw DimensionError("strategies do not cover the horizon");
  }
  if (x0.size() != dims.state_dim()) {
    throw DimensionError("x0 has the wrong size");
  }
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(noise.variance));
  std::uint64_t hash = kFnvOffset;

  Trajectory traj;
  traj.x.push_back(x0);
  for (int t = 0; t < T; ++t) {
    const VectorXd& x = traj.x.back();
    VectorXd u(dims.control_dim());
    for (int i = 0; i < N; ++i) {
      VectorXd observed = x;
      if (noise.variance > 0.0) {
        for (int j = 0; j < N; ++j) {
          if (j == i) continue;
          for (int k = 0; k < dims.state_dim(j); ++k) {
            const double e = normal(rng);
            hash = HashDouble(hash, e);
            observed(dims.state_offset(j) + k) += e;
          }
        }
      }
      // Same expression as Rollout so that zero noise matches it exactly.
      const VectorXd u_i = -strategies.P[t] * observed - strategies.alpha[t];
      const int o = dims.control_offset(i);
      const int n = dims.control_dim(i);
      u.segment(o, n) = u_i.segment(o, n);
    }
    VectorXd next = game.A[t] * x;
    for (int i = 0; i < N; ++i) {
      next += game.B[t][i] *
              u.segment(dims.control_offset(i), dims.control_dim(i));
    }
    traj.u.push_back(std::move(u));
    traj.x.push_back(std::move(next));
  }
  if (checksum) *checksum = hash;
  return traj;
}

std::vector<double> Linspace(double lo, double hi, int count) {
  std::vector<double> out;
  if (count == 1) return {lo};
  for (int k = 0; k < count; ++k) {
    out.push_back(lo + (hi - lo) * k / (count - 1));
  }
  return out;
}

SweepSpec SweepSpec::DeskScale() {
  SweepSpec spec;
  spec.noise_levels = Linspace(0.0, 2000.0, 10);
  spec.lambdas = Linspace(0.0, 15.0, 10);
  spec.num_initial = 20;
  return spec;
}

void SweepSpec::Validate() const {
  if (noise_levels.empty() || lambdas.empty()) {
    throw ConfigError("sweep needs at least one noise level and one lambda");
  }
  if (num_initial < 1) throw ConfigError("num_initial must be positive");
  if (!(box_width > 0.0) || !(box_height > 0.0)) {
    throw ConfigError("sampling box must have positive size");
  }
  for (double v : noise_levels) NoiseModel{v, 0}.Validate();
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw ConfigError("lambda levels must be finite and nonnegative");
    }
  }
  if (threads < 1) throw ConfigError("threads must be positive");
}

std::string ConfigHash(const SweepSpec& spec, const FormationConfig& scenario) {
  nlohmann::json j;
  j["noise_levels"] = spec.noise_levels;
  j["lambdas"] = spec.lambdas;
  j["num_initial"] = spec.num_initial;
  j["box"] = {spec.box_width, spec.box_height};
  j["seed"] = spec.seed;
  j["formation"] = {{"horizon", scenario.horizon},
                    {"dt", scenario.dt},
                    {"tracking_weight", scenario.tracking_weight},
                    {"control_weight", scenario.control_weight},
                    {"amplitude", scenario.amplitude},
                    {"width", scenario.width},
                    {"height", scenario.height}};
  const std::string text = j.dump();
  return Hex(Fnv1a(kFnvOffset, text.data(), text.size()));
}

SweepResult RunSweep(const SweepSpec& spec, const FormationConfig& scenario) {
  spec.Validate();
  const FormationGame formation = BuildFormationGame(scenario);
  const LqGame& game = formation.game;
  const int N = game.dims.num_players();
  const int L = static_cast<int>(spec.lambdas.size());
  const int V = static_cast<int>(spec.noise_levels.size());
  const int S = spec.num_initial;

  SweepResult result;
  result.spec = spec;
  result.scenario = scenario;
  result.git_revision = SPARSEGAMES_GIT_REVISION;
  result.config_hash = ConfigHash(spec, scenario);

  // Strategies per lambda; index L holds the lambda = 0 baseline.
  std::vector<AffineStrategyProfile> strategies(L + 1);
  std::vector<bool> solved(L + 1, false);
  result.solve_errors.assign(L, "");
  result.sparsity.resize(L);
  for (int l = 0; l <= L; ++l) {
    const double weight = l < L ? spec.lambdas[l] : 0.0;
    try {
      const SparseSolveReport report =
          SolveRegularized(game, RegularizationWeights(N, weight));
      if (l < L) {
        result.sparsity[l] = ComputeSparsityPattern(
            game.dims, report.strategies, kBcdSparsityThreshold);
      }
      strategies[l] = report.strategies;
      solved[l] = true;
    } catch (const SparseGamesError& e) {
      LOG(WARNING) << "lambda " << weight << ": " << e.what();
      if (l < L) result.solve_errors[l] = e.what();
    }
  }

  // Initial positions depend only on the seed index so every noise level
  // sees the same starts.
  std::vector<VectorXd> starts(S);
  for (int s = 0; s < S; ++s) {
    std::mt19937_64 rng = Stream(spec.seed, kInitialStream, s, 0);
    std::uniform_real_distribution<double> px(-spec.box_width / 2,
                                              spec.box_width / 2);
    std::uniform_real_distribution<double> py(-spec.box_height / 2,
                                              spec.box_height / 2);
    VectorXd x0 = VectorXd::Zero(game.dims.state_dim());
    for (int i = 0; i < N; ++i) {
      const int o = game.dims.state_offset(i);
      x0(o) = px(rng);
      x0(o + 2) = py(rng);
    }
    starts[s] = x0;
  }

  result.records.resize(static_cast<size_t>(V) * L * S);
  auto evaluate = [&](int v, int s) {
    const std::uint64_t noise_seed =
        Stream(spec.seed, kNoiseStream, v, s)();
    const NoiseModel noise{spec.noise_levels[v], noise_seed};
    std::vector<double> baseline(N, std::numeric_limits<double>::quiet_NaN());
    std::uint64_t baseline_sum = 0;
    std::string baseline_error;
    if (solved[L]) {
      const Trajectory traj =
          NoisyRollout(game, strategies[L], noise, starts[s], &baseline_sum);
      for (int i = 0; i < N; ++i) baseline[i] = formation.Cost(traj, i);
    } else {
      baseline_error = "baseline solve failed";
    }
    for (int l = 0; l < L; ++l) {
      SweepRecord& rec = result.records[(static_cast<size_t>(v) * L + l) * S + s];
      rec.noise_index = v;
      rec.lambda_index = l;
      rec.seed_index = s;
      rec.baseline_cost = baseline;
      rec.cost.assign(N, std::numeric_limits<double>::quiet_NaN());
      if (!solved[l] || !solved[L]) {
        rec.ok = false;
        rec.error = solved[l] ? baseline_error : result.solve_errors[l];
        continue;
      }
      std::uint64_t sum = 0;
      const Trajectory traj =
          NoisyRollout(game, strategies[l], noise, starts[s], &sum);
      if (sum != baseline_sum) {
        throw NumericalBreakdown("noise streams diverged between variants");
      }
      for (int i = 0; i < N; ++i) rec.cost[i] = formation.Cost(traj, i);
    }
  };

  const int cells = V * S;
  const int workers = std::min(spec.threads, cells);
  if (workers <= 1) {
    for (int c = 0; c < cells; ++c) evaluate(c / S, c % S);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int c = w; c < cells; c += workers) evaluate(c / S, c % S);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  result.mean_difference.assign(N, MatrixXd::Constant(V, L, nan));
  result.mean_cost.assign(N, MatrixXd::Constant(V, L, nan));
  for (int v = 0; v < V; ++v) {
    for (int l = 0; l < L; ++l) {
      for (int i = 0; i < N; ++i) {
        double diff = 0.0;
        double cost = 0.0;
        int count = 0;
        for (int s = 0; s < S; ++s) {
          const SweepRecord& rec =
              result.records[(static_cast<size_t>(v) * L + l) * S + s];
          if (!rec.ok) continue;
          diff += rec.cost[i] - rec.baseline_cost[i];
          cost += rec.cost[i];
          ++count;
        }
        if (count > 0) {
          result.mean_difference[i](v, l) = diff / count;
          result.mean_cost[i](v, l) = cost / count;
        }
      }
    }
  }
  return result;
}

std::vector<SparsityRow> SparsityReport(
    const std::vector<double>& lambdas,
    const std::vector<SparsityPattern>& patterns) {
  if (lambdas.size() != patterns.size()) {
    throw DimensionError("one sparsity pattern per lambda is required");
  }
  std::vector<SparsityRow> rows;
  for (size_t l = 0; l < lambdas.size(); ++l) {
    const auto& counts = patterns[l].counts;
    for (size_t t = 0; t < counts.size(); ++t) {
      for (int i = 0; i < counts[t].size(); ++i) {
        rows.push_back({lambdas[l], i + 1, static_cast<int>(t) + 1,
                        counts[t](i)});
      }
    }
  }
  return rows;
}

void WriteSweepSummaryCsv(std::ostream& out, const SweepResult& result) {
  out << "# config_hash=" << result.config_hash << "\n";
  out << "noise_variance,lambda,player,mean_cost,mean_difference,seeds,"
         "failures\n";
  const int N = static_cast<int>(result.mean_difference.size());
  const int V = static_cast<int>(result.spec.noise_levels.size());
  const int L = static_cast<int>(result.spec.lambdas.size());
  const int S = result.spec.num_initial;
  if (N == 0) return;
  for (int v = 0; v < V; ++v) {
    for (int l = 0; l < L; ++l) {
      int failures = 0;
      for (int s = 0; s < S; ++s) {
        if (!result.records[(static_cast<size_t>(v) * L + l) * S + s].ok) {
          ++failures;
        }
      }
      for (int i = 0; i < N; ++i) {
        out << Num(result.spec.noise_levels[v]) << ','
            << Num(result.spec.lambdas[l]) << ',' << i + 1 << ','
            << Num(result.mean_cost[i](v, l)) << ','
            << Num(result.mean_difference[i](v, l)) << ',' << S << ','
            << failures << "\n";
      }
    }
  }
}

void WriteSweepRecordsCsv(std::ostream& out, const SweepResult& result) {
  out << "# config_hash=" << result.config_hash << "\n";
  out << "noise_variance,lambda,seed_index,player,cost,baseline_cost,"
         "difference,error\n";
  for (const SweepRecord& rec : result.records) {
    for (size_t i = 0; i < rec.cost.size(); ++i) {
      out << Num(result.spec.noise_levels[rec.noise_index]) << ','
          << Num(result.spec.lambdas[rec.lambda_index]) << ','
          << rec.seed_index << ',' << i + 1 << ',' << Num(rec.cost[i]) << ','
          << Num(rec.baseline_cost[i]) << ','
          << Num(rec.cost[i] - rec.baseline_cost[i]) << ',' << rec.error
          << "\n";
    }
  }
}

void WriteSparsityCsv(std::ostream& out, const std::vector<SparsityRow>& rows,
                      const std::string& config_hash) {
  out << "# config_hash=" << config_hash << "\n";
  out << "lambda,player,stage,nonzero_blocks\n";
  for (const SparsityRow& row : rows) {
    out << Num(row.lambda) << ',' << row.player << ',' << row.stage << ','
        << row.count << "\n";
  }
}

void WriteTrajectoryCsv(std::ostream& out, const Trajectory& traj,
                        const std::string& config_hash) {
  out << "# config_hash=" << config_hash << "\n";
  const int m = traj.x.empty() ? 0 : static_cast<int>(traj.x[0].size());
  const int n = traj.u.empty() ? 0 : static_cast<int>(traj.u[0].size());
  out << "stage";
  for (int k = 0; k < m; ++k) out << ",x" << k;
  for (int k = 0; k < n; ++k) out << ",u" << k;
  out << "\n";
  for (size_t t = 0; t < traj.x.size(); ++t) {
    out << t + 1;
    for (int k = 0; k < m; ++k) out << ',' << Num(traj.x[t](k));
    for (int k = 0; k < n; ++k) {
      out << ',';
      if (t < traj.u.size()) out << Num(traj.u[t](k));
    }
    out << "\n";
  }
}

void WriteTraceCsv(std::ostream& out, const std::vector<double>& lambdas,
                   const std::vector<ConvergenceTrace>& traces,
                   const std::string& config_hash) {
  out << "# config_hash=" << config_hash << "\n";
  out << "lambda,step,delta_P,z_change,z_error\n";
  for (size_t l = 0; l < traces.size(); ++l) {
    const ConvergenceTrace& tr = traces[l];
    for (size_t k = 0; k < tr.delta_P.size(); ++k) {
      out << Num(lambdas[l]) << ',' << k + 1 << ',' << Num(tr.delta_P[k])
          << ',' << Num(tr.z_change[k]) << ',';
      if (k < tr.z_error.size()) out << Num(tr.z_error[k]);
      out << "\n";
    }
  }
}

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMargin = 60;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

void SvgHeader(std::ostream& out, const std::string& title,
               const std::string& config_hash) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" "
      << "font-size=\"11\">\n";
  out << "<!-- config_hash=" << config_hash << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << Escape(title) << "</text>\n";
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void Add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void Fix() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

void WriteLineSvg(std::ostream& out, const std::string& title,
                  const std::string& x_label, const std::string& y_label,
                  const std::vector<Series>& series, bool log_y,
                  const std::string& config_hash) {
  auto ty = [&](double y) {
    return log_y ? std::log10(std::max(y, 1e-300)) : y;
  };
  Range xr, yr;
  for (const Series& s : series) {
    for (double x : s.x) xr.Add(x);
    for (double y : s.y) {
      if (!log_y || y > 0.0) yr.Add(ty(y));
    }
  }
  xr.Fix();
  yr.Fix();
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  auto px = [&](double x) { return kMargin + pw * (x - xr.lo) / (xr.hi - xr.lo); };
  auto py = [&](double y) {
    return kMargin + ph * (1.0 - (ty(y) - yr.lo) / (yr.hi - yr.lo));
  };

  SvgHeader(out, title, config_hash);
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">" << Escape(x_label) << "</text>\n";
  out << "<text x=\"15\" y=\"" << kHeight / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << kHeight / 2
      << ")\">" << Escape(y_label) << (log_y ? " (log10)" : "") << "</text>\n";
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 15
      << "\">" << Short(xr.lo) << "</text>\n";
  out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 15
      << "\" text-anchor=\"end\">" << Short(xr.hi) << "</text>\n";
  out << "<text x=\"" << kMargin - 5 << "\" y=\"" << kHeight - kMargin
      << "\" text-anchor=\"end\">" << Short(yr.lo) << "</text>\n";
  out << "<text x=\"" << kMargin - 5 << "\" y=\"" << kMargin + 10
      << "\" text-anchor=\"end\">" << Short(yr.hi) << "</text>\n";
  for (size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (size_t p = 0; p < s.x.size() && p < s.y.size(); ++p) {
      if (!std::isfinite(s.y[p]) || (log_y && s.y[p] <= 0.0)) continue;
      out << Short(px(s.x[p])) << ',' << Short(py(s.y[p])) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin - 5 << "\" y=\""
        << kMargin + 15 + 14 * k << "\" text-anchor=\"end\" fill=\"" << color
        << "\">" << Escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

void WriteHeatmapSvg(std::ostream& out, const std::string& title,
                     const std::vector<double>& xs,
                     const std::vector<double>& ys, const MatrixXd& values,
                     const std::string& config_hash) {
  double scale = 0.0;
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) {
      if (std::isfinite(values(r, c))) {
        scale = std::max(scale, std::abs(values(r, c)));
      }
    }
  }
  if (scale == 0.0) scale = 1.0;
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  const double cw = values.cols() > 0 ? pw / values.cols() : pw;
  const double ch = values.rows() > 0 ? ph / values.rows() : ph;

  SvgHeader(out, title, config_hash);
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) {
      const double v = values(r, c);
      std::string fill = "#cccccc";
      if (std::isfinite(v)) {
        // Blue where regularization helps, red where it hurts.
        const int shade = static_cast<int>(255 * (1.0 - std::abs(v) / scale));
        std::ostringstream color;
        color << "rgb(" << (v < 0 ? shade : 255) << ',' << shade << ','
              << (v < 0 ? 255 : shade) << ')';
        fill = color.str();
      }
      // Noise grows upward.
      const double y = kMargin + ph - (r + 1) * ch;
      out << "<rect x=\"" << Short(kMargin + c * cw) << "\" y=\"" << Short(y)
          << "\" width=\"" << Short(cw) << "\" height=\"" << Short(ch)
          << "\" fill=\"" << fill << "\"><title>" << Num(v)
          << "</title></rect>\n";
    }
  }
  for (size_t c = 0; c < xs.size(); ++c) {
    out << "<text x=\"" << Short(kMargin + (c + 0.5) * cw) << "\" y=\""
        << kHeight - kMargin + 15 << "\" text-anchor=\"middle\">"
        << Short(xs[c]) << "</text>\n";
  }
  for (size_t r = 0; r < ys.size(); ++r) {
    out << "<text x=\"" << kMargin - 5 << "\" y=\""
        << Short(kMargin + ph - (r + 0.5) * ch) << "\" text-anchor=\"end\">"
        << Short(ys[r]) << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">lambda</text>\n";
  out << "<text x=\"15\" y=\"" << kHeight / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << kHeight / 2
      << ")\">noise variance</text>\n";
  out << "</svg>\n";
}

void WritePathsSvg(std::ostream& out, const std::string& title,
                   const std::vector<std::vector<Eigen::Vector2d>>& positions,
                   const std::string& config_hash) {
  Range xr, yr;
  for (const auto& path : positions) {
    for (const auto& p : path) {
      xr.Add(p(0));
      yr.Add(p(1));
    }
  }
  xr.Fix();
  yr.Fix();
  // Equal aspect ratio.
  const double span = std::max(xr.hi - xr.lo, yr.hi - yr.lo);
  const double cx = 0.5 * (xr.lo + xr.hi);
  const double cy = 0.5 * (yr.lo + yr.hi);
  const double side = kHeight - 2 * kMargin;
  const double left = 0.5 * (kWidth - side);
  auto px = [&](double x) { return left + side * ((x - cx) / span + 0.5); };
  auto py = [&](double y) { return kMargin + side * (0.5 - (y - cy) / span); };

  SvgHeader(out, title, config_hash);
  for (size_t i = 0; i < positions.size(); ++i) {
    const char* color = kPalette[i % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& p : positions[i]) {
      out << Short(px(p(0))) << ',' << Short(py(p(1))) << ' ';
    }
    out << "\"/>\n";
    if (!positions[i].empty()) {
      const auto& s = positions[i].front();
      out << "<circle cx=\"" << Short(px(s(0))) << "\" cy=\"" << Short(py(s(1)))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    out << "<text x=\"" << kWidth - 10 << "\" y=\"" << kMargin + 14 * i
        << "\" text-anchor=\"end\" fill=\"" << color << "\">player " << i + 1
        << "</text>\n";
  }
  out << "</svg>\n";
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  file << contents;
  if (!file) throw std::runtime_error("failed writing " + path);
}

}  // namespace sparsegames
