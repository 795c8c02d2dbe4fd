#pragma once

// Seeded Monte Carlo sweeps over (p, eps, n) grids: sample, minimize, score
// each trial, and summarize success frequencies per cell.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lpsub/bounds.hpp"
#include "lpsub/certifier.hpp"
#include "lpsub/csv.hpp"
#include "lpsub/dataset.hpp"
#include "lpsub/energy.hpp"
#include "lpsub/errors.hpp"
#include "lpsub/hlm.hpp"
#include "lpsub/optimizer.hpp"
#include "lpsub/parallel.hpp"
#include "lpsub/random.hpp"
#include "lpsub/subspace.hpp"

namespace lpsub {

enum class ExperimentKind { Recovery, Stability, PhaseTransition, LocalMinRate, Counterexample };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Recovery: return "recovery";
    case ExperimentKind::Stability: return "stability";
    case ExperimentKind::PhaseTransition: return "phase-transition";
    case ExperimentKind::LocalMinRate: return "local-min-rate";
    case ExperimentKind::Counterexample: return "counterexample";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "recovery") return ExperimentKind::Recovery;
  if (s == "stability") return ExperimentKind::Stability;
  if (s == "phase-transition") return ExperimentKind::PhaseTransition;
  if (s == "local-min-rate") return ExperimentKind::LocalMinRate;
  if (s == "counterexample") return ExperimentKind::Counterexample;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Recovery;
  /// Required for every kind except counterexample; components[0] is L*_1.
  std::optional<HlmModelConfig> model;
  std::vector<double> p_grid{1.0};
  std::vector<double> eps_grid{0.0};
  std::vector<long> n_grid{1000};
  int trials = 1;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  double grid_step = 1e-4;
  double recovery_threshold = 1e-3;
  /// Scale every sample by 1 / (1 + eps) so that noisy data stay in the unit ball.
  bool rescale = true;
  /// Fixed outlier points for the weakly symmetric generator (custom-bounded outliers).
  std::optional<Dataset> outlier_points;
  /// Overrides the phase-transition threshold derived from the two-segment bound.
  std::optional<double> threshold;
  /// Dimensions of the counterexample configuration.
  Index ambient_dim = 2;
  Index subspace_dim = 1;
  std::string output;

  void validate() const {
    if (p_grid.empty() || eps_grid.empty() || n_grid.empty()) throw ConfigError("grids must be nonempty");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    for (double p : p_grid)
      if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("p values must be positive");
    for (double e : eps_grid)
      if (!(e >= 0.0)) throw ConfigError("eps values must be >= 0");
    for (long n : n_grid)
      if (n < 1) throw ConfigError("n values must be >= 1");
    if (!(grid_step > 0.0)) throw ConfigError("grid_step must be positive");
    if (!(recovery_threshold >= 0.0)) throw ConfigError("recovery_threshold must be >= 0");
    if (kind == ExperimentKind::Counterexample) {
      if (subspace_dim < 1 || subspace_dim >= ambient_dim) throw ConfigError("counterexample needs 1 <= d < D");
    } else {
      if (!model) throw ConfigError("experiment needs a model");
      model->validate();
    }
    if (kind == ExperimentKind::PhaseTransition && !threshold) {
      if (!model || model->ambient_dim != 2 || model->subspace_dim != 1 || model->components.size() != 2)
        throw ConfigError("phase-transition without 'threshold' needs D = 2, d = 1 and two components");
    }
    optimizer.validate();
  }
};

struct TrialRecord {
  std::size_t cell = 0;
  double p = 0.0;
  double eps = 0.0;
  long n = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double distance = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::quiet_NaN();
  bool success = false;
  double runtime_ms = 0.0;
  /// Success threshold the trial was scored against (NaN when not applicable).
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

struct CellSummary {
  std::size_t cell = 0;
  double p = 0.0;
  double eps = 0.0;
  long n = 0;
  int trials = 0;
  int successes = 0;
  int failed = 0;
  double frequency = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
  double median_distance = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
  std::vector<TrialRecord> records;
  std::vector<CellSummary> summary;
};

/// Wilson score interval for k successes in n trials.
inline std::pair<double, double> wilson_interval(int k, int n, double z = 1.959963984540054) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = n, phat = k / nn, z2 = z * z;
  const double centre = (phat + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(phat * (1 - phat) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

inline double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace detail {

struct Cell {
  double p;
  double eps;
  long n;
};

inline std::vector<Cell> cells_of(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  for (double p : spec.p_grid)
    for (double e : spec.eps_grid)
      for (long n : spec.n_grid) cells.push_back({p, e, n});
  return cells;
}

inline MuDescriptor mu_of(const HlmComponent& c, Index d, double scale) {
  MuDescriptor mu;
  mu.kind = c.distribution;
  mu.dim = static_cast<int>(d);
  mu.radius = c.radius * scale;
  return mu;
}

inline Subspace best_subspace(const Dataset& data, Index d, double p, const ExperimentSpec& spec,
                              std::uint64_t seed) {
  if (data.ambient_dim() == 2 && d == 1) return grid_oracle(data, p, spec.grid_step).best;
  OptimizerConfig cfg = spec.optimizer;
  cfg.p = p;
  cfg.seed = seed;
  return minimize(data, d, cfg).best;
}

/// N1 points uniform in the eps-ball of the first d coordinates plus one unit
/// outlier on the first orthogonal axis.
inline Dataset counterexample_data(Rng& rng, Index dim, Index d, long n1, double eps) {
  MatrixXd pts = MatrixXd::Zero(dim, n1 + 1);
  for (long i = 0; i < n1; ++i) pts.col(i).head(d) = random_in_ball(rng, d, eps);
  pts(d, n1) = 1.0;
  return Dataset(pts);
}

inline void run_trial(const ExperimentSpec& spec, const Cell& cell, TrialRecord& rec) {
  Rng rng(rec.seed);
  if (spec.kind == ExperimentKind::Counterexample) {
    const double eps = std::pow(static_cast<double>(cell.n), -1.0 / cell.p);
    rec.eps = eps;
    const Dataset data = counterexample_data(rng, spec.ambient_dim, spec.subspace_dim, cell.n, eps);
    const Subspace best = best_subspace(data, spec.subspace_dim, cell.p, spec, rng());
    rec.distance = geodesic_distance(best, Subspace::coordinate(spec.ambient_dim, spec.subspace_dim));
    rec.energy = energy(data, best, cell.p);
    rec.threshold = spec.recovery_threshold;
    rec.success = point_distance(data.point(cell.n), best) <= spec.recovery_threshold;
    return;
  }

  HlmModelConfig model = *spec.model;
  model.noise_level = cell.eps;
  const auto n = static_cast<Index>(cell.n);
  Dataset data = spec.outlier_points ? sample_weakly_symmetric(model, *spec.outlier_points, n, rng())
                                     : sample(model, n, rng());
  const double scale = spec.rescale ? 1.0 / (1.0 + cell.eps) : 1.0;
  data.points *= scale;
  const Subspace& truth = model.components[0].subspace;
  const Index d = model.subspace_dim;

  if (spec.kind == ExperimentKind::LocalMinRate) {
    // Success: L*_1 passes the local-minimum test that applies to p.
    rec.distance = 0.0;
    rec.energy = energy(data, truth, cell.p);
    if (cell.p == 1.0)
      rec.success = certify_l1(data, truth, 20000, rng()).verdict == Verdict::CertifiedLocalMin;
    else if (cell.p < 1.0)
      rec.success = certify_p_less_1(data, truth).verdict == Verdict::CertifiedLocalMin;
    else
      rec.success = check_necessary_p_gt_1(data, truth, cell.p).verdict == Verdict::NecessaryConditionHolds;
    return;
  }

  const Subspace best = best_subspace(data, d, cell.p, spec, rng());
  rec.distance = geodesic_distance(best, truth);
  rec.energy = energy(data, best, cell.p);
  switch (spec.kind) {
    case ExperimentKind::Recovery:
      rec.threshold = spec.recovery_threshold;
      rec.success = rec.distance <= rec.threshold;
      break;
    case ExperimentKind::Stability: {
      const auto& c1 = model.components[0];
      rec.threshold = stability_radius(cell.p, static_cast<int>(d), static_cast<int>(model.components.size()),
                                       model.outlier.weight, c1.weight, mu_of(c1, d, scale), cell.eps * scale)
                          .radius;
      rec.success = rec.distance <= rec.threshold;
      break;
    }
    case ExperimentKind::PhaseTransition: {
      rec.threshold = spec.threshold ? *spec.threshold
                                     : kappa_delta_lower_bound(cell.p, model.components[1].weight,
                                                               geodesic_distance(truth, model.components[1].subspace));
      rec.success = rec.distance >= rec.threshold;
      break;
    }
    default:
      break;
  }
}

}  // namespace detail

/// Runs every (cell, trial) pair. Trial seeds depend only on the spec seed
/// and the (cell, trial) indices; output order is (cell, trial) regardless
/// of `threads`. Errors inside a trial are recorded, not rethrown.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 1, bool timing = true) {
  spec.validate();
  const auto cells = detail::cells_of(spec);
  const auto trials = static_cast<std::size_t>(spec.trials);
  ExperimentResult result;
  result.records.resize(cells.size() * trials);
  parallel_for(result.records.size(), threads, [&](std::size_t idx) {
    const std::size_t c = idx / trials, t = idx % trials;
    TrialRecord& rec = result.records[idx];
    rec.cell = c;
    rec.p = cells[c].p;
    rec.eps = cells[c].eps;
    rec.n = cells[c].n;
    rec.trial = static_cast<int>(t);
    rec.seed = trial_seed(spec.seed, c, t);
    const auto start = std::chrono::steady_clock::now();
    try {
      detail::run_trial(spec, cells[c], rec);
    } catch (const std::exception& e) {
      rec.success = false;
      rec.error = e.what();
    }
    if (timing)
      rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });

  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellSummary s;
    s.cell = c;
    s.p = cells[c].p;
    s.eps = cells[c].eps;
    s.n = cells[c].n;
    std::vector<double> distances;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialRecord& r = result.records[c * trials + t];
      ++s.trials;
      s.successes += r.success;
      s.failed += !r.error.empty();
      distances.push_back(r.distance);
      s.eps = r.eps;
      s.threshold = r.threshold;
    }
    s.frequency = static_cast<double>(s.successes) / s.trials;
    std::tie(s.wilson_low, s.wilson_high) = wilson_interval(s.successes, s.trials);
    s.median_distance = median(distances);
    result.summary.push_back(s);
  }
  return result;
}

// --- spec JSON ---

namespace detail {

template <class T>
std::vector<T> json_list(const nlohmann::json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_array()) throw ConfigError(std::string("'") + key + "' must be a list");
  return j.at(key).get<std::vector<T>>();
}

inline OptimizerConfig parse_optimizer(const nlohmann::json& j) {
  OptimizerConfig c;
  c.restarts = j.value("restarts", c.restarts);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.step_init = j.value("step_init", c.step_init);
  c.step_shrink = j.value("step_shrink", c.step_shrink);
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.span_candidates = j.value("span_candidates", c.span_candidates);
  if (j.contains("seeding")) c.seeding = parse_seeding(j.at("seeding").get<std::string>());
  return c;
}

}  // namespace detail

inline ExperimentSpec parse_experiment_spec(const nlohmann::json& j) {
  try {
    ExperimentSpec s;
    s.kind = parse_experiment_kind(j.at("kind").get<std::string>());
    if (j.contains("model")) s.model = parse_model_config(j.at("model"));
    s.p_grid = detail::json_list<double>(j, "p_grid", s.p_grid);
    s.eps_grid = detail::json_list<double>(j, "eps_grid", s.eps_grid);
    s.n_grid = detail::json_list<long>(j, "n_grid", s.n_grid);
    s.trials = j.value("trials", s.trials);
    s.seed = j.value("seed", s.seed);
    if (j.contains("optimizer")) s.optimizer = detail::parse_optimizer(j.at("optimizer"));
    s.grid_step = j.value("grid_step", s.grid_step);
    s.recovery_threshold = j.value("recovery_threshold", s.recovery_threshold);
    s.rescale = j.value("rescale", s.rescale);
    if (j.contains("threshold")) s.threshold = j.at("threshold").get<double>();
    s.ambient_dim = j.value("ambient_dim", s.ambient_dim);
    s.subspace_dim = j.value("subspace_dim", s.subspace_dim);
    s.output = j.value("output", s.output);
    if (j.contains("weakly_symmetric_outliers")) {
      const auto pts = j.at("weakly_symmetric_outliers").get<std::vector<std::vector<double>>>();
      if (!s.model) throw ConfigError("weakly_symmetric_outliers needs a model");
      MatrixXd m(s.model->ambient_dim, static_cast<Index>(pts.size()));
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (static_cast<Index>(pts[i].size()) != s.model->ambient_dim)
          throw ConfigError("outlier points must have ambient_dim entries");
        for (Index r = 0; r < m.rows(); ++r) m(r, static_cast<Index>(i)) = pts[i][static_cast<std::size_t>(r)];
      }
      s.outlier_points = Dataset(m);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
}

inline ExperimentSpec read_experiment_spec(std::istream& in) {
  try {
    return parse_experiment_spec(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("experiment spec is not valid JSON: ") + e.what());
  }
}

// --- CSV output ---

inline const char* kTrialHeader = "p,eps,n,trial,seed,distance,energy,success,runtime_ms";

inline void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kTrialHeader << '\n';
  for (const auto& r : records)
    out << csv::format_double(r.p) << ',' << csv::format_double(r.eps) << ',' << r.n << ',' << r.trial << ','
        << r.seed << ',' << csv::format_double(r.distance) << ',' << csv::format_double(r.energy) << ','
        << (r.success ? 1 : 0) << ',' << csv::format_double(r.runtime_ms) << '\n';
}

inline void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& summary) {
  out << "p,eps,n,trials,successes,failed,frequency,wilson_low,wilson_high,median_distance,threshold\n";
  for (const auto& s : summary)
    out << csv::format_double(s.p) << ',' << csv::format_double(s.eps) << ',' << s.n << ',' << s.trials << ','
        << s.successes << ',' << s.failed << ',' << csv::format_double(s.frequency) << ','
        << csv::format_double(s.wilson_low) << ',' << csv::format_double(s.wilson_high) << ','
        << csv::format_double(s.median_distance) << ',' << csv::format_double(s.threshold) << '\n';
}

inline nlohmann::json to_json(const CellSummary& s) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  return {{"p", s.p},
          {"eps", s.eps},
          {"n", s.n},
          {"trials", s.trials},
          {"successes", s.successes},
          {"failed", s.failed},
          {"frequency", s.frequency},
          {"wilson_low", s.wilson_low},
          {"wilson_high", s.wilson_high},
          {"median_distance", num(s.median_distance)},
          {"threshold", num(s.threshold)}};
}

inline nlohmann::json to_json(const TrialRecord& r) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json j = {{"p", r.p},
                      {"eps", r.eps},
                      {"n", r.n},
                      {"trial", r.trial},
                      {"seed", r.seed},
                      {"distance", num(r.distance)},
                      {"energy", num(r.energy)},
                      {"success", r.success},
                      {"runtime_ms", r.runtime_ms}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

}  // namespace lpsub
