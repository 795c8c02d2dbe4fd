#pragma once

// Minimization of the lp energy over G(D, d): multi-start geodesic descent,
// and an exhaustive angle search for lines in the plane.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lpsub/dataset.hpp"
#include "lpsub/energy.hpp"
#include "lpsub/errors.hpp"
#include "lpsub/parallel.hpp"
#include "lpsub/random.hpp"
#include "lpsub/subspace.hpp"

namespace lpsub {

enum class Seeding { RandomGrassmannian, DataSpan, Both };

inline std::string to_string(Seeding s) {
  switch (s) {
    case Seeding::RandomGrassmannian: return "random-grassmannian";
    case Seeding::DataSpan: return "data-span";
    case Seeding::Both: return "both";
  }
  return "?";
}

inline Seeding parse_seeding(const std::string& s) {
  if (s == "random-grassmannian" || s == "random") return Seeding::RandomGrassmannian;
  if (s == "data-span") return Seeding::DataSpan;
  if (s == "both") return Seeding::Both;
  throw ConfigError("unknown seeding '" + s + "'");
}

struct OptimizerConfig {
  double p = 1.0;
  int restarts = 20;
  int max_iters = 1000;
  double step_init = 0.1;
  double step_shrink = 0.5;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;
  Seeding seeding = Seeding::Both;
  /// Random d-subsets screened by energy to pick each data-span start.
  int span_candidates = 32;

  void validate() const {
    check_p(p);
    if (restarts < 1) throw ConfigError("restarts must be >= 1");
    if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (!(step_init > 0.0)) throw ConfigError("step_init must be positive");
    if (!(step_shrink > 0.0 && step_shrink < 1.0)) throw ConfigError("step_shrink must lie in (0, 1)");
    if (!(grad_tol >= 0.0)) throw ConfigError("grad_tol must be nonnegative");
    if (span_candidates < 1) throw ConfigError("span_candidates must be >= 1");
  }
};

struct TraceEntry {
  double energy = 0.0;
  double step = 0.0;
  double moved = 0.0;
};

struct StartSummary {
  int index = 0;
  bool data_span = false;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;
};

struct OptimizationResult {
  Subspace best;
  double energy = 0.0;
  std::vector<TraceEntry> trace;
  std::vector<StartSummary> starts;
};

namespace detail {

/// M = sum over off-subspace points of D_{L,x,p}, in the (basis, complement) coordinates of l.
inline MatrixXd descent_matrix(const Dataset& data, const Subspace& l, double p) {
  MatrixXd m = MatrixXd::Zero(l.dim(), l.ambient_dim() - l.dim());
  for (Index i = 0; i < data.size(); ++i) {
    const VectorXd x = data.point(i);
    if (lies_on(x, l)) continue;
    m.noalias() += d_matrix(x, l, p);
  }
  return m;
}

/// Steepest unit-speed geodesic from l for the outlier part of the energy:
/// with M = P diag(sigma) Q^T the derivative -p sum theta_j sigma_j is most
/// negative for v_j = P_j, u_j = Q_j, theta = sigma / |sigma|.
inline Geodesic descent_geodesic(const Subspace& l, const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeThinV);
  const VectorXd sigma = svd.singularValues();
  return Geodesic::from_direction(l, svd.matrixU(), svd.matrixV(), sigma / sigma.norm());
}

inline Subspace random_data_span(Rng& rng, const Dataset& data, Index d, const std::vector<Index>& nonzero) {
  if (static_cast<Index>(nonzero.size()) < d) throw DegenerateData("fewer nonzero points than d");
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::vector<Index> pick;
    while (static_cast<Index>(pick.size()) < d) {
      const Index j = nonzero[std::uniform_int_distribution<std::size_t>(0, nonzero.size() - 1)(rng)];
      if (std::find(pick.begin(), pick.end(), j) == pick.end()) pick.push_back(j);
    }
    MatrixXd cols(data.ambient_dim(), d);
    for (Index c = 0; c < d; ++c) cols.col(c) = data.point(pick[static_cast<std::size_t>(c)]);
    if (Eigen::ColPivHouseholderQR<MatrixXd>(cols).rank() < d) continue;
    return Subspace::span_of(cols);
  }
  throw DegenerateData("could not find d independent data points");
}

inline StartSummary descend(const Dataset& data, Subspace& l, const OptimizerConfig& cfg) {
  StartSummary s;
  double e = energy(data, l, cfg.p);
  s.initial_energy = e;
  const double stop = cfg.grad_tol * static_cast<double>(data.size());
  const double cap = std::numbers::pi / 4;
  double step = std::min(cfg.step_init, cap);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const MatrixXd m = descent_matrix(data, l, cfg.p);
    if (m.norm() <= stop) {
      s.converged = true;
      break;
    }
    const Geodesic geo = descent_geodesic(l, m);
    step = std::min(2.0 * step, cap);
    bool accepted = false;
    while (step > 1e-14) {
      Subspace next = geo.at(step);
      const double en = energy(data, next, cfg.p);
      if (en < e) {
        l = std::move(next);
        e = en;
        accepted = true;
        break;
      }
      step *= cfg.step_shrink;
    }
    if (!accepted) break;
    s.trace.push_back({e, step, step});
    s.iterations = it + 1;
  }
  s.final_energy = e;
  return s;
}

}  // namespace detail

/// Multi-start geodesic descent. Restarts are independent and may run on
/// `threads` workers; the result does not depend on the thread count.
inline OptimizationResult minimize(const Dataset& data, Index d, const OptimizerConfig& cfg, int threads = 1) {
  cfg.validate();
  const Index dim = data.ambient_dim();
  if (data.size() == 0) throw DegenerateData("empty dataset");
  if (d < 1 || d >= dim) throw DimensionError("minimize needs 1 <= d < D");
  std::vector<Index> nonzero;
  for (Index i = 0; i < data.size(); ++i)
    if (data.point(i).norm() > 0.0) nonzero.push_back(i);
  if (nonzero.empty()) throw DegenerateData("all points are at the origin");

  const auto n = static_cast<std::size_t>(cfg.restarts);
  std::vector<Subspace> finals(n, Subspace::coordinate(dim, d));
  std::vector<StartSummary> starts(n);
  parallel_for(n, threads, [&](std::size_t r) {
    Rng rng(stream_seed(cfg.seed, r));
    const bool use_span = cfg.seeding == Seeding::DataSpan || (cfg.seeding == Seeding::Both && r % 2 == 0);
    Subspace l = Subspace::coordinate(dim, d);
    bool spanned = false;
    if (use_span) {
      try {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < cfg.span_candidates; ++c) {
          Subspace cand = detail::random_data_span(rng, data, d, nonzero);
          const double e = energy(data, cand, cfg.p);
          if (e < best) {
            best = e;
            l = std::move(cand);
          }
        }
        spanned = true;
      } catch (const DegenerateData&) {
      }
    }
    if (!spanned) l = random_subspace(dim, d, rng);
    StartSummary s = detail::descend(data, l, cfg);
    s.index = static_cast<int>(r);
    s.data_span = spanned;
    starts[r] = std::move(s);
    finals[r] = std::move(l);
  });

  std::size_t win = 0;
  for (std::size_t r = 1; r < n; ++r)
    if (starts[r].final_energy < starts[win].final_energy) win = r;
  OptimizationResult result{finals[win], starts[win].final_energy, starts[win].trace, std::move(starts)};
  return result;
}

struct GridResult {
  Subspace best;
  double angle = 0.0;
  double energy = 0.0;
};

/// Exhaustive search over lines in R^2 at angles {0, h, ..., pi} plus the angle
/// of every nonzero data point. Ties go to the smallest angle.
inline GridResult grid_oracle(const Dataset& data, double p, double angle_step = 1e-4) {
  check_p(p);
  if (data.ambient_dim() != 2) throw DimensionError("grid_oracle needs D = 2 and d = 1");
  if (!(angle_step > 0.0)) throw ParameterError("angle_step must be positive");
  const double pi = std::numbers::pi;
  std::vector<double> angles;
  const auto steps = static_cast<long>(std::floor(pi / angle_step));
  for (long k = 0; k <= steps; ++k) angles.push_back(static_cast<double>(k) * angle_step);
  for (Index i = 0; i < data.size(); ++i) {
    const double x = data.points(0, i), y = data.points(1, i);
    if (x == 0.0 && y == 0.0) continue;
    double a = std::atan2(y, x);
    if (a < 0.0) a += pi;
    if (a >= pi) a -= pi;
    angles.push_back(a);
  }
  std::sort(angles.begin(), angles.end());
  const Eigen::RowVectorXd xs = data.points.row(0), ys = data.points.row(1);
  double best_angle = 0.0, best = std::numeric_limits<double>::infinity();
  for (double a : angles) {
    const double c = std::cos(a), s = std::sin(a);
    double e = 0.0;
    for (Index i = 0; i < data.size(); ++i) e += pow_abs(c * ys[i] - s * xs[i], p);
    if (e < best) {
      best = e;
      best_angle = a;
    }
  }
  const Subspace line = Subspace::line_2d(best_angle);
  return {line, best_angle, energy(data, line, p)};
}

inline nlohmann::json to_json(const OptimizationResult& r) {
  nlohmann::json basis = nlohmann::json::array();
  for (Index c = 0; c < r.best.dim(); ++c) {
    std::vector<double> col(static_cast<std::size_t>(r.best.ambient_dim()));
    for (Index i = 0; i < r.best.ambient_dim(); ++i) col[static_cast<std::size_t>(i)] = r.best.basis()(i, c);
    basis.push_back(col);
  }
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : r.trace) trace.push_back({{"energy", t.energy}, {"step", t.step}, {"moved", t.moved}});
  nlohmann::json starts = nlohmann::json::array();
  for (const auto& s : r.starts)
    starts.push_back({{"index", s.index},
                      {"seeding", s.data_span ? "data-span" : "random-grassmannian"},
                      {"initial_energy", s.initial_energy},
                      {"final_energy", s.final_energy},
                      {"iterations", s.iterations},
                      {"converged", s.converged}});
  return {{"energy", r.energy}, {"basis", basis}, {"trace", trace}, {"starts", starts}};
}

}  // namespace lpsub
