#pragma once

// Local-minimum certificates for a candidate subspace: the p = 1 sufficient
// condition sum_{X1} |C V P_L x| > |C V B|_* over (C, V), the span condition
// for p < 1, and the vanishing of sum_{X0} D_{L,y,p} for p > 1.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lpsub/dataset.hpp"
#include "lpsub/energy.hpp"
#include "lpsub/random.hpp"
#include "lpsub/subspace.hpp"

namespace lpsub {

enum class Verdict {
  CertifiedLocalMin,
  NecessaryConditionHolds,
  NecessaryConditionFails,
  SufficientConditionFails,
  Inconclusive
};

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::CertifiedLocalMin: return "CertifiedLocalMin";
    case Verdict::NecessaryConditionHolds: return "NecessaryConditionHolds";
    case Verdict::NecessaryConditionFails: return "NecessaryConditionFails";
    case Verdict::SufficientConditionFails: return "SufficientConditionFails";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

/// (C, V) with C = diag(c), c >= 0, |c| = 1 and V orthogonal. A general
/// C in S+(d) reduces to this form by absorbing its eigenvectors into V.
struct CertificateWitness {
  VectorXd c;
  MatrixXd v;
};

struct CertificateResult {
  Verdict verdict = Verdict::Inconclusive;
  /// Slack of the tested inequality; > 0 exactly for CertifiedLocalMin and
  /// NecessaryConditionHolds (values within the tolerance are reported as 0).
  double margin = 0.0;
  std::optional<CertificateWitness> witness;
  long samples_used = 0;
  /// True when the verdict rests on a sampled search rather than an exact computation.
  bool heuristic = false;
  double tolerance = 0.0;
  /// |sum_{X0} D|_F / N0 for the p > 1 test.
  std::optional<double> statistic;
};

namespace detail {

struct SplitData {
  MatrixXd inlier_coords;  // d x N1, coordinates of X1 in the candidate basis
  MatrixXd b;              // d x (D - d)
  double total_norm = 0.0;
};

inline SplitData split_for_certificate(const Dataset& data, const Subspace& l) {
  check_dataset(data, l);
  std::vector<Index> inliers;
  double total = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    const VectorXd x = data.point(i);
    total += x.norm();
    if (lies_on(x, l)) inliers.push_back(i);
  }
  SplitData s;
  s.inlier_coords.resize(l.dim(), static_cast<Index>(inliers.size()));
  for (std::size_t j = 0; j < inliers.size(); ++j)
    s.inlier_coords.col(static_cast<Index>(j)) = l.basis().transpose() * data.point(inliers[j]);
  s.b = outlying_correlation(data, l).matrix;
  s.total_norm = total;
  return s;
}

/// g(C, V) = sum_{X1} |C V a| - |C V B|_*.
inline double certificate_gap(const SplitData& s, const VectorXd& c, const MatrixXd& v) {
  const MatrixXd cv = c.asDiagonal() * v;
  const double lhs = s.inlier_coords.cols() ? (cv * s.inlier_coords).colwise().norm().sum() : 0.0;
  return lhs - nuclear_norm(cv * s.b);
}

inline MatrixXd random_orthogonal(Rng& rng, Index d) {
  Eigen::JacobiSVD<MatrixXd> svd(gaussian_matrix(rng, d, d), Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

inline VectorXd normalized_abs(const VectorXd& w) {
  VectorXd c = w.cwiseAbs();
  const double n = c.norm();
  if (n == 0.0) {
    c.setZero();
    c[0] = 1.0;
    return c;
  }
  return c / n;
}

inline void apply_givens(MatrixXd& v, Index i, Index j, double angle) {
  const double cs = std::cos(angle), sn = std::sin(angle);
  const VectorXd ri = v.row(i), rj = v.row(j);
  v.row(i) = cs * ri - sn * rj;
  v.row(j) = sn * ri + cs * rj;
}

}  // namespace detail

/// Sufficient condition for a local l1 subspace. Exact for d = 1; for d >= 2
/// a seeded search (random samples, then coordinate descent on the best) of
/// at most `search_budget` evaluations. A negative `tol` selects the default
/// 1e-9 * sum |x|.
inline CertificateResult certify_l1(const Dataset& data, const Subspace& candidate, long search_budget = 20000,
                                    std::uint64_t seed = 0, double tol = -1.0) {
  const auto s = detail::split_for_certificate(data, candidate);
  const Index d = candidate.dim();
  CertificateResult r;
  r.tolerance = tol >= 0.0 ? tol : 1e-9 * s.total_norm;

  double best = std::numeric_limits<double>::infinity();
  VectorXd best_c;
  MatrixXd best_v;
  auto consider = [&](const VectorXd& c, const MatrixXd& v) {
    const double g = detail::certificate_gap(s, c, v);
    ++r.samples_used;
    if (g < best) {
      best = g;
      best_c = c;
      best_v = v;
    }
    return g;
  };

  if (d == 1) {
    consider(VectorXd::Ones(1), MatrixXd::Ones(1, 1));
  } else {
    r.heuristic = true;
    if (search_budget < 1) throw ParameterError("search_budget must be positive");
    Rng rng(seed);
    const long sample_budget = std::max<long>(1, search_budget / 2);
    // Axis cases first: C = e_j with V = I.
    for (Index j = 0; j < d && r.samples_used < sample_budget; ++j)
      consider(VectorXd::Unit(d, j), MatrixXd::Identity(d, d));
    while (r.samples_used < sample_budget) {
      VectorXd c = detail::normalized_abs(gaussian_vector(rng, d));
      // Bias a share of the samples towards rank-one C, where g tends to be smallest.
      if (r.samples_used % 3 == 0) c = VectorXd::Unit(d, static_cast<Index>(rng() % static_cast<std::uint64_t>(d)));
      consider(c, detail::random_orthogonal(rng, d));
    }
    // Coordinate descent over C weights and Givens angles of V.
    VectorXd w = best_c;
    MatrixXd v = best_v;
    double current = best;
    double step = 0.25;
    while (r.samples_used < search_budget && step > 1e-9) {
      bool improved = false;
      for (Index i = 0; i < d && r.samples_used < search_budget; ++i) {
        for (double sign : {1.0, -1.0}) {
          VectorXd trial = w;
          trial[i] = std::max(0.0, trial[i] + sign * step);
          if (trial.norm() == 0.0) continue;
          trial /= trial.norm();
          const double g = consider(trial, v);
          if (g < current) {
            current = g;
            w = trial;
            improved = true;
            break;
          }
        }
      }
      for (Index i = 0; i < d && r.samples_used < search_budget; ++i) {
        for (Index j = i + 1; j < d && r.samples_used < search_budget; ++j) {
          for (double sign : {1.0, -1.0}) {
            MatrixXd trial = v;
            detail::apply_givens(trial, i, j, sign * step);
            const double g = consider(w, trial);
            if (g < current) {
              current = g;
              v = trial;
              improved = true;
              break;
            }
          }
        }
      }
      if (!improved) step *= 0.5;
    }
  }

  r.witness = CertificateWitness{best_c, best_v};
  r.margin = std::abs(best) <= r.tolerance ? 0.0 : best;
  if (s.inlier_coords.cols() == 0) {
    r.verdict = Verdict::SufficientConditionFails;
    r.margin = std::min(r.margin, 0.0);
  } else if (r.margin > 0.0) {
    r.verdict = Verdict::CertifiedLocalMin;
  } else if (r.margin < 0.0 || d == 1) {
    r.verdict = Verdict::SufficientConditionFails;
  } else {
    r.verdict = Verdict::Inconclusive;
  }
  return r;
}

/// Local minimum for every 0 < p < 1 when the points on the candidate span it.
/// The margin is the smallest singular value of their coordinate matrix.
inline CertificateResult certify_p_less_1(const Dataset& data, const Subspace& candidate) {
  const auto s = detail::split_for_certificate(data, candidate);
  const Index d = candidate.dim();
  CertificateResult r;
  r.tolerance = 1e-9;
  r.samples_used = 0;
  if (s.inlier_coords.cols() < d) {
    r.verdict = Verdict::Inconclusive;
    return r;
  }
  const VectorXd sv = Eigen::JacobiSVD<MatrixXd>(s.inlier_coords).singularValues();
  const double smallest = sv[d - 1];
  if (smallest > r.tolerance * std::max(1.0, sv[0])) {
    r.verdict = Verdict::CertifiedLocalMin;
    r.margin = smallest;
  } else {
    r.verdict = Verdict::Inconclusive;
  }
  return r;
}

/// Necessary condition sum_{X0} D_{L,y,p} = 0, tested as |M|_F <= tol * N0.
/// margin = tol - |M|_F / N0; the statistic |M|_F / N0 is reported separately.
/// Applies to p > 1, and to 0 < p <= 1 when no point lies on the candidate.
inline CertificateResult check_necessary_p_gt_1(const Dataset& data, const Subspace& candidate, double p,
                                                double tol = 1e-9) {
  check_p(p);
  check_dataset(data, candidate);
  MatrixXd m = MatrixXd::Zero(candidate.dim(), candidate.ambient_dim() - candidate.dim());
  Index n0 = 0;
  for (Index i = 0; i < data.size(); ++i) {
    const VectorXd x = data.point(i);
    if (lies_on(x, candidate)) {
      if (p <= 1.0) throw ParameterError("for p <= 1 the condition needs every point off the candidate");
      continue;
    }
    m += d_matrix(x, candidate, p);
    ++n0;
  }
  CertificateResult r;
  r.tolerance = tol;
  r.samples_used = n0;
  const double stat = n0 ? m.norm() / static_cast<double>(n0) : 0.0;
  r.statistic = stat;
  if (stat <= tol) {
    r.verdict = Verdict::NecessaryConditionHolds;
    r.margin = tol - stat;
  } else {
    r.verdict = Verdict::NecessaryConditionFails;
    r.margin = tol - stat;
  }
  return r;
}

inline nlohmann::json to_json(const CertificateResult& r) {
  nlohmann::json j = {{"verdict", to_string(r.verdict)},
                      {"margin", r.margin},
                      {"samples_used", r.samples_used},
                      {"heuristic", r.heuristic},
                      {"tolerance", r.tolerance}};
  if (r.witness) {
    std::vector<double> c(r.witness->c.data(), r.witness->c.data() + r.witness->c.size());
    nlohmann::json v = nlohmann::json::array();
    for (Index i = 0; i < r.witness->v.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(r.witness->v.cols()));
      for (Index k = 0; k < r.witness->v.cols(); ++k) row[static_cast<std::size_t>(k)] = r.witness->v(i, k);
      v.push_back(row);
    }
    j["witness"] = {{"C", c}, {"V", v}};
  } else {
    j["witness"] = nullptr;
  }
  j["statistic"] = r.statistic ? nlohmann::json(*r.statistic) : nlohmann::json(nullptr);
  return j;
}

}  // namespace lpsub
