#pragma once

// The lp energy sum_x dist(x, L)^p, its derivative along Grassmannian
// geodesics, and the matrices that drive the local-minimum certificates.

#include <cmath>

#include <Eigen/Dense>

#include "lpsub/dataset.hpp"
#include "lpsub/errors.hpp"
#include "lpsub/subspace.hpp"

namespace lpsub {

/// Relative threshold deciding whether a point lies on a subspace.
inline constexpr double kSplitTolerance = 1e-9;
/// Distances below this make dist^(p-2) unusable for p < 2.
inline constexpr double kSingularDistance = 1e-12;

inline double split_threshold(double point_norm) {
  return kSplitTolerance * std::max(1.0, point_norm);
}

/// True when dist(x, l) <= 1e-9 * max(1, |x|).
inline bool lies_on(const VectorXd& x, const Subspace& l) {
  return point_distance(x, l) <= split_threshold(x.norm());
}

inline void check_p(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw ParameterError("p must be a positive real");
}

inline void check_dataset(const Dataset& data, const Subspace& l) {
  if (data.size() && data.ambient_dim() != l.ambient_dim())
    throw DimensionError("dataset dimension does not match subspace ambient dimension");
}

/// |r|^p with the common exponents special-cased.
inline double pow_abs(double r, double p) {
  r = std::abs(r);
  if (p == 1.0) return r;
  if (p == 2.0) return r * r;
  if (p == 0.5) return std::sqrt(r);
  return std::pow(r, p);
}

/// sum_x dist(x, l)^p, accumulated in index order.
inline double energy(const Dataset& data, const Subspace& l, double p) {
  check_p(p);
  check_dataset(data, l);
  const MatrixXd off = l.complement().transpose() * data.points;
  double total = 0.0;
  for (Index i = 0; i < data.size(); ++i) total += pow_abs(off.col(i).norm(), p);
  return total;
}

/// Scaled outlying correlation matrix B of a dataset w.r.t. an anchor subspace:
/// rows indexed by the anchor basis, columns by its fixed complement basis.
struct OutlyingCorrelation {
  MatrixXd matrix;
  Subspace anchor;
  double split_tolerance = kSplitTolerance;
};

/// B = sum over off-subspace x of P_L(x) P_L^perp(x)^T / dist(x, L).
inline OutlyingCorrelation outlying_correlation(const Dataset& data, const Subspace& l) {
  check_dataset(data, l);
  MatrixXd b = MatrixXd::Zero(l.dim(), l.ambient_dim() - l.dim());
  for (Index i = 0; i < data.size(); ++i) {
    const VectorXd x = data.point(i);
    auto [tangential, orthogonal] = project(x, l);
    const double dist = orthogonal.norm();
    if (dist <= split_threshold(x.norm())) continue;
    b.noalias() += tangential * orthogonal.transpose() / dist;
  }
  return {std::move(b), l, kSplitTolerance};
}

/// D_{L,x,p} = P_L(x) P_L^perp(x)^T dist(x, L)^(p-2).
inline MatrixXd d_matrix(const VectorXd& x, const Subspace& l, double p) {
  check_p(p);
  auto [tangential, orthogonal] = project(x, l);
  const double dist = orthogonal.norm();
  if (p < 2.0 && (dist < kSingularDistance || dist <= split_threshold(x.norm())))
    throw SingularPointError("point lies on the subspace; dist^(p-2) is singular");
  const double scale = (p == 2.0) ? 1.0 : (dist == 0.0 ? 0.0 : std::pow(dist, p - 2.0));
  return tangential * orthogonal.transpose() * scale;
}

/// Sum of singular values.
inline double nuclear_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(m).singularValues().sum();
}

namespace detail {

/// The C, V, U matrices of a geodesic leaving decomp.first:
/// C = diag(theta), row j of V = P_L(v_j), row j of U = P_L^perp(u_j) for
/// j <= k and zero beyond.
struct GeodesicFrame {
  MatrixXd c;
  MatrixXd v;
  MatrixXd u;
};

inline GeodesicFrame geodesic_frame(const PrincipalDecomposition& pd) {
  const Subspace& l = pd.first;
  const Index d = l.dim();
  GeodesicFrame f{pd.angles.asDiagonal(), l.basis().transpose() * pd.principal_first,
                  MatrixXd::Zero(d, l.ambient_dim() - d)};
  f.v.transposeInPlace();
  for (Index j = 0; j < pd.interaction_dim; ++j)
    f.u.row(j) = (l.complement().transpose() * pd.complementary.col(j)).transpose();
  return f;
}

/// Sum over on-subspace points of |C V P_L(x)|^q.
inline double inlier_rate(const Dataset& data, const PrincipalDecomposition& pd,
                          const GeodesicFrame& f, double q) {
  double total = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    const VectorXd x = data.point(i);
    if (!lies_on(x, pd.first)) continue;
    total += pow_abs((f.c * f.v * (pd.first.basis().transpose() * x)).norm(), q);
  }
  return total;
}

inline bool has_inliers(const Dataset& data, const Subspace& l) {
  for (Index i = 0; i < data.size(); ++i)
    if (lies_on(data.point(i), l)) return true;
  return false;
}

}  // namespace detail

/// d/dt sum_x dist(x, L(t))^p along the geodesic of `decomp` (t = 0 at
/// decomp.first), evaluated in the fixed t = 0 principal frame. For p = 1 at
/// t = 0 this is the one-sided derivative
///   sum_{x in L} |C V P_L x| - tr(C V B U^T).
inline double geodesic_derivative(const Dataset& data, const PrincipalDecomposition& decomp,
                                  double p, double t) {
  check_p(p);
  check_dataset(data, decomp.first);
  if (!(t >= 0.0 && t < 1.0)) throw ParameterError("t must lie in [0, 1)");
  const Subspace& l0 = decomp.first;

  if (t == 0.0 && p < 1.0 && detail::has_inliers(data, l0))
    throw NonDifferentiable("p < 1 with points on the subspace: use the t^p derivative");

  if (t == 0.0 && p == 1.0) {
    const auto frame = detail::geodesic_frame(decomp);
    const MatrixXd b = outlying_correlation(data, l0).matrix;
    return detail::inlier_rate(data, decomp, frame, 1.0) -
           (frame.c * frame.v * b * frame.u.transpose()).trace();
  }

  const Geodesic geo = Geodesic::from(decomp);
  const MatrixXd w = geo.basis_at(t);
  const Index d = l0.dim();
  double total = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    const VectorXd x = data.point(i);
    if (lies_on(x, l0)) {
      // Inlier: dist(x, L(t)) = sqrt(sum (v_j.x)^2 sin^2(t theta_j)).
      if (t == 0.0) continue;  // p > 1: the derivative of dist^p vanishes at 0
      double dist2 = 0.0, rate = 0.0;
      for (Index j = 0; j < d; ++j) {
        const double c = geo.v.col(j).dot(x);
        const double s = std::sin(t * geo.theta[j]);
        dist2 += c * c * s * s;
        rate += geo.theta[j] * c * c * s * std::cos(t * geo.theta[j]);
      }
      const double dist = std::sqrt(dist2);
      if (dist == 0.0) continue;
      total += p * std::pow(dist, p - 1.0) * rate / dist;
    } else {
      // Outlier: d/dt dist = -sum theta_j (w_j.x)(n_j.x) / dist.
      double rate = 0.0;
      for (Index j = 0; j < d; ++j) {
        if (geo.theta[j] == 0.0) continue;
        const double a = std::cos(t * geo.theta[j]), s = std::sin(t * geo.theta[j]);
        const VectorXd n = -s * geo.v.col(j) + a * geo.u.col(j);
        rate += geo.theta[j] * w.col(j).dot(x) * n.dot(x);
      }
      const double dist = (x - w * (w.transpose() * x)).norm();
      if (dist < kSingularDistance) {
        if (p < 2.0) throw SingularPointError("point lies on L(t); derivative is singular");
        if (p > 2.0) continue;
      }
      const double scale = (p == 2.0) ? 1.0 : std::pow(dist, p - 2.0);
      total -= p * scale * rate;
    }
  }
  return total;
}

/// Derivative of the lp energy with respect to t^p at t = 0 for 0 < p <= 1.
/// Off-subspace points contribute nothing; for p = 1 this equals
/// geodesic_derivative at t = 0.
inline double geodesic_derivative_tp(const Dataset& data, const PrincipalDecomposition& decomp,
                                     double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("t^p derivative needs 0 < p <= 1");
  check_dataset(data, decomp.first);
  if (p == 1.0) return geodesic_derivative(data, decomp, 1.0, 0.0);
  return detail::inlier_rate(data, decomp, detail::geodesic_frame(decomp), p);
}

}  // namespace lpsub
