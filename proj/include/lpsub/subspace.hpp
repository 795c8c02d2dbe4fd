#pragma once

// Linear subspaces of R^D, principal angles and Grassmannian geodesics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lpsub/csv.hpp"
#include "lpsub/errors.hpp"
#include "lpsub/random.hpp"

namespace lpsub {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kOrthonormalTolerance = 1e-10;
/// Principal angles at or below this are treated as zero.
inline constexpr double kZeroAngle = 1e-9;

namespace detail {

/// Two-pass modified Gram-Schmidt. Keeps column directions, so an already
/// orthonormal input comes back unchanged up to rounding.
inline MatrixXd orthonormalize_columns(const MatrixXd& columns) {
  MatrixXd q = columns;
  for (Index j = 0; j < q.cols(); ++j) {
    const double original = q.col(j).norm();
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    const double norm = q.col(j).norm();
    if (!(norm > 1e-12 * std::max(1.0, original)))
      throw DimensionError("basis columns are linearly dependent");
    q.col(j) /= norm;
  }
  return q;
}

/// Completes an orthonormal D x d basis with standard coordinate vectors taken
/// in index order. A coordinate is accepted when its residual exceeds
/// 0.5/sqrt(D), which always yields exactly D - d vectors.
inline MatrixXd complete_basis(const MatrixXd& basis) {
  const Index ambient = basis.rows();
  const Index dim = basis.cols();
  MatrixXd full(ambient, ambient);
  full.leftCols(dim) = basis;
  Index filled = dim;
  const double accept = 0.5 / std::sqrt(static_cast<double>(ambient));
  for (Index e = 0; e < ambient && filled < ambient; ++e) {
    VectorXd r = VectorXd::Unit(ambient, e);
    for (int pass = 0; pass < 2; ++pass)
      r -= full.leftCols(filled) * (full.leftCols(filled).transpose() * r);
    const double norm = r.norm();
    if (norm > accept) full.col(filled++) = r / norm;
  }
  return full.rightCols(ambient - dim);
}

}  // namespace detail

/// A d-dimensional linear subspace of R^D held as an orthonormal basis
/// (D x d, one basis vector per column) together with a fixed orthonormal basis
/// of its orthogonal complement. Immutable after construction.
class Subspace {
 public:
  /// Wraps an orthonormal basis; throws DimensionError when the columns are not
  /// orthonormal to 1e-10.
  static Subspace from_orthonormal(MatrixXd basis) {
    check_shape(basis);
    const Index d = basis.cols();
    const double defect = (basis.transpose() * basis - MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
    if (!(defect <= kOrthonormalTolerance))
      throw DimensionError("basis columns are not orthonormal");
    return Subspace(std::move(basis));
  }

  /// Subspace spanned by the columns of `columns` (must be linearly independent).
  static Subspace span_of(const MatrixXd& columns) {
    check_shape(columns);
    return Subspace(detail::orthonormalize_columns(columns));
  }

  /// The line through the origin at angle `angle` (radians) from the x-axis in R^2.
  static Subspace line_2d(double angle) {
    MatrixXd b(2, 1);
    b << std::cos(angle), std::sin(angle);
    return Subspace(std::move(b));
  }

  /// span{e_0, ..., e_{d-1}} in R^D.
  static Subspace coordinate(Index ambient_dim, Index dim) {
    if (dim < 1 || dim > ambient_dim) throw DimensionError("need 1 <= d <= D");
    return Subspace(MatrixXd::Identity(ambient_dim, dim));
  }

  Index ambient_dim() const { return basis_.rows(); }
  Index dim() const { return basis_.cols(); }
  const MatrixXd& basis() const { return basis_; }
  /// D x (D - d) orthonormal basis of the orthogonal complement.
  const MatrixXd& complement() const { return complement_; }
  /// D x D orthogonal projector onto the subspace.
  MatrixXd projector() const { return basis_ * basis_.transpose(); }

 private:
  explicit Subspace(MatrixXd basis)
      : basis_(std::move(basis)), complement_(detail::complete_basis(basis_)) {}

  static void check_shape(const MatrixXd& m) {
    if (m.cols() < 1 || m.cols() > m.rows()) throw DimensionError("need 1 <= d <= D");
    if (!m.allFinite()) throw DimensionError("basis has non-finite entries");
  }

  MatrixXd basis_;
  MatrixXd complement_;
};

/// Principal angles/vectors between two subspaces and the complementary
/// orthogonal system of the second with respect to the first. Angles are
/// sorted non-increasingly; column i of each matrix belongs to angle i.
struct PrincipalDecomposition {
  Subspace first;
  Subspace second;
  VectorXd angles;
  MatrixXd principal_first;   // v_i
  MatrixXd principal_second;  // v'_i
  MatrixXd complementary;     // u_i
  Index interaction_dim = 0;  // k
};

inline void check_compatible(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim())
    throw DimensionError("subspaces live in different Grassmannians");
}

inline void check_length(const VectorXd& x, const Subspace& l) {
  if (x.size() != l.ambient_dim()) throw DimensionError("vector length does not match D");
}

inline PrincipalDecomposition principal_decomposition(const Subspace& a, const Subspace& b) {
  check_compatible(a, b);
  const Index d = a.dim();
  const MatrixXd overlap = b.basis().transpose() * a.basis();
  Eigen::JacobiSVD<MatrixXd> svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Eigen returns singular values in decreasing order, i.e. angles increasing;
  // reverse so that the largest angle comes first.
  MatrixXd v(a.ambient_dim(), d), v2(a.ambient_dim(), d);
  VectorXd cosines(d);
  for (Index i = 0; i < d; ++i) {
    const Index src = d - 1 - i;
    v.col(i) = a.basis() * svd.matrixV().col(src);
    v2.col(i) = b.basis() * svd.matrixU().col(src);
    cosines[i] = std::clamp(svd.singularValues()[src], -1.0, 1.0);
  }

  VectorXd angles(d);
  MatrixXd u(a.ambient_dim(), d);
  Index k = 0;
  for (Index i = 0; i < d; ++i) {
    // Sine from the component of v'_i orthogonal to the first subspace keeps
    // small angles accurate where arccos(cos) would lose half the digits.
    const VectorXd off = v2.col(i) - a.basis() * (a.basis().transpose() * v2.col(i));
    const double sine = off.norm();
    angles[i] = std::atan2(sine, std::max(cosines[i], 0.0));
    if (angles[i] > kZeroAngle) {
      u.col(i) = (v2.col(i) - cosines[i] * v.col(i)) / sine;
      k = i + 1;
    } else {
      angles[i] = 0.0;
      u.col(i) = v.col(i);
    }
  }
  // Re-sort in case rounding broke the order among nearly equal angles.
  for (Index i = 1; i < d; ++i) {
    for (Index j = i; j > 0 && angles[j] > angles[j - 1]; --j) {
      std::swap(angles[j], angles[j - 1]);
      v.col(j).swap(v.col(j - 1));
      v2.col(j).swap(v2.col(j - 1));
      u.col(j).swap(u.col(j - 1));
    }
  }
  k = 0;
  for (Index i = 0; i < d; ++i)
    if (angles[i] > 0.0) k = i + 1;

  // Sign convention: first nonzero coordinate of every v_i is positive.
  for (Index i = 0; i < d; ++i) {
    for (Index r = 0; r < v.rows(); ++r) {
      if (std::abs(v(r, i)) > 1e-12) {
        if (v(r, i) < 0) {
          v.col(i) *= -1.0;
          v2.col(i) *= -1.0;
          u.col(i) *= -1.0;
        }
        break;
      }
    }
  }
  return PrincipalDecomposition{a, b, std::move(angles), std::move(v), std::move(v2), std::move(u), k};
}

/// Geodesic distance sqrt(sum theta_i^2). The pair is put in a canonical order
/// first so that the result is exactly symmetric.
inline double geodesic_distance(const Subspace& a, const Subspace& b) {
  check_compatible(a, b);
  const double* pa = a.basis().data();
  const double* pb = b.basis().data();
  const auto n = a.basis().size();
  const bool swap = std::lexicographical_compare(pb, pb + n, pa, pa + n);
  return (swap ? principal_decomposition(b, a) : principal_decomposition(a, b)).angles.norm();
}

/// Geodesic t -> span{cos(t theta_i) v_i + sin(t theta_i) u_i}. `u_i` must be
/// orthonormal and orthogonal to every v_j whenever theta_i > 0.
struct Geodesic {
  MatrixXd v;
  MatrixXd u;
  VectorXd theta;

  static Geodesic from(const PrincipalDecomposition& pd) {
    return Geodesic{pd.principal_first, pd.complementary, pd.angles};
  }

  /// Unit-speed-scaled geodesic leaving `origin` in the direction given by the
  /// coordinate matrices `dir_in` (d x d, orthogonal) and `dir_out`
  /// ((D-d) x r, orthonormal columns) with angle weights `weights` (length r).
  static Geodesic from_direction(const Subspace& origin, const MatrixXd& dir_in,
                                 const MatrixXd& dir_out, const VectorXd& weights) {
    const Index d = origin.dim();
    Geodesic g{origin.basis() * dir_in, MatrixXd(origin.ambient_dim(), d), VectorXd::Zero(d)};
    g.u = g.v;
    for (Index i = 0; i < weights.size(); ++i) {
      g.u.col(i) = origin.complement() * dir_out.col(i);
      g.theta[i] = weights[i];
    }
    return g;
  }

  MatrixXd basis_at(double t) const {
    MatrixXd b(v.rows(), v.cols());
    for (Index i = 0; i < v.cols(); ++i)
      b.col(i) = std::cos(t * theta[i]) * v.col(i) + std::sin(t * theta[i]) * u.col(i);
    return b;
  }

  Subspace at(double t) const { return Subspace::span_of(basis_at(t)); }
};

/// L(t) on the geodesic from decomp.first (t = 0) to decomp.second (t = 1).
inline Subspace geodesic_point(const PrincipalDecomposition& decomp, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("geodesic parameter t must lie in [0, 1]");
  if (decomp.angles.size() > 0 && decomp.angles[0] >= std::numbers::pi / 2 - 1e-12)
    throw GeodesicNotUnique("largest principal angle is pi/2; geodesic is not unique");
  if (t == 0.0) return decomp.first;
  if (t == 1.0) return decomp.second;
  return Geodesic::from(decomp).at(t);
}

/// Euclidean distance from x to the subspace.
inline double point_distance(const VectorXd& x, const Subspace& l) {
  check_length(x, l);
  return (l.complement().transpose() * x).norm();
}

/// Coordinates of x in the subspace basis (tangential, length d) and in the
/// fixed complement basis (orthogonal, length D - d).
inline std::pair<VectorXd, VectorXd> project(const VectorXd& x, const Subspace& l) {
  check_length(x, l);
  return {l.basis().transpose() * x, l.complement().transpose() * x};
}

/// Haar-distributed random d-subspace of R^D (orthonormalized Gaussian frame).
inline Subspace random_subspace(Index ambient_dim, Index dim, std::uint64_t seed) {
  if (dim < 1 || dim > ambient_dim) throw DimensionError("need 1 <= d <= D");
  Rng rng(seed);
  for (;;) {
    try {
      return Subspace::span_of(gaussian_matrix(rng, ambient_dim, dim));
    } catch (const DimensionError&) {
      // measure-zero event; draw again
    }
  }
}

inline Subspace random_subspace(Index ambient_dim, Index dim, Rng& rng) {
  return random_subspace(ambient_dim, dim, rng());
}

// --- basis CSV: D rows, d columns, 17 significant digits ---

inline void write_basis_csv(std::ostream& out, const Subspace& l) {
  const MatrixXd& b = l.basis();
  for (Index r = 0; r < b.rows(); ++r) {
    for (Index c = 0; c < b.cols(); ++c) {
      if (c) out << ',';
      out << csv::format_double(b(r, c));
    }
    out << '\n';
  }
}

inline Subspace read_basis_csv(std::istream& in) {
  const auto lines = csv::read_lines(in);
  if (lines.empty()) throw ConfigError("basis CSV is empty");
  const auto first = csv::split_fields(lines.front());
  MatrixXd b(static_cast<Index>(lines.size()), static_cast<Index>(first.size()));
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto fields = csv::split_fields(lines[r]);
    if (fields.size() != first.size()) throw ConfigError("ragged basis CSV");
    for (std::size_t c = 0; c < fields.size(); ++c)
      b(static_cast<Index>(r), static_cast<Index>(c)) = csv::parse_double(fields[c]);
  }
  try {
    return Subspace::from_orthonormal(b);
  } catch (const DimensionError&) {
    // Accept a non-orthonormal spanning set and orthonormalize it.
    return Subspace::span_of(b);
  }
}

}  // namespace lpsub
