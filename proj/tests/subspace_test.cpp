#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "lpsub/subspace.hpp"
#include "test_util.hpp"

using namespace lpsub;
using lpsub::testing::random_rotation;

namespace {

constexpr double kPi = std::numbers::pi;

Subspace span2(const VectorXd& a, const VectorXd& b) {
  MatrixXd m(a.size(), 2);
  m << a, b;
  return Subspace::span_of(m);
}

void expect_same_subspace(const Subspace& a, const Subspace& b, double tol = 1e-9) {
  EXPECT_LT((a.projector() - b.projector()).norm(), tol);
}

}  // namespace

TEST(Subspace, ConstructionAndComplement) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index D = 2 + trial % 5;
    const Index d = 1 + trial % D;
    const Subspace l = random_subspace(D, d, rng);
    ASSERT_EQ(l.complement().cols(), D - d);
    MatrixXd full(D, D);
    full << l.basis(), l.complement();
    EXPECT_LT((full.transpose() * full - MatrixXd::Identity(D, D)).norm(), 1e-12);
  }
  EXPECT_THROW(Subspace::from_orthonormal(MatrixXd::Ones(3, 2)), DimensionError);
  EXPECT_THROW(Subspace::span_of(MatrixXd::Ones(3, 2)), DimensionError);
  EXPECT_THROW(Subspace::span_of(MatrixXd::Identity(2, 3)), DimensionError);
}

TEST(Subspace, ComplementIsDeterministicPerSubspace) {
  const Subspace x_axis = Subspace::line_2d(0.0);
  EXPECT_NEAR(x_axis.complement()(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(x_axis.complement()(1, 0), 1.0, 1e-15);
  const Subspace l = random_subspace(5, 2, 99);
  const Subspace again = Subspace::from_orthonormal(l.basis());
  EXPECT_EQ(l.complement(), again.complement());
}

TEST(PrincipalDecomposition, IdenticalSubspaces) {
  const Subspace l = random_subspace(6, 3, 3);
  const auto pd = principal_decomposition(l, l);
  EXPECT_LT(pd.angles.norm(), 1e-12);
  EXPECT_EQ(pd.interaction_dim, 0);
}

TEST(PrincipalDecomposition, OrthogonalLines) {
  const auto pd = principal_decomposition(Subspace::line_2d(0.0), Subspace::line_2d(kPi / 2));
  EXPECT_DOUBLE_EQ(pd.angles[0], kPi / 2);
  EXPECT_EQ(pd.interaction_dim, 1);
  EXPECT_NEAR(std::abs(pd.principal_first(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(pd.complementary(1, 0)), 1.0, 1e-15);
}

TEST(PrincipalDecomposition, HandComputedOverlapInR4) {
  // Overlap of {e1, e2} with {e1, cos(.3) e2 + sin(.3) e3} is diag(1, cos .3),
  // whose singular values are 1 and cos .3.
  const VectorXd e1 = VectorXd::Unit(4, 0), e2 = VectorXd::Unit(4, 1), e3 = VectorXd::Unit(4, 2);
  const Subspace a = span2(e1, e2);
  const Subspace b = span2(e1, std::cos(0.3) * e2 + std::sin(0.3) * e3);
  MatrixXd overlap = b.basis().transpose() * a.basis();
  Eigen::JacobiSVD<MatrixXd> svd(overlap);
  EXPECT_NEAR(svd.singularValues()[0], 1.0, 1e-14);
  EXPECT_NEAR(svd.singularValues()[1], std::cos(0.3), 1e-14);

  const auto pd = principal_decomposition(a, b);
  EXPECT_NEAR(pd.angles[0], 0.3, 1e-14);
  EXPECT_NEAR(pd.angles[1], 0.0, 1e-14);
  EXPECT_EQ(pd.interaction_dim, 1);
}

TEST(PrincipalDecomposition, InvariantsOnRandomPairs) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const Index D = 2 + trial % 7;
    const Index d = 1 + (trial / 7) % D;
    const Subspace a = random_subspace(D, d, rng);
    // Mix generic pairs with pairs sharing a common direction (k < d).
    Subspace b = random_subspace(D, d, rng);
    if (trial % 3 == 0 && d >= 2) {
      MatrixXd cols = b.basis();
      cols.col(0) = a.basis().col(0);
      b = Subspace::span_of(cols);
    }
    const auto pd = principal_decomposition(a, b);
    const Index k = pd.interaction_dim;
    for (Index i = 0; i + 1 < d; ++i) EXPECT_GE(pd.angles[i], pd.angles[i + 1]);
    for (Index i = 0; i < d; ++i) {
      EXPECT_GE(pd.angles[i], 0.0);
      EXPECT_LE(pd.angles[i], kPi / 2 + 1e-15);
      EXPECT_NEAR(pd.principal_first.col(i).dot(pd.principal_second.col(i)), std::cos(pd.angles[i]), 1e-9);
      if (i >= k) {
        EXPECT_EQ(pd.angles[i], 0.0);
        EXPECT_LT((pd.complementary.col(i) - pd.principal_first.col(i)).norm(), 1e-15);
      } else {
        const VectorXd rebuilt = std::cos(pd.angles[i]) * pd.principal_first.col(i) +
                                 std::sin(pd.angles[i]) * pd.complementary.col(i);
        EXPECT_LT((rebuilt - pd.principal_second.col(i)).norm(), 1e-9);
      }
    }
    if (k >= 1) EXPECT_GT(pd.angles[k - 1], 0.0);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j) {
        EXPECT_NEAR(pd.complementary.col(i).dot(pd.principal_first.col(j)), 0.0, 1e-9);
        if (i != j) EXPECT_NEAR(pd.principal_first.col(i).dot(pd.principal_second.col(j)), 0.0, 1e-9);
      }
  }
}

TEST(PrincipalDecomposition, SignConventionFirstNonzeroPositive) {
  Rng rng(5);
  const auto pd = principal_decomposition(random_subspace(5, 3, rng), random_subspace(5, 3, rng));
  for (Index i = 0; i < 3; ++i) {
    for (Index r = 0; r < 5; ++r) {
      if (std::abs(pd.principal_first(r, i)) > 1e-12) {
        EXPECT_GT(pd.principal_first(r, i), 0.0);
        break;
      }
    }
  }
}

TEST(PrincipalDecomposition, BasisIndependent) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Index D = 3 + trial % 5, d = 1 + trial % (D - 1);
    const Subspace a = random_subspace(D, d, rng), b = random_subspace(D, d, rng);
    const Subspace a2 = Subspace::from_orthonormal(a.basis() * random_rotation(rng, d));
    const Subspace b2 = Subspace::from_orthonormal(b.basis() * random_rotation(rng, d));
    const auto p1 = principal_decomposition(a, b), p2 = principal_decomposition(a2, b2);
    EXPECT_LT((p1.angles - p2.angles).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(PrincipalDecomposition, DimensionMismatch) {
  EXPECT_THROW(principal_decomposition(random_subspace(4, 2, 1), random_subspace(4, 1, 1)), DimensionError);
  EXPECT_THROW(principal_decomposition(random_subspace(4, 2, 1), random_subspace(5, 2, 1)), DimensionError);
  EXPECT_THROW(geodesic_distance(random_subspace(4, 2, 1), random_subspace(5, 2, 1)), DimensionError);
}

TEST(GeodesicDistance, Examples) {
  const Subspace l = random_subspace(5, 2, 8);
  EXPECT_NEAR(geodesic_distance(l, l), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(geodesic_distance(Subspace::line_2d(0.0), Subspace::line_2d(kPi / 2)), kPi / 2);
  EXPECT_NEAR(geodesic_distance(Subspace::line_2d(0.0), Subspace::line_2d(0.7)), 0.7, 1e-14);
  EXPECT_NEAR(geodesic_distance(Subspace::line_2d(0.2), Subspace::line_2d(0.2 + kPi)), 0.0, 1e-12);
}

TEST(GeodesicDistance, IsAMetricOnRandomTriples) {
  Rng rng(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index D = 2 + trial % 6, d = 1 + trial % D;
    const Subspace a = random_subspace(D, d, rng), b = random_subspace(D, d, rng),
                   c = random_subspace(D, d, rng);
    const double ab = geodesic_distance(a, b), ba = geodesic_distance(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_LE(ab, geodesic_distance(a, c) + geodesic_distance(c, b) + 1e-9);
    EXPECT_GE(ab, 0.0);
  }
}

TEST(GeodesicPoint, EndpointsAndAngleInterpolation) {
  Rng rng(4);
  const Subspace a = random_subspace(6, 2, rng), b = random_subspace(6, 2, rng);
  const auto pd = principal_decomposition(a, b);
  expect_same_subspace(geodesic_point(pd, 0.0), a);
  expect_same_subspace(geodesic_point(pd, 1.0), b);
  expect_same_subspace(Geodesic::from(pd).at(1.0), b);

  const auto line_pd = principal_decomposition(Subspace::line_2d(0.0), Subspace::line_2d(0.8));
  EXPECT_NEAR(geodesic_distance(geodesic_point(line_pd, 0.5), Subspace::line_2d(0.4)), 0.0, 1e-12);
}

TEST(GeodesicPoint, ErrorsOnOrthogonalAndBadT) {
  const auto pd = principal_decomposition(Subspace::line_2d(0.0), Subspace::line_2d(kPi / 2));
  EXPECT_THROW(geodesic_point(pd, 0.5), GeodesicNotUnique);
  const auto ok = principal_decomposition(Subspace::line_2d(0.0), Subspace::line_2d(0.5));
  EXPECT_THROW(geodesic_point(ok, 1.5), ParameterError);
  EXPECT_THROW(geodesic_point(ok, -0.1), ParameterError);
}

TEST(GeodesicPoint, ReproducesScaledAnglesAndDistance) {
  Rng rng(1001);
  for (int trial = 0; trial < 200; ++trial) {
    const Index D = 3 + trial % 5, d = 1 + trial % (D - 1);
    const Subspace a = random_subspace(D, d, rng), b = random_subspace(D, d, rng);
    const auto pd = principal_decomposition(a, b);
    if (pd.angles[0] > kPi / 2 - 1e-3) continue;
    const double total = pd.angles.norm();
    for (double t : {0.1, 0.37, 0.5, 0.9}) {
      const auto sub = principal_decomposition(a, geodesic_point(pd, t));
      EXPECT_LT((sub.angles - t * pd.angles).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_NEAR(sub.angles.norm(), t * total, 1e-8);
    }
  }
}

TEST(PointDistance, Examples) {
  const Subspace x_axis = Subspace::line_2d(0.0);
  EXPECT_DOUBLE_EQ(point_distance(Eigen::Vector2d(0, 3), x_axis), 3.0);
  EXPECT_NEAR(point_distance(Eigen::Vector2d(-4, 0), x_axis), 0.0, 1e-15);
  EXPECT_NEAR(point_distance(Eigen::Vector3d(1, 1, 1), Subspace::coordinate(3, 1)), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(point_distance(Eigen::Vector3d(1, 1, 1), x_axis), DimensionError);
}

TEST(PointDistance, MatchesLeastSquaresResidual) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Index D = 2 + trial % 6, d = 1 + trial % D;
    const MatrixXd cols = gaussian_matrix(rng, D, d);
    const Subspace l = Subspace::span_of(cols);
    const VectorXd x = gaussian_vector(rng, D);
    EXPECT_NEAR(point_distance(x, l), lpsub::testing::residual_distance(x, cols), 1e-10);
    const VectorXd inside = cols * gaussian_vector(rng, d);
    EXPECT_LT(point_distance(inside, l), 1e-12 * std::max(1.0, inside.norm()));
  }
}

// |dist(x, L1) - dist(x, L2)| <= |x| dist_G(L1, L2).
TEST(PointDistance, LipschitzInTheSubspace) {
  Rng rng(2);
  for (int trial = 0; trial < 10000; ++trial) {
    const Index D = 2 + trial % 6, d = 1 + trial % D;
    const Subspace l1 = random_subspace(D, d, rng), l2 = random_subspace(D, d, rng);
    const VectorXd x = gaussian_vector(rng, D) * (0.1 + 3 * uniform01(rng));
    const double lhs = std::abs(point_distance(x, l1) - point_distance(x, l2));
    ASSERT_LE(lhs, x.norm() * geodesic_distance(l1, l2) + 1e-12);
  }
}

TEST(Project, ExamplesAndReconstruction) {
  const Subspace x_axis = Subspace::line_2d(0.0);
  auto [tan1, orth1] = project(Eigen::Vector2d(1, 2), x_axis);
  EXPECT_DOUBLE_EQ(tan1[0], 1.0);
  EXPECT_DOUBLE_EQ(std::abs(orth1[0]), 2.0);

  Rng rng(9);
  const Subspace l = random_subspace(5, 2, rng);
  const VectorXd inside = l.basis() * Eigen::Vector2d(0.3, -1.2);
  auto [t_in, o_in] = project(inside, l);
  EXPECT_LT((t_in - Eigen::Vector2d(0.3, -1.2)).norm(), 1e-14);
  EXPECT_LT(o_in.norm(), 1e-14);
  const VectorXd normal = l.complement() * Eigen::Vector3d(1, 2, 3);
  auto [t_out, o_out] = project(normal, l);
  EXPECT_LT(t_out.norm(), 1e-14);
  EXPECT_LT((o_out - Eigen::Vector3d(1, 2, 3)).norm(), 1e-14);

  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd x = gaussian_vector(rng, 5);
    auto [t, o] = project(x, l);
    EXPECT_NEAR(t.squaredNorm() + o.squaredNorm(), x.squaredNorm(), 1e-12);
    EXPECT_LT((l.basis() * t + l.complement() * o - x).norm(), 1e-10);
  }
  EXPECT_THROW(project(Eigen::Vector3d(1, 2, 3), x_axis), DimensionError);
}

TEST(RandomSubspace, DeterministicAndFullSpace) {
  EXPECT_EQ(random_subspace(2, 1, 7).basis(), random_subspace(2, 1, 7).basis());
  EXPECT_NE(random_subspace(2, 1, 7).basis(), random_subspace(2, 1, 8).basis());
  const Subspace full = random_subspace(3, 3, 12345);
  EXPECT_LT((full.projector() - MatrixXd::Identity(3, 3)).norm(), 1e-12);
  EXPECT_EQ(full.complement().cols(), 0);
  EXPECT_THROW(random_subspace(2, 3, 1), DimensionError);
  EXPECT_THROW(random_subspace(2, 0, 1), DimensionError);
}

// Rotation invariance: the mean projector of a Haar-random d-subspace is (d/D) I.
TEST(RandomSubspace, MeanProjectorIsIsotropic) {
  for (auto [D, d] : {std::pair<Index, Index>{3, 1}, {4, 2}}) {
    MatrixXd mean = MatrixXd::Zero(D, D);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) mean += random_subspace(D, d, stream_seed(42, static_cast<std::uint64_t>(i))).projector();
    mean /= draws;
    const double target = static_cast<double>(d) / static_cast<double>(D);
    EXPECT_LT((mean - target * MatrixXd::Identity(D, D)).cwiseAbs().maxCoeff(), 0.02 * target);
  }
}

TEST(BasisCsv, RoundTripIsExact) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Subspace l = random_subspace(2 + trial % 5, 1 + trial % 2, rng);
    std::stringstream ss;
    write_basis_csv(ss, l);
    const Subspace back = read_basis_csv(ss);
    EXPECT_EQ(back.basis(), l.basis());
  }
  std::stringstream rows("1,0\n0,1\n0,0\n");
  EXPECT_EQ(read_basis_csv(rows).dim(), 2);
}
