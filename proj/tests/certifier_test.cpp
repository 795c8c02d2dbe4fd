#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lpsub/certifier.hpp"
#include "lpsub/hlm.hpp"
#include "test_util.hpp"

using namespace lpsub;
using lpsub::testing::example_line_data;

namespace {

const double kPi = std::numbers::pi;

double sum_abs(const std::vector<double>& a) {
  double s = 0;
  for (double x : a) s += std::abs(x);
  return s;
}

Dataset with_outliers(Rng& rng, const Subspace& l, Index n1, Index n0) {
  MatrixXd pts(l.ambient_dim(), n1 + n0);
  for (Index i = 0; i < n1; ++i) pts.col(i) = l.basis() * gaussian_vector(rng, l.dim());
  for (Index i = 0; i < n0; ++i) pts.col(n1 + i) = gaussian_vector(rng, l.ambient_dim());
  return Dataset(pts);
}

}  // namespace

TEST(CertifyL1, LinePlusPointXAxis) {
  const std::vector<double> a = {0.5, -0.3, 0.9};
  const double t0 = 1.2, theta0 = 0.7;
  const Dataset data = example_line_data(a, t0, theta0);
  const auto r = certify_l1(data, Subspace::line_2d(0.0));
  EXPECT_EQ(r.verdict, Verdict::CertifiedLocalMin);
  EXPECT_FALSE(r.heuristic);
  EXPECT_NEAR(r.margin, sum_abs(a) - t0 * std::cos(theta0), 1e-12);

  const auto fail = certify_l1(example_line_data({0.1, 0.2}, 2.0, 0.3), Subspace::line_2d(0.0));
  EXPECT_EQ(fail.verdict, Verdict::SufficientConditionFails);
  EXPECT_NEAR(fail.margin, 0.3 - 2.0 * std::cos(0.3), 1e-12);
}

TEST(CertifyL1, LinePlusPointOutlierLine) {
  const std::vector<double> a = {0.2, -0.1, 0.3};
  const double t0 = 1.5, theta0 = 0.4;
  const Dataset data = example_line_data(a, t0, theta0);
  const auto r = certify_l1(data, Subspace::line_2d(theta0));
  // X1 = {x}, B = sum a_i cos(theta0) sign-adjusted; margin t0 - cos(theta0) sum|a|.
  EXPECT_EQ(r.verdict, Verdict::CertifiedLocalMin);
  EXPECT_NEAR(r.margin, t0 - std::cos(theta0) * sum_abs(a), 1e-12);

  const auto fail = certify_l1(example_line_data({2.0, 1.0}, 1.0, 0.2), Subspace::line_2d(0.2));
  EXPECT_EQ(fail.verdict, Verdict::SufficientConditionFails);
}

TEST(CertifyL1, LinePlusPointPerpendicularCertifiesBoth) {
  for (double t0 : {0.1, 1.0, 10.0}) {
    const Dataset data = example_line_data({0.4, -0.7}, t0, kPi / 2);
    EXPECT_EQ(certify_l1(data, Subspace::line_2d(0.0)).verdict, Verdict::CertifiedLocalMin);
    EXPECT_EQ(certify_l1(data, Subspace::line_2d(kPi / 2)).verdict, Verdict::CertifiedLocalMin);
  }
}

TEST(CertifyL1, LineThroughNoPointFails) {
  const Dataset data = example_line_data({0.4, -0.7}, 1.0, 0.6);
  const auto r = certify_l1(data, Subspace::line_2d(0.3));
  EXPECT_EQ(r.verdict, Verdict::SufficientConditionFails);
  EXPECT_LT(r.margin, 0.0);
}

TEST(CertifyL1, NoOutliersCertifiesWithInlierMargin) {
  Rng rng(3);
  const Subspace l = random_subspace(5, 2, rng);
  const Dataset data = with_outliers(rng, l, 50, 0);
  const auto r = certify_l1(data, l, 4000, 1);
  EXPECT_EQ(r.verdict, Verdict::CertifiedLocalMin);
  EXPECT_TRUE(r.heuristic);
  EXPECT_LE(r.samples_used, 4000);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_NEAR(r.witness->c.norm(), 1.0, 1e-12);
  EXPECT_LT((r.witness->v.transpose() * r.witness->v - MatrixXd::Identity(2, 2)).norm(), 1e-10);
  // The minimum of sum |C V a| over unit C is at most the smallest column-sum along an axis.
  MatrixXd coords(2, 50);
  for (Index i = 0; i < 50; ++i) coords.col(i) = l.basis().transpose() * data.point(i);
  EXPECT_LE(r.margin, coords.row(0).cwiseAbs().sum() + 1e-9);
}

TEST(CertifyL1, MarginMatchesWitness) {
  Rng rng(8);
  const Subspace l = random_subspace(4, 2, rng);
  const Dataset data = with_outliers(rng, l, 40, 30);
  const auto r = certify_l1(data, l, 3000, 2);
  ASSERT_TRUE(r.witness.has_value());
  const auto s = detail::split_for_certificate(data, l);
  const double g = detail::certificate_gap(s, r.witness->c, r.witness->v);
  if (r.margin != 0.0) EXPECT_NEAR(r.margin, g, 1e-12);
}

TEST(CertifyL1, FindsViolationForWeakInliers) {
  Rng rng(21);
  const Subspace l = random_subspace(4, 2, rng);
  const Dataset data = with_outliers(rng, l, 2, 200);
  EXPECT_EQ(certify_l1(data, l, 2000, 5).verdict, Verdict::SufficientConditionFails);
}

TEST(CertifyL1, DeterministicInSeed) {
  Rng rng(4);
  const Subspace l = random_subspace(5, 3, rng);
  const Dataset data = with_outliers(rng, l, 30, 20);
  const auto a = certify_l1(data, l, 1500, 9);
  const auto b = certify_l1(data, l, 1500, 9);
  EXPECT_EQ(a.margin, b.margin);
  EXPECT_EQ(a.samples_used, b.samples_used);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

// The one-sided p = 1 derivative at t = 0 along a geodesic with angles theta is
// sum |C V a| - tr(C V B U^T) >= g(C, V) >= m |theta| for C = diag(theta).
TEST(CertifyL1, ConsistentWithGeodesicDerivative) {
  for (auto [D, d] : {std::pair<Index, Index>{3, 1}, {4, 2}, {6, 3}}) {
    Rng rng(100 + static_cast<std::uint64_t>(D));
    const Subspace l = random_subspace(D, d, rng);
    const Dataset data = with_outliers(rng, l, 60, 15);
    const auto r = certify_l1(data, l, 20000, 3);
    ASSERT_EQ(r.verdict, Verdict::CertifiedLocalMin) << D << " " << d;
    for (int trial = 0; trial < 100; ++trial) {
      const auto pd = principal_decomposition(l, random_subspace(D, d, rng));
      const double deriv = geodesic_derivative(data, pd, 1.0, 0.0);
      EXPECT_GE(deriv, (r.margin - 1e-6) * pd.angles.norm()) << D << " " << d << " " << trial;
      EXPECT_GT(deriv, 0.0);
    }
  }
}

TEST(CertifyL1, ScaleCovariance) {
  Rng rng(12);
  const Subspace l = random_subspace(4, 2, rng);
  const Dataset data = with_outliers(rng, l, 30, 10);
  const auto base = certify_l1(data, l, 3000, 7);
  for (double s : {0.01, 3.0, 250.0}) {
    const auto scaled = certify_l1(Dataset(s * data.points), l, 3000, 7);
    EXPECT_EQ(scaled.verdict, base.verdict);
    EXPECT_NEAR(scaled.margin, s * base.margin, 1e-9 * s * std::abs(base.margin));
  }
  const Dataset ex = example_line_data({0.5, 0.3}, 1.0, 0.5);
  for (double s : {0.5, 7.0}) {
    const auto a = certify_l1(ex, Subspace::line_2d(0.0));
    const auto b = certify_l1(Dataset(s * ex.points), Subspace::line_2d(0.0));
    EXPECT_EQ(a.verdict, b.verdict);
    EXPECT_NEAR(b.margin, s * a.margin, 1e-12 * s);
  }
}

// Inliers uniform on a unit segment of a line in R^3 with spherical outliers.
TEST(CertifyL1, DeskScaleSingleSubspaceIsLocalMinimum) {
  HlmModelConfig cfg;
  cfg.ambient_dim = 3;
  cfg.subspace_dim = 1;
  cfg.components.push_back({Subspace::coordinate(3, 1), 2000.0 / 2200.0, 1.0, Distribution::UniformBall});
  cfg.outlier = {200.0 / 2200.0, 1.0, Distribution::UniformSphere};
  int certified = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(trial_seed(11, 0, trial));
    MatrixXd pts(3, 2200);
    for (Index i = 0; i < 2000; ++i) pts.col(i) = sample_in_subspace(rng, cfg.components[0].subspace.basis(), 1.0, Distribution::UniformBall);
    for (Index i = 0; i < 200; ++i) pts.col(2000 + i) = random_unit_vector(rng, 3);
    certified += certify_l1(Dataset(pts), cfg.components[0].subspace).verdict == Verdict::CertifiedLocalMin;
  }
  EXPECT_GE(certified, 95);
}

TEST(CertifyPLess1, SpanCondition) {
  MatrixXd pts(3, 3);
  pts << 1, 0, 1, 0, 1, 1, 0, 0, 0;
  EXPECT_EQ(certify_p_less_1(Dataset(pts), Subspace::coordinate(3, 2)).verdict, Verdict::CertifiedLocalMin);
  MatrixXd deficient(3, 3);
  deficient << 1, 2, 0, 0, 0, 0, 0, 0, 1;
  const auto r = certify_p_less_1(Dataset(deficient), Subspace::coordinate(3, 2));
  EXPECT_EQ(r.verdict, Verdict::Inconclusive);
  EXPECT_EQ(r.margin, 0.0);
  const Dataset ex = example_line_data({0.0, 0.3}, 1.0, 0.5);
  EXPECT_EQ(certify_p_less_1(ex, Subspace::line_2d(0.0)).verdict, Verdict::CertifiedLocalMin);
  EXPECT_EQ(certify_p_less_1(ex, Subspace::line_2d(0.5)).verdict, Verdict::CertifiedLocalMin);
  EXPECT_EQ(certify_p_less_1(example_line_data({0.0}, 1.0, 0.5), Subspace::line_2d(0.0)).verdict,
            Verdict::Inconclusive);
}

TEST(CertifyPLess1, MarginIsSmallestSingularValue) {
  MatrixXd pts(2, 2);
  pts << 3, 0, 0, 0.5;
  const auto r = certify_p_less_1(Dataset(pts), Subspace::coordinate(2, 2));
  EXPECT_EQ(r.verdict, Verdict::CertifiedLocalMin);
  EXPECT_NEAR(r.margin, 0.5, 1e-14);
}

TEST(CheckNecessary, SymmetricPairHolds) {
  Rng rng(5);
  const Subspace l = random_subspace(4, 2, rng);
  MatrixXd pts(4, 20);
  for (Index i = 0; i < 10; ++i) {
    const VectorXd y = gaussian_vector(rng, 4);
    pts.col(2 * i) = y;
    pts.col(2 * i + 1) = l.projector() * y - (y - l.projector() * y);  // reflection across L
  }
  for (double p : {1.5, 2.0, 3.0}) {
    const auto r = check_necessary_p_gt_1(Dataset(pts), l, p);
    EXPECT_EQ(r.verdict, Verdict::NecessaryConditionHolds) << p;
    EXPECT_GT(r.margin, 0.0);
    EXPECT_LE(*r.statistic, 1e-14);
  }
}

TEST(CheckNecessary, LinePlusPointStatistic) {
  const std::vector<double> a = {0.5, -0.3};
  const double t0 = 1.3;
  for (double theta0 : {0.3, 0.9, 1.4}) {
    for (double p : {1.5, 2.0, 3.0}) {
      const Dataset data = example_line_data(a, t0, theta0);
      const auto r = check_necessary_p_gt_1(data, Subspace::line_2d(0.0), p);
      EXPECT_EQ(r.verdict, Verdict::NecessaryConditionFails);
      const double expected = std::pow(t0, p) * std::cos(theta0) * std::pow(std::sin(theta0), p - 1.0);
      EXPECT_NEAR(*r.statistic, expected, 1e-12);
      EXPECT_LT(r.margin, 0.0);
    }
  }
  EXPECT_EQ(check_necessary_p_gt_1(example_line_data(a, t0, kPi / 2), Subspace::line_2d(0.0), 2.0).verdict,
            Verdict::NecessaryConditionHolds);
}

TEST(CheckNecessary, PerpendicularOutlierHolds) {
  MatrixXd pts(3, 3);
  pts << 1, 0, 0, 0, 1, 0, 0, 0, 2;
  const auto r = check_necessary_p_gt_1(Dataset(pts), Subspace::coordinate(3, 2), 2.5);
  EXPECT_EQ(r.verdict, Verdict::NecessaryConditionHolds);
  EXPECT_EQ(r.samples_used, 1);
}

TEST(CheckNecessary, PLessEqualOneWithoutInliers) {
  MatrixXd pts(2, 2);
  pts << 1, 1, 1, -1;
  EXPECT_EQ(check_necessary_p_gt_1(Dataset(pts), Subspace::line_2d(0.0), 0.5).verdict,
            Verdict::NecessaryConditionHolds);
  EXPECT_THROW(check_necessary_p_gt_1(example_line_data({1.0}, 1.0, 0.5), Subspace::line_2d(0.0), 1.0),
               ParameterError);
  EXPECT_THROW(check_necessary_p_gt_1(Dataset(pts), Subspace::line_2d(0.0), 0.0), ParameterError);
}

TEST(CheckNecessary, ContinuousOutliersFailAtTrueSubspace) {
  int failures = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(trial_seed(31, 0, trial));
    const Subspace l = Subspace::coordinate(3, 1);
    MatrixXd pts(3, 300);
    for (Index i = 0; i < 200; ++i) pts.col(i) = sample_in_subspace(rng, l.basis(), 1.0, Distribution::UniformBall);
    for (Index i = 0; i < 100; ++i) pts.col(200 + i) = random_in_ball(rng, 3, 1.0);
    const auto r = check_necessary_p_gt_1(Dataset(pts), l, 2.0);
    failures += r.verdict == Verdict::NecessaryConditionFails && r.margin < 0.0;
  }
  EXPECT_EQ(failures, 100);
}

TEST(Certificate, JsonShape) {
  const auto r = certify_l1(example_line_data({0.5}, 1.0, 0.5), Subspace::line_2d(0.0));
  const auto j = to_json(r);
  EXPECT_EQ(j["verdict"], "SufficientConditionFails");
  EXPECT_EQ(j["samples_used"], 1);
  EXPECT_EQ(j["witness"]["C"].size(), 1u);
  EXPECT_TRUE(j["statistic"].is_null());
}
