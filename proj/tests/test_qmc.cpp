#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "riskopt/qmc/base_samples.hpp"
#include "riskopt/qmc/normal.hpp"
#include "riskopt/qmc/sobol.hpp"

using namespace riskopt;

namespace {

// Unscrambled Sobol reference (scipy.stats.qmc.Sobol, scramble=False): rows
// 0,5,10,...,60 of selected columns, multiplied by 64.
struct Column {
  int dim;
  std::vector<int> scaled;
};

const std::vector<Column> kReference = {
    {0, {0, 56, 60, 4, 30, 42, 34, 19, 15, 55, 53, 13, 17}},
    {1, {0, 56, 4, 60, 6, 42, 2, 33, 5, 61, 31, 39, 3}},
    {2, {0, 8, 44, 36, 54, 2, 26, 29, 17, 25, 35, 43, 39}},
    {7, {0, 24, 12, 20, 14, 42, 2, 59, 23, 15, 45, 53, 25}},
    {50, {0, 40, 52, 28, 54, 58, 2, 3, 23, 63, 29, 53, 33}},
    {300, {0, 8, 28, 20, 54, 50, 42, 15, 51, 59, 49, 57, 5}},
    {1110, {0, 24, 36, 60, 34, 46, 6, 55, 51, 43, 13, 21, 17}},
};

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST(Sobol, UnscrambledMatchesReferenceDirectionNumbers) {
  const Matrix p = qmc::sobol_points(1111, 64, 0, false);
  for (const Column& c : kReference)
    for (std::size_t r = 0; r < c.scaled.size(); ++r)
      EXPECT_EQ(p(static_cast<Eigen::Index>(5 * r), c.dim) * 64.0, c.scaled[r]) << "dim " << c.dim << " row " << 5 * r;
}

TEST(Sobol, PointsInUnitInterval) {
  const Matrix p = qmc::sobol_points(9, 777, 42);
  EXPECT_GE(p.minCoeff(), 0.0);
  EXPECT_LT(p.maxCoeff(), 1.0);
}

TEST(Sobol, OneDimensionalMeanIsCentered) {
  const Matrix p = qmc::sobol_points(1, 1024, 5);
  EXPECT_NEAR(p.mean(), 0.5, 1e-3);
}

TEST(Sobol, ScrambledPowerOfTwoIsStratified) {
  // Each of the 64 intervals [k/64, (k+1)/64) holds exactly one point.
  const Matrix p = qmc::sobol_points(3, 64, 17);
  for (int d = 0; d < 3; ++d) {
    std::vector<int> hits(64, 0);
    for (int i = 0; i < 64; ++i) ++hits[static_cast<int>(p(i, d) * 64.0)];
    EXPECT_EQ(*std::min_element(hits.begin(), hits.end()), 1);
  }
}

TEST(Sobol, DeterministicPerSeedAndSeedSensitive) {
  EXPECT_EQ(qmc::sobol_points(4, 100, 8), qmc::sobol_points(4, 100, 8));
  EXPECT_NE(qmc::sobol_points(4, 100, 8), qmc::sobol_points(4, 100, 9));
}

TEST(Sobol, RejectsBadShapes) {
  EXPECT_THROW(qmc::sobol_points(1112, 4, 0), InvalidArgument);
  EXPECT_THROW(qmc::sobol_points(0, 4, 0), InvalidArgument);
  EXPECT_THROW(qmc::sobol_points(2, 0, 0), InvalidArgument);
}

TEST(ChildSeed, DistinctStreams) {
  EXPECT_NE(qmc::child_seed(1, 0), qmc::child_seed(1, 1));
  EXPECT_NE(qmc::child_seed(1, 0), qmc::child_seed(2, 0));
  EXPECT_EQ(qmc::child_seed(7, 3), qmc::child_seed(7, 3));
}

TEST(Normal, InverseCdfValues) {
  EXPECT_EQ(qmc::inverse_normal_cdf(0.5), 0.0);
  // mpmath: sqrt(2) * erfinv(0.95)
  EXPECT_NEAR(qmc::inverse_normal_cdf(0.975), 1.95996398454005423552459443052, 1e-12);
  EXPECT_NEAR(qmc::inverse_normal_cdf(0.3), -0.5244005127080409, 1e-12);
  EXPECT_NEAR(qmc::inverse_normal_cdf(0.975), 1.959964, 1e-5);
}

TEST(Normal, ClampsEndpoints) {
  const double lo = qmc::inverse_normal_cdf(0.0);
  const double hi = qmc::inverse_normal_cdf(1.0);
  EXPECT_TRUE(std::isfinite(lo));
  EXPECT_TRUE(std::isfinite(hi));
  EXPECT_NEAR(lo, -7.034483825301131, 1e-9);
  EXPECT_NEAR(hi, 7.034483825301131, 1e-3);
}

TEST(Normal, Symmetry) {
  for (double u = 0.001; u < 0.5; u += 0.0137)
    EXPECT_NEAR(qmc::inverse_normal_cdf(u), -qmc::inverse_normal_cdf(1.0 - u), 1e-9);
}

TEST(Normal, RoundTripAgainstErfc) {
  for (double u = 0.01; u < 1.0; u += 0.01) EXPECT_NEAR(phi(qmc::inverse_normal_cdf(u)), u, 1e-12);
}

TEST(Normal, KolmogorovSmirnov) {
  const Matrix z = qmc::normal_transform(qmc::sobol_points(1, 4096, 123));
  std::vector<double> v(z.data(), z.data() + z.size());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = phi(v[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  // Asymptotic critical value at significance 1e-3.
  EXPECT_LT(d, 1.9495 / std::sqrt(n));
}

TEST(BaseSamples, ShapesAndDeterminism) {
  const qmc::WDomain dom = qmc::WDomain::box(Vector::Zero(2), Vector::Ones(2));
  const auto a = qmc::make_base_samples(5, 7, 40, dom, qmc::WSource::Subsample, 99);
  EXPECT_EQ(a.k(), 5);
  EXPECT_EQ(a.m(), 7);
  EXPECT_EQ(a.l(), 40);
  EXPECT_EQ(a.zl.size(), 6u);
  EXPECT_EQ(a.wset.size(), 40);
  EXPECT_TRUE(a.wset.weights.isApproxToConstant(1.0 / 40, 0.0));
  EXPECT_GE(a.wset.points.minCoeff(), 0.0);
  EXPECT_LT(a.wset.points.maxCoeff(), 1.0);
  for (const Matrix& z : a.zl) EXPECT_TRUE(z.allFinite());
  const auto b = qmc::make_base_samples(5, 7, 40, dom, qmc::WSource::Subsample, 99);
  EXPECT_EQ(a.z0, b.z0);
  EXPECT_EQ(a.wset.points, b.wset.points);
  for (int i = 0; i <= 5; ++i) EXPECT_EQ(a.zl[i], b.zl[i]);
}

TEST(BaseSamples, FiniteSetUsedVerbatim) {
  Matrix pts(12, 2);
  Vector w(12);
  for (int i = 0; i < 12; ++i) {
    pts(i, 0) = 0.25 * (1 + i / 4);
    pts(i, 1) = 0.2 * (1 + i % 4);
    w[i] = 1.0 / 12;
  }
  const risk::WSet set{pts, w};
  const auto b = qmc::make_base_samples(3, 4, 12, qmc::WDomain::finite_set(set), qmc::WSource::Full, 1);
  EXPECT_EQ(b.wset.points, pts);
  EXPECT_EQ(b.wset.weights, w);
  EXPECT_THROW(qmc::make_base_samples(3, 4, 13, qmc::WDomain::finite_set(set), qmc::WSource::Subsample, 1),
               InvalidArgument);
}

TEST(BaseSamples, IndependentSlicesWithoutCrn) {
  const qmc::WDomain dom = qmc::WDomain::box(Vector::Zero(1), Vector::Ones(1));
  const auto b = qmc::make_base_samples(3, 4, 5, dom, qmc::WSource::Subsample, 2, false);
  EXPECT_NE(b.zl[0], b.zl[1]);
  const auto c = qmc::make_base_samples(3, 4, 5, dom, qmc::WSource::Subsample, 2, true);
  EXPECT_EQ(c.zl[0], c.zl[3]);
}

TEST(BaseSamples, RejectsNonPositiveCounts) {
  const qmc::WDomain dom = qmc::WDomain::box(Vector::Zero(1), Vector::Ones(1));
  EXPECT_THROW(qmc::make_base_samples(0, 4, 5, dom, qmc::WSource::Subsample, 2), InvalidArgument);
  EXPECT_THROW(qmc::make_base_samples(1, 4, 5, dom, qmc::WSource::Full, 2), InvalidArgument);
}
