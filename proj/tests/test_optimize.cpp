#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "riskopt/optimize/lbfgs.hpp"
#include "riskopt/optimize/multistart.hpp"

using namespace riskopt;
using optimize::LbfgsOptions;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

double rosenbrock(const Vector& x, Vector& g) {
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  g.resize(2);
  g[0] = -2.0 * a - 400.0 * x[0] * b;
  g[1] = 200.0 * b;
  return a * a + 100.0 * b * b;
}

}  // namespace

TEST(Lbfgs, ConvexQuadratic) {
  auto f = [](const Vector& x, Vector& g) {
    g = 2.0 * (x.array() - 0.3).matrix();
    return (x.array() - 0.3).square().sum();
  };
  const auto r = optimize::lbfgs_box(f, v1(0.9), v1(0.0), v1(1.0));
  EXPECT_NEAR(r.x[0], 0.3, 1e-6);
}

TEST(Lbfgs, ActiveBound) {
  auto f = [](const Vector& x, Vector& g) {
    g = 2.0 * (x.array() - 2.0).matrix();
    return (x.array() - 2.0).square().sum();
  };
  const auto r = optimize::lbfgs_box(f, v1(0.2), v1(0.0), v1(1.0));
  EXPECT_EQ(r.x[0], 1.0);
  EXPECT_TRUE(r.converged);
}

TEST(Lbfgs, Rosenbrock) {
  Vector start(2), lo(2), hi(2);
  start << -1.2, 1.0;
  lo << -2.0, -2.0;
  hi << 2.0, 2.0;
  LbfgsOptions o;
  o.max_iterations = 200;
  o.tolerance = 1e-10;
  const auto r = optimize::lbfgs_box(rosenbrock, start, lo, hi, o);
  EXPECT_LT(r.value, 1e-6);
  EXPECT_LE(r.iterations, 200);
}

TEST(Lbfgs, StaysFeasibleAndReturnsBestSeen) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Vector c(3);
    for (int k = 0; k < 3; ++k) c[k] = 2.0 * u(rng);
    double best = std::numeric_limits<double>::infinity();
    bool feasible = true;
    auto f = [&](const Vector& x, Vector& g) {
      feasible = feasible && (x.array() >= 0.0).all() && (x.array() <= 1.0).all();
      g.resize(3);
      double v = 0.0;
      for (int k = 0; k < 3; ++k) {
        v += std::cos(3.0 * x[k]) + (x[k] - c[k]) * (x[k] - c[k]);
        g[k] = -3.0 * std::sin(3.0 * x[k]) + 2.0 * (x[k] - c[k]);
      }
      best = std::min(best, v);
      return v;
    };
    Vector start(3);
    for (int k = 0; k < 3; ++k) start[k] = 0.5 + 0.5 * u(rng);
    const auto r = optimize::lbfgs_box(f, start, Vector::Zero(3), Vector::Ones(3));
    EXPECT_TRUE(feasible);
    EXPECT_EQ(r.value, best);
    EXPECT_TRUE((r.x.array() >= 0.0).all() && (r.x.array() <= 1.0).all());
  }
}

TEST(Lbfgs, NonFiniteStartIsRejected) {
  auto f = [](const Vector&, Vector& g) {
    g = Vector::Zero(1);
    return std::numeric_limits<double>::quiet_NaN();
  };
  EXPECT_THROW(optimize::lbfgs_box(f, v1(0.5), v1(0.0), v1(1.0)), InvalidArgument);
}

TEST(Lbfgs, HookRefreshReevaluates) {
  int calls = 0, hooks = 0;
  auto f = [&](const Vector& x, Vector& g) {
    ++calls;
    g = 2.0 * (x.array() - 0.7).matrix();
    return (x.array() - 0.7).square().sum();
  };
  LbfgsOptions o;
  o.max_iterations = 6;
  o.tolerance = 1e-14;
  auto hook = [&](int t) {
    ++hooks;
    return t == 2;
  };
  const auto r = optimize::lbfgs_box(f, v1(0.0), v1(0.0), v1(1.0), o, hook);
  EXPECT_EQ(r.evaluations, calls);
  EXPECT_GE(hooks, 1);
}

TEST(SelectRestarts, EqualScoresGiveDistinctUniformPicks) {
  std::mt19937_64 rng(1);
  std::vector<int> counts(10, 0);
  for (int rep = 0; rep < 2000; ++rep) {
    const auto picks = optimize::select_restarts(Vector::Constant(10, 3.0), 3, 1.0, rng);
    ASSERT_EQ(picks.size(), 3u);
    EXPECT_EQ(std::set<int>(picks.begin(), picks.end()).size(), 3u);
    for (int p : picks) ++counts[p];
  }
  for (int c : counts) EXPECT_NEAR(c / 2000.0, 0.3, 0.05);
}

TEST(SelectRestarts, AllRawSamplesWhenRestartsEqualRaw) {
  std::mt19937_64 rng(2);
  Vector s(6);
  s << 1.0, 5.0, -2.0, 0.5, 0.0, 3.0;
  const auto picks = optimize::select_restarts(s, 6, 1.0, rng);
  EXPECT_EQ(std::set<int>(picks.begin(), picks.end()), (std::set<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(picks.front(), 1);
}

TEST(SelectRestarts, NonFiniteHandling) {
  std::mt19937_64 rng(3);
  Vector s(3);
  s << std::numeric_limits<double>::quiet_NaN(), 1.0, -std::numeric_limits<double>::infinity();
  const auto picks = optimize::select_restarts(s, 3, 1.0, rng);
  EXPECT_EQ(picks, std::vector<int>{1});
  EXPECT_THROW(optimize::select_restarts(Vector::Constant(2, std::numeric_limits<double>::quiet_NaN()), 1, 1.0, rng),
               NumericalError);
}

TEST(Multistart, FindsConcavePeak) {
  Vector peak(2);
  peak << 0.37, 0.81;
  auto acq = [&](const Vector& x, Vector& g) {
    g = -2.0 * (x - peak);
    return 1.0 - (x - peak).squaredNorm();
  };
  auto score = [&](const Matrix& pts) {
    Vector s(pts.rows());
    Vector g;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) s[i] = acq(pts.row(i).transpose(), g);
    return s;
  };
  optimize::MultistartOptions o;
  o.restarts = 8;
  o.raw_samples = 64;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto r = optimize::multistart_maximize(score, acq, Vector::Zero(2), Vector::Ones(2), o, rng);
    EXPECT_LT((r.x - peak).norm(), 1e-4) << "seed " << seed;
  }
}

TEST(Multistart, DeterministicAndTiesToLowestRestart) {
  auto acq = [](const Vector& x, Vector& g) {
    g = Vector::Zero(x.size());
    return 1.0;
  };
  auto score = [](const Matrix& pts) { return Vector::Constant(pts.rows(), 0.0).eval(); };
  optimize::MultistartOptions o;
  o.restarts = 4;
  o.raw_samples = 16;
  std::mt19937_64 a(9), b(9);
  const auto ra = optimize::multistart_maximize(score, acq, Vector::Zero(2), Vector::Ones(2), o, a);
  const auto rb = optimize::multistart_maximize(score, acq, Vector::Zero(2), Vector::Ones(2), o, b);
  EXPECT_EQ(ra.best_restart, 0);
  EXPECT_EQ(ra.x, rb.x);
  EXPECT_EQ(ra.x, Vector(ra.starts.row(0).transpose()));
}

TEST(Multistart, RejectsMoreRestartsThanRawSamples) {
  auto acq = [](const Vector& x, Vector& g) {
    g = Vector::Zero(x.size());
    return 0.0;
  };
  auto score = [](const Matrix& pts) { return Vector::Zero(pts.rows()).eval(); };
  optimize::MultistartOptions o;
  o.restarts = 5;
  o.raw_samples = 4;
  std::mt19937_64 rng(0);
  EXPECT_THROW(optimize::multistart_maximize(score, acq, Vector::Zero(1), Vector::Ones(1), o, rng), InvalidArgument);
}
