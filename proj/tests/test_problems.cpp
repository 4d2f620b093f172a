#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "riskopt/problems/benchmarks.hpp"
#include "riskopt/problems/external_simulator.hpp"
#include "riskopt/problems/oracle.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace riskopt;
using riskopt::testing::uniform_vector;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out[i++] = e;
  return out;
}

// Branin written out directly from its textbook constants.
double branin_ref(double u, double v) {
  const double pi = std::acos(-1.0);
  const double t = v - 5.1 * u * u / (4.0 * pi * pi) + 5.0 * u / pi - 6.0;
  return t * t + 10.0 * (1.0 - 1.0 / (8.0 * pi)) * std::cos(u) + 10.0;
}

std::string echo(const std::string& mode) { return std::string(ECHO_SIMULATOR) + " " + mode; }

}  // namespace

TEST(Branin, KnownMinimizer) {
  EXPECT_NEAR(problems::branin(std::numbers::pi, 2.275), 0.397887, 1e-5);
  EXPECT_NEAR(problems::branin(-std::numbers::pi, 12.275), 0.397887, 1e-5);
}

TEST(BraninWilliams, ProductAtMinimizers) {
  const double a = (std::numbers::pi + 5.0) / 15.0, b = 2.275 / 15.0;
  EXPECT_NEAR(problems::branin_williams(vec({a, b, a, b})), 0.158316, 1e-4);
}

TEST(BraninWilliams, FactorSwapSymmetry) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Vector x = uniform_vector(rng, 4);
    const Vector swapped = vec({x[2], x[3], x[0], x[1]});
    EXPECT_DOUBLE_EQ(problems::branin_williams(x), problems::branin_williams(swapped));
  }
}

TEST(BraninWilliams, RejectsOutOfBox) {
  EXPECT_THROW(problems::branin_williams(vec({0.5, 1.2, 0.5, 0.5})), InvalidArgument);
  EXPECT_THROW(problems::branin_williams(vec({0.5, 0.5, 0.5})), InvalidArgument);
}

TEST(F6, DirectSubstitution) {
  EXPECT_EQ(problems::f6(Vector::Zero(4), Vector::Zero(3)), 0.0);
  EXPECT_EQ(problems::f6(vec({1, 0, 0, 0}), Vector::Zero(3)), 5.0);
}

TEST(F6, LinearInThirdEnvironmentCoordinate) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Vector xc = uniform_vector(rng, 4, -5.0, 5.0);
    Vector xe = uniform_vector(rng, 3, -1.5, 1.5);
    const double h = 0.25;
    Vector a = xe, b = xe;
    a[2] += h;
    b[2] -= h;
    const double second = problems::f6(xc, a) - 2.0 * problems::f6(xc, xe) + problems::f6(xc, b);
    EXPECT_NEAR(second, 0.0, 1e-10);
  }
}

TEST(F6, RejectsOutOfBox) {
  EXPECT_THROW(problems::f6(vec({6, 0, 0, 0}), Vector::Zero(3)), InvalidArgument);
  EXPECT_THROW(problems::f6(Vector::Zero(4), vec({0, 0, 2.5})), InvalidArgument);
}

TEST(BwDistribution, TableMasses) {
  const risk::WSet s = problems::bw_distribution();
  ASSERT_EQ(s.size(), 12);
  auto mass = [&](double x2, double x3) {
    for (int i = 0; i < 12; ++i)
      if (s.points(i, 0) == x2 && s.points(i, 1) == x3) return s.weights[i];
    return -1.0;
  };
  EXPECT_EQ(mass(0.5, 0.4), 0.1750);
  EXPECT_EQ(mass(0.25, 0.2), 0.0375);
  EXPECT_EQ(mass(0.75, 0.8), 0.0375);
  EXPECT_EQ(mass(0.5, 0.8), 0.0750);
  EXPECT_EQ(mass(0.75, 0.6), 0.0875);
  EXPECT_NEAR(s.weights.sum(), 1.0, 1e-15);
  EXPECT_NO_THROW(s.validate());
}

TEST(Problems, BuiltinsValidateAndMapCoordinates) {
  for (const std::string& name : problems::problem_names()) {
    const problems::ProblemSpec p = problems::make_problem(name);
    EXPECT_NO_THROW(p.validate()) << name;
    const gp::InputTransform t = p.joint_transform();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
      const Vector u = uniform_vector(rng, p.dx() + p.dw());
      const Vector raw = t.from_unit(u);
      EXPECT_LT((t.to_unit(raw) - u).lpNorm<Eigen::Infinity>(), 1e-12);
    }
  }
  EXPECT_THROW(problems::make_problem("portfolio"), InvalidArgument);
}

TEST(Problems, BraninWilliamsRoles) {
  const problems::ProblemSpec p = problems::make_problem("branin_williams");
  EXPECT_EQ(p.dx(), 2);
  EXPECT_EQ(p.dw(), 2);
  EXPECT_EQ(p.noise_std, 10.0);
  EXPECT_EQ(p.kind, risk::RiskKind::VaR);
  EXPECT_EQ(p.alpha, 0.7);
  const Vector x = vec({0.1, 0.9}), w = vec({0.25, 0.6});
  EXPECT_EQ(p.evaluate(x, w), problems::branin_williams(vec({0.1, 0.25, 0.6, 0.9})));
  // unit w coordinates of the finite set stay inside the cube
  const qmc::WDomain u = p.unit_w_domain();
  EXPECT_GE(u.set.points.minCoeff(), 0.0);
  EXPECT_LE(u.set.points.maxCoeff(), 1.0);
}

TEST(Problems, F6Settings) {
  const problems::ProblemSpec p = problems::make_problem("f6");
  EXPECT_EQ(p.kind, risk::RiskKind::CVaR);
  EXPECT_EQ(p.alpha, 0.75);
  EXPECT_EQ(p.l_inner, 40);
  EXPECT_EQ(p.l_eval, 8);
  EXPECT_EQ(p.inner_source(), qmc::WSource::Subsample);
}

TEST(Problems, NoiseOnlyInObservations) {
  problems::ProblemSpec p = problems::make_problem("branin_williams");
  std::mt19937_64 a(4), b(4);
  const Vector x = vec({0.3, 0.3}), w = vec({0.5, 0.4});
  EXPECT_EQ(p.observe(x, w, a), p.observe(x, w, b));
  EXPECT_NE(p.observe(x, w, a), p.evaluate(x, w));
  p.noise_std = 0.0;
  EXPECT_EQ(p.observe(x, w, a), p.evaluate(x, w));
}

TEST(BruteForce, ConstantObjective) {
  problems::ProblemSpec p = problems::make_problem("f6");
  p.objective = [](const Vector&, const Vector&) { return 2.5; };
  EXPECT_EQ(problems::brute_force_risk(p, Vector::Zero(4), problems::truth_wset(p, 500)), 2.5);
}

TEST(BruteForce, BraninWilliamsVarMatchesIndependentComputation) {
  const problems::ProblemSpec p = problems::make_problem("branin_williams");
  const risk::WSet w = problems::bw_distribution();
  std::mt19937_64 rng(5);
  for (int t = 0; t < 25; ++t) {
    const Vector x = uniform_vector(rng, 2);
    Vector f(12);
    for (int l = 0; l < 12; ++l) {
      const double ref =
          branin_ref(15.0 * x[0] - 5.0, 15.0 * w.points(l, 0)) * branin_ref(15.0 * w.points(l, 1) - 5.0, 15.0 * x[1]);
      f[l] = problems::branin_williams(vec({x[0], w.points(l, 0), w.points(l, 1), x[1]}));
      EXPECT_NEAR(f[l], ref, 1e-12 * std::abs(ref));
    }
    EXPECT_EQ(problems::brute_force_risk(p, x), riskopt::testing::oracle_weighted_var(f, w.weights, 0.7));
  }
}

TEST(BruteForce, CvarDominatesVarOnGrid) {
  const problems::ProblemSpec var = problems::make_problem("branin_williams");
  const problems::ProblemSpec cvar = problems::make_problem("branin_williams_cvar");
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) {
      const Vector x = vec({i / 10.0, j / 10.0});
      EXPECT_GE(problems::brute_force_risk(cvar, x), problems::brute_force_risk(var, x) - 1e-12);
    }
}

TEST(BruteForce, ContinuousGridIsFixed) {
  const problems::ProblemSpec p = problems::make_problem("f6");
  const risk::WSet a = problems::truth_wset(p), b = problems::truth_wset(p);
  EXPECT_EQ(a.size(), 10000);
  EXPECT_EQ(a.points, b.points);
  EXPECT_GE(a.points.minCoeff(), -2.0);
  EXPECT_LE(a.points.maxCoeff(), 2.0);
}

TEST(TrueOptimum, BraninWilliamsTwoResolutionsAgree) {
  const problems::ProblemSpec p = problems::make_problem("branin_williams");
  const auto coarse = problems::true_optimum_search(p, 51);
  const auto fine = problems::true_optimum_search(p, 101);
  EXPECT_LT(std::abs(coarse.value - fine.value), 0.01 * std::abs(fine.value));
  // the reported value is the risk at the reported point
  EXPECT_LE(fine.value, problems::brute_force_risk(p, fine.x) + 1e-12);
}

TEST(TrueOptimum, DataFileMatchesSearch) {
  const auto rows = problems::load_true_optima(problems::default_true_optima_path());
  const problems::ProblemSpec p = problems::make_problem("branin_williams");
  const auto stored = problems::lookup_true_optimum(rows, p);
  ASSERT_TRUE(stored.has_value());
  const auto found = problems::true_optimum_search(p, 101);
  EXPECT_NEAR(*stored, found.value, 1e-9 * std::abs(found.value));
  for (const std::string& name : problems::problem_names())
    EXPECT_TRUE(problems::lookup_true_optimum(rows, problems::make_problem(name)).has_value()) << name;
}

TEST(TrueOptimum, CorruptFileNamesLine) {
  const std::string path = ::testing::TempDir() + "/bad_optima.csv";
  {
    std::ofstream out(path);
    out << "problem,risk,alpha,true_optimum\n";
    out << "toy,cvar,0.7,1.5\n";
    out << "toy,cvar\n";
  }
  try {
    problems::load_true_optima(path);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(ExternalSimulator, EchoSum) {
  problems::ExternalSimulator sim(echo("sum"));
  EXPECT_NEAR(sim.query(vec({0.4}), vec({0.3}), 0), 0.7, 1e-12);
}

TEST(ExternalSimulator, HundredQueriesInOrder) {
  problems::ExternalSimulator sim(echo("sum"));
  for (int i = 0; i < 100; ++i) {
    const double x = i / 100.0;
    EXPECT_EQ(sim.query(vec({x}), vec({1.0}), static_cast<std::uint64_t>(i)), x + 1.0);
  }
  EXPECT_EQ(sim.queries(), 100);
}

TEST(ExternalSimulator, SeedIsForwarded) {
  problems::ExternalSimulator sim(echo("seed"));
  EXPECT_EQ(sim.query(vec({0.0}), vec({0.0}), 12345), 345.0);
}

TEST(ExternalSimulator, MalformedLineIsProtocolError) {
  problems::ExternalSimulator sim(echo("malformed"));
  EXPECT_THROW(sim.query(vec({0.1}), vec({0.2}), 0), ProtocolError);
}

TEST(ExternalSimulator, MismatchedIdIsProtocolError) {
  problems::ExternalSimulator sim(echo("wrong-id"));
  EXPECT_THROW(sim.query(vec({0.1}), vec({0.2}), 0), ProtocolError);
}

TEST(ExternalSimulator, CrashReportsExitAndOutput) {
  problems::ExternalSimulator sim(echo("exit"));
  try {
    sim.query(vec({0.1}), vec({0.2}), 0);
    FAIL() << "expected a simulator error";
  } catch (const ProtocolError&) {
    FAIL() << "a crash is not a protocol error";
  } catch (const SimulatorError& e) {
    EXPECT_NE(std::string(e.what()).find("exit status 3"), std::string::npos) << e.what();
    EXPECT_NE(e.output().find("crashed"), std::string::npos);
  }
}

TEST(ExternalSimulator, Timeout) {
  problems::ExternalSimulator sim(echo("hang"), 0.3);
  EXPECT_THROW(sim.query(vec({0.1}), vec({0.2}), 0), SimulatorError);
}

TEST(ExternalSimulator, ProblemHandle) {
  const problems::ProblemSpec p =
      problems::external_problem(echo("sum"), Vector::Zero(1), Vector::Ones(1),
                                 qmc::WDomain::box(Vector::Zero(1), Vector::Ones(1)), risk::RiskKind::CVaR, 0.5, 4, 4);
  std::mt19937_64 rng(0);
  EXPECT_NEAR(p.observe(vec({0.4}), vec({0.3}), rng), 0.7, 1e-12);
  EXPECT_FALSE(p.has_oracle);
  EXPECT_THROW(p.evaluate(vec({0.4}), vec({0.3})), InvalidArgument);
}
