#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "riskopt/gp/fantasy.hpp"
#include "riskopt/gp/fit.hpp"
#include "riskopt/gp/gaussian_process.hpp"
#include "riskopt/gp/kernel.hpp"
#include "riskopt/gp/serialize.hpp"
#include "support/fixtures.hpp"

using namespace riskopt;
using riskopt::testing::random_gp;
using riskopt::testing::rel_error;
using riskopt::testing::uniform_matrix;
using riskopt::testing::uniform_vector;

namespace {

gp::Hyperparameters hyper1(double ls, double s, double noise) {
  gp::Hyperparameters h;
  h.lengthscales = Vector::Constant(1, ls);
  h.outputscale = s;
  h.noise_variance = noise;
  return h;
}

Vector v1(double a) { return Vector::Constant(1, a); }

}  // namespace

TEST(Kernel, EqualPointsGiveOutputscale) {
  gp::Hyperparameters h = hyper1(0.3, 2.0, 0.0);
  EXPECT_DOUBLE_EQ(gp::kernel_matern52(v1(0.4), v1(0.4), h), 2.0);
}

TEST(Kernel, UnitScaledDistance) {
  // (1 + sqrt5 + 5/3) exp(-sqrt5)
  gp::Hyperparameters h = hyper1(0.25, 1.0, 0.0);
  EXPECT_NEAR(gp::kernel_matern52(v1(0.1), v1(0.35), h), 0.5239941088318203, 1e-12);
}

TEST(Kernel, LongLengthscaleApproachesOutputscale) {
  gp::Hyperparameters h = hyper1(1e6, 1.7, 0.0);
  EXPECT_NEAR(gp::kernel_matern52(v1(0.0), v1(1.0), h), 1.7, 1e-9);
}

TEST(Kernel, SymmetricAndRejectsNonFinite) {
  std::mt19937_64 rng(3);
  gp::Hyperparameters h;
  h.lengthscales = uniform_vector(rng, 3, 0.1, 1.0);
  h.outputscale = 1.3;
  const Vector a = uniform_vector(rng, 3), b = uniform_vector(rng, 3);
  EXPECT_EQ(gp::kernel_matern52(a, b, h), gp::kernel_matern52(b, a, h));
  Vector bad = a;
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(gp::kernel_matern52(bad, b, h), InvalidArgument);
}

TEST(Kernel, InputGradientMatchesFiniteDifference) {
  std::mt19937_64 rng(4);
  gp::Hyperparameters h;
  h.lengthscales = uniform_vector(rng, 2, 0.2, 0.8);
  h.outputscale = 1.1;
  const Vector a = uniform_vector(rng, 2), b = uniform_vector(rng, 2);
  Vector g;
  gp::kernel_grad_first(a, b, h, g);
  Vector fd(2);
  for (int k = 0; k < 2; ++k) {
    Vector p = a, m = a;
    p[k] += 1e-6;
    m[k] -= 1e-6;
    fd[k] = (gp::kernel_matern52(p, b, h) - gp::kernel_matern52(m, b, h)) / 2e-6;
  }
  EXPECT_LT(rel_error(g, fd), 1e-7);
}

TEST(Hyperparameters, Validation) {
  gp::Hyperparameters h = hyper1(0.3, 1.0, 0.0);
  EXPECT_NO_THROW(h.validate(1));
  EXPECT_THROW(h.validate(2), InvalidArgument);
  h.lengthscales[0] = -1.0;
  EXPECT_THROW(h.validate(1), InvalidArgument);
  h = hyper1(0.3, 0.0, 0.0);
  EXPECT_THROW(h.validate(1), InvalidArgument);
  h = hyper1(0.3, 1.0, -1e-3);
  EXPECT_THROW(h.validate(1), InvalidArgument);
}

TEST(Posterior, EmptyTrainingSetIsPrior) {
  gp::Hyperparameters h;
  h.lengthscales = Vector::Constant(2, 0.4);
  h.outputscale = 1.5;
  gp::GaussianProcess model(Matrix(0, 2), Vector(0), h);
  std::mt19937_64 rng(1);
  const Matrix q = uniform_matrix(rng, 4, 2);
  const gp::Posterior p = model.posterior(q);
  EXPECT_TRUE(p.mean.isZero(0.0));
  EXPECT_LT((p.cov - gp::kernel_matrix(q, h)).norm(), 1e-14);
}

TEST(Posterior, InterpolatesWithoutNoise) {
  std::mt19937_64 rng(2);
  gp::GaussianProcess model = random_gp(rng, 2, 8, 0.0);
  for (int i = 0; i < model.size(); ++i) {
    const gp::Posterior p = model.posterior(model.inputs().row(i));
    EXPECT_NEAR(p.mean[0], model.targets()[i], 1e-6);
    EXPECT_LE(p.cov(0, 0), 1e-8);
  }
}

TEST(Posterior, MatchesDenseSolve) {
  std::mt19937_64 rng(5);
  gp::GaussianProcess model = random_gp(rng, 2, 3, 0.05);
  const Matrix q = uniform_matrix(rng, 2, 2);
  const Matrix& x = model.inputs();
  Matrix a = gp::kernel_matrix(x, model.hyper());
  a.diagonal().array() += 0.05;
  const Matrix kxq = gp::kernel_matrix(x, q, model.hyper());
  const Eigen::FullPivLU<Matrix> lu(a);
  const Vector mean = kxq.transpose() * lu.solve(model.targets());
  const Matrix cov = gp::kernel_matrix(q, model.hyper()) - kxq.transpose() * lu.solve(kxq);
  const gp::Posterior p = model.posterior(q);
  EXPECT_LT((p.mean - mean).norm(), 1e-10);
  EXPECT_LT((p.cov - cov).norm(), 1e-10);
}

TEST(Posterior, CovarianceIsPsd) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    gp::GaussianProcess model = random_gp(rng, 2, 10, trial % 2 ? 0.0 : 1e-3);
    const gp::Posterior p = model.posterior(uniform_matrix(rng, 12, 2));
    Eigen::SelfAdjointEigenSolver<Matrix> es(p.cov);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
    EXPECT_LT((p.cov - p.cov.transpose()).norm(), 1e-15);
  }
}

TEST(Posterior, RejectsBadQueries) {
  std::mt19937_64 rng(7);
  gp::GaussianProcess model = random_gp(rng, 2, 4);
  EXPECT_THROW(model.posterior(Matrix::Zero(1, 3)), InvalidArgument);
  Matrix q = Matrix::Zero(1, 2);
  q(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(model.posterior(q), InvalidArgument);
}

TEST(Posterior, NegatedModelFlipsMean) {
  std::mt19937_64 rng(8);
  gp::GaussianProcess model = random_gp(rng, 2, 6);
  gp::GaussianProcess neg = model.negated();
  const Matrix q = uniform_matrix(rng, 3, 2);
  EXPECT_LT((model.posterior(q).mean + neg.posterior(q).mean).norm(), 1e-12);
  EXPECT_LT((model.posterior(q).cov - neg.posterior(q).cov).norm(), 1e-14);
}

TEST(Fit, NoiseFreeLinearInterpolation) {
  Matrix x(5, 1);
  x << 0.0, 0.25, 0.5, 0.75, 1.0;
  const Vector y = (2.0 * x.col(0).array() + 1.0).matrix();
  gp::FitOptions opt;
  opt.restarts = 1;
  opt.fixed_noise = 0.0;
  gp::GaussianProcess model = gp::fit_map(x, y, opt);
  for (int i = 0; i < 5; ++i) {
    const double raw = model.outcome_transform().unstandardize(model.posterior_mean(Vector(x.row(i))));
    EXPECT_NEAR(raw, y[i], 1e-6);
  }
}

TEST(Fit, Deterministic) {
  std::mt19937_64 rng(9);
  const Matrix x = uniform_matrix(rng, 12, 2);
  const Vector y = (x.col(0).array().sin() + x.col(1).array()).matrix();
  gp::FitOptions opt;
  opt.seed = 42;
  const gp::GaussianProcess a = gp::fit_map(x, y, opt);
  const gp::GaussianProcess b = gp::fit_map(x, y, opt);
  EXPECT_EQ(a.hyper().lengthscales, b.hyper().lengthscales);
  EXPECT_EQ(a.hyper().outputscale, b.hyper().outputscale);
  EXPECT_EQ(a.hyper().noise_variance, b.hyper().noise_variance);
}

TEST(Fit, RecoversLengthscaleOfGpDraw) {
  const double truth = 0.2;
  int within = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const Matrix x = uniform_matrix(rng, 30, 1);
    Matrix k = gp::kernel_matrix(x, hyper1(truth, 1.0, 0.0));
    k.diagonal().array() += 1e-4;
    const Matrix l = k.llt().matrixL();
    std::normal_distribution<double> z(0.0, 1.0);
    Vector e(30);
    for (int i = 0; i < 30; ++i) e[i] = z(rng);
    const Vector y = l * e;
    gp::FitOptions opt;
    opt.seed = static_cast<std::uint64_t>(seed);
    const double ls = gp::fit_map(x, y, opt).hyper().lengthscales[0];
    if (ls > truth / 3.0 && ls < truth * 3.0) ++within;
  }
  EXPECT_GE(within, 18);
}

TEST(Fit, GradientOfMapObjective) {
  std::mt19937_64 rng(10);
  const Matrix x = uniform_matrix(rng, 9, 2);
  const Vector y = uniform_vector(rng, 9, -1.0, 1.0);
  gp::FitOptions opt;
  gp::detail::MapObjective obj(x, y, opt, std::nullopt);
  Vector theta(4);
  theta << std::log(0.3), std::log(0.6), std::log(1.2), std::log(0.05);
  Vector g, tmp;
  obj(theta, g);
  Vector fd(4);
  for (int k = 0; k < 4; ++k) {
    Vector p = theta, m = theta;
    p[k] += 1e-6;
    m[k] -= 1e-6;
    fd[k] = (obj(p, tmp) - obj(m, tmp)) / 2e-6;
  }
  EXPECT_LT(rel_error(g, fd), 1e-6);
}

TEST(Fit, RejectsTooFewPoints) {
  EXPECT_THROW(gp::fit_map(Matrix::Zero(1, 1), Vector::Zero(1)), InvalidArgument);
}

TEST(Fit, FixedNoiseIsKept) {
  std::mt19937_64 rng(11);
  const Matrix x = uniform_matrix(rng, 10, 1);
  const Vector y = (10.0 * x.col(0).array()).sin().matrix() * 4.0;
  gp::FitOptions opt;
  opt.fixed_noise = 0.25;
  gp::GaussianProcess m = gp::fit_map(x, y, opt);
  EXPECT_NEAR(m.outcome_transform().variance_to_raw(m.hyper().noise_variance), 0.25, 1e-12);
}

TEST(Fantasy, DuplicateNoiseFreeObservationChangesNothing) {
  std::mt19937_64 rng(12);
  auto parent = std::make_shared<const gp::GaussianProcess>(random_gp(rng, 2, 7, 0.0));
  const Vector c = parent->inputs().row(3).transpose();
  Vector z0(3);
  z0 << -1.2, 0.1, 2.0;
  const auto fantasies = gp::fantasize(parent, c, z0);
  const Matrix q = uniform_matrix(rng, 10, 2);
  const gp::Posterior p = parent->posterior(q);
  for (const auto& f : fantasies) {
    const gp::Posterior pf = f.posterior(q);
    EXPECT_LT((pf.mean - p.mean).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_LT((pf.cov - p.cov).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(Fantasy, VarianceAtCandidate) {
  std::mt19937_64 rng(13);
  const double noise = 0.04;
  auto parent = std::make_shared<const gp::GaussianProcess>(random_gp(rng, 2, 6, noise));
  const Vector c = uniform_vector(rng, 2);
  const double sn = parent->posterior(c.transpose()).cov(0, 0);
  const auto f = gp::fantasize(parent, c, Vector::Constant(1, 0.7));
  EXPECT_NEAR(f[0].posterior(c.transpose()).cov(0, 0), sn * noise / (sn + noise), 1e-12);
  EXPECT_DOUBLE_EQ(f[0].fantasy_target(), parent->posterior_mean(c) + std::sqrt(sn + noise) * 0.7);
}

TEST(Fantasy, MatchesRetraining) {
  std::mt19937_64 rng(14);
  auto parent = std::make_shared<const gp::GaussianProcess>(random_gp(rng, 2, 8, 0.01));
  const Vector c = uniform_vector(rng, 2);
  Vector z0(3);
  z0 << -0.8, 0.3, 1.4;
  const Matrix q = uniform_matrix(rng, 10, 2);
  for (const auto& f : gp::fantasize(parent, c, z0)) {
    const gp::GaussianProcess retrained = parent->with_observation(c, f.fantasy_target());
    const gp::Posterior a = f.posterior(q), b = retrained.posterior(q);
    EXPECT_LT((a.mean - b.mean).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_LT((a.cov - b.cov).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(Fantasy, VarianceReduction) {
  std::mt19937_64 rng(15);
  auto parent = std::make_shared<const gp::GaussianProcess>(random_gp(rng, 3, 10, 0.02));
  const auto f = gp::fantasize(parent, uniform_vector(rng, 3), Vector::Constant(1, 0.0));
  const Matrix q = uniform_matrix(rng, 50, 3);
  const Vector vf = f[0].posterior(q).cov.diagonal();
  const Vector vp = parent->posterior(q).cov.diagonal();
  EXPECT_TRUE(((vf - vp).array() <= 1e-10).all());
}

namespace {

// Central differences of mean and jittered Cholesky factor along direction k.
template <class Eval>
void fd_block(const Eval& eval, int k, double h, Vector& dm, Matrix& dc) {
  Vector mp, mm;
  Matrix cp, cm;
  eval(k, h, mp, cp);
  eval(k, -h, mm, cm);
  dm = (mp - mm) / (2.0 * h);
  dc = (cp - cm) / (2.0 * h);
}

}  // namespace

TEST(PosteriorGradients, FarFromDataMeanIsFlat) {
  gp::Hyperparameters h;
  h.lengthscales = Vector::Constant(1, 0.01);
  h.outputscale = 1.0;
  h.noise_variance = 0.01;
  Matrix x(2, 1);
  x << 0.0, 0.02;
  gp::GaussianProcess model(x, Vector::Ones(2), h);
  const gp::PosteriorGradients g = gp::posterior_with_gradients(model, Matrix::Constant(1, 1, 0.9), 1);
  EXPECT_LT(g.d_mean.norm(), 1e-6);
}

TEST(PosteriorGradients, ScalarCholeskyDerivative) {
  std::mt19937_64 rng(16);
  gp::GaussianProcess model = random_gp(rng, 2, 5);
  const gp::PosteriorGradients g = gp::posterior_with_gradients(model, uniform_matrix(rng, 1, 2), 2);
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(g.d_chol[k](0, 0), g.d_cov[k](0, 0) / (2.0 * g.chol(0, 0)), 1e-14);
  }
}

TEST(PosteriorGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(17);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const int dx = 1 + trial % 2;
    const int dim = dx + 1;
    auto parent = std::make_shared<const gp::GaussianProcess>(random_gp(rng, dim, 3 + trial % 6, 0.01));
    const int l = 2 + trial % 4;
    Matrix q = uniform_matrix(rng, l, dim);
    for (int i = 1; i < l; ++i) q.row(i).head(dx) = q.row(0).head(dx);
    const Vector c = uniform_vector(rng, dim);
    const auto fant = gp::fantasize(parent, c, Vector::Constant(1, 0.9))[0];
    const double s = parent->hyper().outputscale;
    auto factor = [&](const gp::Posterior& p, Vector& m, Matrix& ch) {
      m = p.mean;
      ch = cholesky_with_jitter(p.cov, s, "fd").lower;
    };

    // parent, along the shared query x
    const gp::PosteriorGradients gq = gp::posterior_with_gradients(*parent, q, dx);
    auto shift_q = [&](int k, double step) {
      Matrix qq = q;
      qq.col(k).array() += step;
      return qq;
    };
    for (int k = 0; k < dx; ++k) {
      Vector dm;
      Matrix dc;
      fd_block([&](int kk, double st, Vector& m, Matrix& ch) { factor(parent->posterior(shift_q(kk, st)), m, ch); },
               k, h, dm, dc);
      EXPECT_LT(rel_error(gq.d_mean.col(k), dm), 1e-4) << "trial " << trial;
      EXPECT_LT(rel_error(gq.d_chol[k], dc), 1e-4) << "trial " << trial;
    }

    // fantasy, along the shared query x
    const gp::PosteriorGradients gf = fant.posterior_with_gradients(q, dx);
    for (int k = 0; k < dx; ++k) {
      Vector dm;
      Matrix dc;
      fd_block([&](int kk, double st, Vector& m, Matrix& ch) { factor(fant.posterior(shift_q(kk, st)), m, ch); },
               k, h, dm, dc);
      EXPECT_LT(rel_error(gf.d_mean.col(k), dm), 1e-4) << "trial " << trial;
      EXPECT_LT(rel_error(gf.d_chol[k], dc), 1e-4) << "trial " << trial;
    }

    // fantasy, along the candidate
    const gp::PosteriorGradients gc = fant.candidate_gradients(q);
    for (int k = 0; k < dim; ++k) {
      Vector dm;
      Matrix dc;
      fd_block(
          [&](int kk, double st, Vector& m, Matrix& ch) {
            Vector cc = c;
            cc[kk] += st;
            factor(gp::fantasize(parent, cc, Vector::Constant(1, 0.9))[0].posterior(q), m, ch);
          },
          k, h, dm, dc);
      EXPECT_LT(rel_error(gc.d_mean.col(k), dm), 1e-4) << "trial " << trial;
      EXPECT_LT(rel_error(gc.d_chol[k], dc), 1e-4) << "trial " << trial;
    }
  }
}

TEST(Serialize, BitExactRoundTrip) {
  std::mt19937_64 rng(18);
  Matrix x = uniform_matrix(rng, 7, 3);
  Vector y = uniform_vector(rng, 7, -3.0, 5.0);
  gp::FitOptions opt;
  opt.restarts = 2;
  const gp::GaussianProcess model =
      gp::fit_map(x, y, opt, gp::InputTransform{Vector::Constant(3, -2.0), Vector::Constant(3, 3.5)});
  const std::string text = gp::to_json(model).dump();
  const gp::GaussianProcess back = gp::from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.inputs(), model.inputs());
  EXPECT_EQ(back.targets(), model.targets());
  EXPECT_EQ(back.hyper().lengthscales, model.hyper().lengthscales);
  EXPECT_EQ(back.hyper().outputscale, model.hyper().outputscale);
  EXPECT_EQ(back.hyper().noise_variance, model.hyper().noise_variance);
  EXPECT_EQ(back.outcome_transform().mean, model.outcome_transform().mean);
  EXPECT_EQ(back.outcome_transform().scale, model.outcome_transform().scale);
  EXPECT_EQ(back.input_transform().lower, model.input_transform().lower);
  EXPECT_EQ(back.chol_factor(), model.chol_factor());
}

TEST(Serialize, HexFloats) {
  for (double v : {0.0, -0.0, 1.0, -2.5, 1e-300, 0.1, 6.02214076e23}) {
    EXPECT_EQ(gp::parse_hex_double(gp::hex_double(v)), v);
  }
  EXPECT_THROW(gp::parse_hex_double("zz"), ParseError);
  EXPECT_THROW(gp::from_json(nlohmann::json{{"format_version", 99}}), ParseError);
}

TEST(Transforms, RoundTrip) {
  gp::InputTransform t{Vector::Constant(3, -5.0), Vector::Constant(3, 5.0)};
  std::mt19937_64 rng(19);
  const Vector raw = uniform_vector(rng, 3, -5.0, 5.0);
  EXPECT_LT((t.from_unit(t.to_unit(raw)) - raw).lpNorm<Eigen::Infinity>(), 1e-12);
  const gp::OutcomeTransform o = gp::OutcomeTransform::fit(Vector::Constant(4, 2.0));
  EXPECT_EQ(o.scale, 1.0);
  EXPECT_EQ(o.mean, 2.0);
}
