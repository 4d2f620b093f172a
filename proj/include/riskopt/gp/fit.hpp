#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/gp/gaussian_process.hpp"
#include "riskopt/optimize/lbfgs.hpp"

namespace riskopt::gp {

struct GammaPrior {
  double shape;
  double rate;
  // Log density up to a constant, and its derivative in log(value).
  double log_density(double v) const { return (shape - 1.0) * std::log(v) - rate * v; }
  double dlog_density_dlog(double v) const { return (shape - 1.0) - rate * v; }
};

struct HyperPriors {
  GammaPrior lengthscale{3.0, 6.0};
  GammaPrior outputscale{2.0, 0.15};
  GammaPrior noise{1.1, 0.05};
};

struct FitOptions {
  int restarts = 5;
  int max_iterations = 100;  // Q1, per restart
  std::uint64_t seed = 0;
  // Known observation noise variance in raw outcome units.
  std::optional<double> fixed_noise;
  // Extra restart from these values (standardized units), tried first.
  std::optional<Hyperparameters> warm_start;
  HyperPriors priors;
  double lengthscale_min = 1e-3, lengthscale_max = 1e2;
  double outputscale_min = 1e-4, outputscale_max = 1e4;
  double noise_min = 1e-6, noise_max = 10.0;
};

namespace detail {

// Negative log marginal likelihood plus negative log prior, in log parameters
// theta = (log l_1..d, log s, [log noise]).
class MapObjective {
 public:
  MapObjective(const Matrix& x, const Vector& y, const FitOptions& opt, std::optional<double> noise)
      : x_(x), y_(y), opt_(opt), noise_(noise), d_(static_cast<int>(x.cols())) {
    const Eigen::Index n = x.rows();
    diff2_.assign(d_, Matrix(n, n));
    for (int k = 0; k < d_; ++k)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          const double t = x(i, k) - x(j, k);
          diff2_[k](i, j) = t * t;
        }
  }

  int size() const { return d_ + 1 + (noise_ ? 0 : 1); }

  Hyperparameters unpack(const Vector& theta) const {
    Hyperparameters h;
    h.lengthscales = theta.head(d_).array().exp();
    h.outputscale = std::exp(theta[d_]);
    h.noise_variance = noise_ ? *noise_ : std::exp(theta[d_ + 1]);
    return h;
  }

  Vector pack(const Hyperparameters& h) const {
    Vector t(size());
    t.head(d_) = h.lengthscales.array().log();
    t[d_] = std::log(h.outputscale);
    if (!noise_) t[d_ + 1] = std::log(std::max(h.noise_variance, opt_.noise_min));
    return t;
  }

  void bounds(Vector& lo, Vector& hi) const {
    lo.resize(size());
    hi.resize(size());
    lo.head(d_).setConstant(std::log(opt_.lengthscale_min));
    hi.head(d_).setConstant(std::log(opt_.lengthscale_max));
    lo[d_] = std::log(opt_.outputscale_min);
    hi[d_] = std::log(opt_.outputscale_max);
    if (!noise_) {
      lo[d_ + 1] = std::log(opt_.noise_min);
      hi[d_ + 1] = std::log(opt_.noise_max);
    }
  }

  double operator()(const Vector& theta, Vector& grad) const {
    const Hyperparameters h = unpack(theta);
    const Eigen::Index n = x_.rows();
    Matrix r2 = Matrix::Zero(n, n);
    for (int k = 0; k < d_; ++k) r2 += diff2_[k] / (h.lengthscales[k] * h.lengthscales[k]);
    const Matrix r = r2.array().sqrt().matrix();
    const Matrix e = (-detail::kSqrt5 * r.array()).exp().matrix();
    const Matrix kern = h.outputscale * ((1.0 + detail::kSqrt5 * r.array() + (5.0 / 3.0) * r2.array()) *
                                         e.array()).matrix();
    // coefficient of d_k^2 / l_k^2 in dk/dlog l_k
    const Matrix dl = h.outputscale * ((5.0 / 3.0) * (1.0 + detail::kSqrt5 * r.array()) * e.array()).matrix();
    Matrix a = kern;
    a.diagonal().array() += h.noise_variance;
    CholeskyFactor f;
    try {
      f = cholesky_with_jitter(a, h.outputscale, "training covariance A_n", kTrainingJitter);
    } catch (const NumericalError&) {
      grad.setZero(size());
      return std::numeric_limits<double>::infinity();
    }
    const Vector alpha = chol_solve(f.lower, y_);
    const double nll = 0.5 * y_.dot(alpha) + f.lower.diagonal().array().log().sum() +
                       0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    Matrix linv = f.lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    Matrix w = linv.transpose() * linv;  // A^-1
    w.noalias() -= alpha * alpha.transpose();
    grad.resize(size());
    for (int k = 0; k < d_; ++k) {
      const double l2 = h.lengthscales[k] * h.lengthscales[k];
      grad[k] = 0.5 * (w.array() * dl.array() * diff2_[k].array()).sum() / l2;
    }
    grad[d_] = 0.5 * (w.array() * kern.array()).sum();
    if (!noise_) grad[d_ + 1] = 0.5 * w.trace() * h.noise_variance;

    double lp = 0.0;
    for (int k = 0; k < d_; ++k) {
      lp += opt_.priors.lengthscale.log_density(h.lengthscales[k]);
      grad[k] -= opt_.priors.lengthscale.dlog_density_dlog(h.lengthscales[k]);
    }
    lp += opt_.priors.outputscale.log_density(h.outputscale);
    grad[d_] -= opt_.priors.outputscale.dlog_density_dlog(h.outputscale);
    if (!noise_) {
      lp += opt_.priors.noise.log_density(h.noise_variance);
      grad[d_ + 1] -= opt_.priors.noise.dlog_density_dlog(h.noise_variance);
    }
    return nll - lp;
  }

 private:
  const Matrix& x_;
  const Vector& y_;
  const FitOptions& opt_;
  std::optional<double> noise_;
  int d_;
  std::vector<Matrix> diff2_;
};

}  // namespace detail

/// MAP fit of a Matern 5/2 GP. inputs are in the unit cube; targets are raw
/// outcomes and get standardized here.
inline GaussianProcess fit_map(const Matrix& inputs, const Vector& targets, const FitOptions& opt = {},
                               InputTransform input_transform = {}) {
  if (inputs.rows() < 2) throw InvalidArgument("fit_map: need at least 2 observations");
  if (inputs.rows() != targets.size()) throw InvalidArgument("fit_map: inputs/targets size mismatch");
  if (!inputs.allFinite() || !targets.allFinite()) throw InvalidArgument("fit_map: non-finite data");
  if (opt.restarts < 0 || opt.max_iterations < 1) throw InvalidArgument("fit_map: bad restart/iteration budget");
  const int d = static_cast<int>(inputs.cols());
  const OutcomeTransform out = OutcomeTransform::fit(targets);
  const Vector y = out.standardize(targets);
  std::optional<double> noise;
  if (opt.fixed_noise) {
    if (*opt.fixed_noise < 0.0) throw InvalidArgument("fit_map: fixed noise must be nonnegative");
    noise = out.variance_to_standardized(*opt.fixed_noise);
  }

  detail::MapObjective obj(inputs, y, opt, noise);
  Vector lo, hi;
  obj.bounds(lo, hi);

  std::vector<Vector> starts;
  if (opt.warm_start && opt.warm_start->dim() == d) starts.push_back(obj.pack(*opt.warm_start));
  std::mt19937_64 rng(opt.seed);
  auto draw = [&](const GammaPrior& p) {
    std::gamma_distribution<double> g(p.shape, 1.0 / p.rate);
    return g(rng);
  };
  for (int r = 0; r < opt.restarts; ++r) {
    Hyperparameters h;
    h.lengthscales.resize(d);
    for (int k = 0; k < d; ++k) h.lengthscales[k] = draw(opt.priors.lengthscale);
    h.outputscale = draw(opt.priors.outputscale);
    h.noise_variance = draw(opt.priors.noise);
    starts.push_back(optimize::clamp_to_box(obj.pack(h), lo, hi));
  }
  if (starts.empty()) throw InvalidArgument("fit_map: no restarts requested");

  optimize::LbfgsOptions lopt;
  lopt.max_iterations = opt.max_iterations;
  lopt.tolerance = 1e-6;
  auto fn = [&](const Vector& t, Vector& g) { return obj(t, g); };
  std::optional<Vector> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (const Vector& s : starts) {
    optimize::LbfgsResult r;
    try {
      r = optimize::lbfgs_box(fn, s, lo, hi, lopt);
    } catch (const InvalidArgument&) {
      continue;  // start point not factorizable
    }
    if (r.value < best_value) {
      best_value = r.value;
      best = r.x;
    }
  }
  if (!best) {
    throw NumericalError("fit_map: Cholesky of training covariance A_n (" +
                         std::to_string(inputs.rows()) + "x" + std::to_string(inputs.rows()) +
                         ") failed at every restart");
  }
  return GaussianProcess(inputs, y, obj.unpack(*best), std::move(input_transform), out, 0.0);
}

}  // namespace riskopt::gp
