#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "riskopt/acquisition/context.hpp"
#include "riskopt/acquisition/rho_kg.hpp"
#include "riskopt/gp/gaussian_process.hpp"
#include "riskopt/qmc/base_samples.hpp"
#include "riskopt/qmc/normal.hpp"

namespace riskopt::acquisition {

namespace detail {

struct PointPosterior {
  double mean = 0.0;
  double var = 0.0;
  Vector d_mean;
  Vector d_var;
};

inline PointPosterior point_posterior(const gp::GaussianProcess& model, const Vector& x, bool grad) {
  PointPosterior p;
  const Matrix q = x.transpose();
  if (!grad) {
    const gp::Posterior post = model.posterior(q);
    p.mean = post.mean[0];
    p.var = std::max(0.0, post.cov(0, 0));
    return p;
  }
  const gp::PosteriorGradients g = gp::posterior_with_gradients(model, q, model.dim());
  p.mean = g.mean[0];
  p.var = std::max(0.0, g.cov(0, 0));
  p.d_mean = g.d_mean.row(0).transpose();
  p.d_var.resize(model.dim());
  for (int k = 0; k < model.dim(); ++k) p.d_var[k] = g.d_cov[k](0, 0);
  return p;
}

inline bool zero_variance(const gp::GaussianProcess& model, double var) {
  return var <= kPosteriorJitter.degenerate_tol * model.hyper().outputscale;
}

}  // namespace detail

/// Expected improvement for minimization, against the best (lowest)
/// standardized target. Returns the value and fills grad.
inline double ei_with_gradient(const gp::GaussianProcess& model, const Vector& x, Vector* grad) {
  if (model.size() == 0) throw InvalidArgument("ei: model has no observations");
  const double best = model.targets().minCoeff();
  const detail::PointPosterior p = detail::point_posterior(model, x, grad != nullptr);
  const double gap = best - p.mean;
  if (detail::zero_variance(model, p.var)) {
    if (grad) *grad = gap > 0.0 ? Vector(-p.d_mean) : Vector(Vector::Zero(x.size()));
    return std::max(gap, 0.0);
  }
  const double sd = std::sqrt(p.var);
  const double u = gap / sd;
  const double cdf = qmc::normal_cdf(u), pdf = qmc::normal_pdf(u);
  if (grad) *grad = -cdf * p.d_mean + pdf * p.d_var / (2.0 * sd);
  return gap * cdf + sd * pdf;
}

inline double ei(const gp::GaussianProcess& model, const Vector& x) { return ei_with_gradient(model, x, nullptr); }

/// mu + sqrt(beta * sigma^2).
inline double ucb_with_gradient(const gp::GaussianProcess& model, const Vector& x, double beta, Vector* grad) {
  if (beta < 0.0) throw InvalidArgument("ucb: beta must be nonnegative");
  const detail::PointPosterior p = detail::point_posterior(model, x, grad != nullptr);
  const double spread = std::sqrt(beta * p.var);
  if (grad) {
    *grad = p.d_mean;
    if (spread > 0.0) *grad += beta * p.d_var / (2.0 * spread);
  }
  return p.mean + spread;
}

inline double ucb(const gp::GaussianProcess& model, const Vector& x, double beta = 0.2) {
  return ucb_with_gradient(model, x, beta, nullptr);
}

/// Knowledge gradient on a model of the objective itself: the rho-KG machinery
/// with the posterior mean as inner objective. ctx.spec.kind must be Mean and
/// the model has no environment inputs.
inline AcqValue kg_plain(AcqContext& ctx, const Vector& x, bool solve_inner) {
  if (ctx.spec.kind != risk::RiskKind::Mean) throw InvalidArgument("kg_plain: context must use the mean objective");
  if (ctx.dw() != 0) throw InvalidArgument("kg_plain: model must be over the decision space only");
  return rho_kg(ctx, x, solve_inner);
}

// Base samples for kg_plain: one empty environment point.
inline qmc::BaseSampleSet plain_base_samples(int k, std::uint64_t seed) {
  const risk::WSet single{Matrix(1, 0), Vector::Ones(1)};
  return qmc::make_base_samples(k, 1, 1, qmc::WDomain::finite_set(single), qmc::WSource::Full, seed);
}

enum class RandomKind { RhoRandom, PlainRandom };

/// PlainRandom: uniform x in the box. RhoRandom: uniform x together with a w
/// drawn uniformly from the environment (a point of a finite set, or the box).
inline Vector random_strategy(RandomKind kind, const Vector& x_lower, const Vector& x_upper,
                             const qmc::WDomain* w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(x_lower.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = x_lower[k] + u(rng) * (x_upper[k] - x_lower[k]);
  if (kind == RandomKind::PlainRandom) return x;
  if (!w) throw InvalidArgument("rho_random needs an environment domain");
  Vector out(x.size() + w->dim());
  out.head(x.size()) = x;
  if (w->finite) {
    std::uniform_int_distribution<int> pick(0, w->set.size() - 1);
    out.tail(w->dim()) = w->set.points.row(pick(rng)).transpose();
  } else {
    for (int k = 0; k < w->dim(); ++k) out[x.size() + k] = w->lower[k] + u(rng) * (w->upper[k] - w->lower[k]);
  }
  return out;
}

}  // namespace riskopt::acquisition
