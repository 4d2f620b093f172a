#pragma once

#include <string>
#include <type_traits>

#include "riskopt/errors.hpp"
#include "riskopt/gp/fantasy.hpp"
#include "riskopt/gp/gaussian_process.hpp"
#include "riskopt/qmc/base_samples.hpp"
#include "riskopt/risk/empirical.hpp"

namespace riskopt::risk {

enum class Wrt { InnerX, Candidate };

struct PosteriorRiskResult {
  double estimate = 0.0;
  Vector draws;  // one risk value per base-sample row
};

// Rows (x, w_l) for every environmental point.
inline Matrix risk_query(const Vector& x, const WSet& wset) {
  Matrix q(wset.size(), x.size() + wset.dim());
  for (int l = 0; l < wset.size(); ++l) {
    q.row(l).head(x.size()) = x.transpose();
    q.row(l).tail(wset.dim()) = wset.points.row(l);
  }
  return q;
}

/// Risk of F = mean + chol * z for every row z of zs, averaged.
inline PosteriorRiskResult risk_from_block(const Vector& mean, const Matrix& chol, const Matrix& zs,
                                           const Vector& weights, const RiskSpec& spec) {
  PosteriorRiskResult r;
  const Eigen::Index m = zs.rows();
  r.draws.resize(m);
  if (spec.kind == RiskKind::Mean) {
    const double v = empirical_mean(mean, weights).value;
    r.draws.setConstant(v);
    r.estimate = v;
    return r;
  }
  const Matrix f = (chol * zs.transpose()).colwise() + mean;  // L x M
  double sum = 0.0;
  std::vector<std::pair<double, int>> buf;
  for (Eigen::Index j = 0; j < m; ++j) {
    r.draws[j] = empirical_risk_value(f.col(j).data(), static_cast<int>(f.rows()), weights, spec.kind, spec.alpha, buf);
    sum += r.draws[j];
  }
  r.estimate = sum / static_cast<double>(m);
  return r;
}

/// Same estimate, plus its gradient along the directions described by d_mean
/// (L x p) and d_chol (p matrices L x L). The realized ordering of each draw is
/// held fixed.
inline double risk_gradient_from_block(const Vector& mean, const Matrix& chol, const Matrix& zs,
                                       const Vector& weights, const RiskSpec& spec,
                                       const Matrix& d_mean, const std::vector<Matrix>& d_chol,
                                       Vector& grad) {
  const Eigen::Index m = zs.rows();
  const Eigen::Index p = d_mean.cols();
  grad.setZero(p);
  if (spec.kind == RiskKind::Mean) {
    const RiskSampleEstimate e = empirical_mean(mean, weights);
    grad = d_mean.transpose() * e.lambda;
    return e.value;
  }
  const Matrix f = (chol * zs.transpose()).colwise() + mean;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const RiskSampleEstimate e = empirical_risk(f.col(j), weights, spec.kind, spec.alpha);
    sum += e.value;
    grad.noalias() += d_mean.transpose() * e.lambda;
    for (Eigen::Index k = 0; k < p; ++k) {
      grad[k] += e.lambda.dot(d_chol[k] * zs.row(j).transpose());
    }
  }
  grad /= static_cast<double>(m);
  return sum / static_cast<double>(m);
}

namespace detail {

inline void check_inputs(const Vector& x, const WSet& wset, const RiskSpec& spec,
                         const qmc::BaseSampleSet& base, int slice, int model_dim) {
  spec.validate();
  if (slice < 0 || slice >= static_cast<int>(base.zl.size()))
    throw InvalidArgument("posterior_risk: base-sample slice out of range");
  if (base.l() != wset.size()) {
    throw InvalidArgument("posterior_risk: base samples have L=" + std::to_string(base.l()) +
                          " but the environment set has " + std::to_string(wset.size()) + " points");
  }
  if (x.size() + wset.dim() != model_dim) throw InvalidArgument("posterior_risk: dimension mismatch");
}

}  // namespace detail

/// Monte-Carlo estimate of E_n[rho[F(x, W)]] with fixed base samples.
/// x and the environment points are in the model's unit-cube coordinates.
template <class Model>
PosteriorRiskResult posterior_risk(const Model& model, const Vector& x, const WSet& wset,
                                   const RiskSpec& spec, const qmc::BaseSampleSet& base,
                                   int slice = 0) {
  detail::check_inputs(x, wset, spec, base, slice, model.dim());
  const gp::Posterior post = model.posterior(risk_query(x, wset));
  const double scale = [&] {
    if constexpr (std::is_same_v<Model, gp::GaussianProcess>) return model.hyper().outputscale;
    else return model.parent().hyper().outputscale;
  }();
  const CholeskyFactor c = cholesky_with_jitter(post.cov, scale, "posterior covariance");
  return risk_from_block(post.mean, c.lower, base.zl[slice], wset.weights, spec);
}

/// Gradient of posterior_risk with respect to the inner decision x, or (for a
/// fantasy model) with respect to the candidate that produced the fantasy.
template <class Model>
Vector posterior_risk_gradient(const Model& model, const Vector& x, const WSet& wset,
                               const RiskSpec& spec, const qmc::BaseSampleSet& base, Wrt wrt,
                               int slice = 0, double* value = nullptr) {
  detail::check_inputs(x, wset, spec, base, slice, model.dim());
  const Matrix q = risk_query(x, wset);
  gp::PosteriorGradients g;
  if (wrt == Wrt::InnerX) {
    if constexpr (std::is_same_v<Model, gp::GaussianProcess>) {
      g = gp::posterior_with_gradients(model, q, static_cast<int>(x.size()));
    } else {
      g = model.posterior_with_gradients(q, static_cast<int>(x.size()));
    }
  } else {
    if constexpr (std::is_same_v<Model, gp::GaussianProcess>) {
      throw InvalidArgument("candidate gradients need a fantasy model");
    } else {
      g = model.candidate_gradients(q);
    }
  }
  Vector grad;
  const double v = risk_gradient_from_block(g.mean, g.chol, base.zl[slice], wset.weights, spec,
                                            g.d_mean, g.d_chol, grad);
  if (value) *value = v;
  return grad;
}

}  // namespace riskopt::risk
