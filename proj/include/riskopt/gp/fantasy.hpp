#pragma once

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "riskopt/gp/gaussian_process.hpp"

namespace riskopt::gp {

// Everything about one candidate that the K fantasies share. Appending the
// fantasy observation extends the training factor by the row (vc^T, tau).
struct FantasyCore {
  std::shared_ptr<const GaussianProcess> parent;
  Vector candidate;
  Vector kxc;  // K(X, c)
  Vector vc;   // L^-1 K(X, c)
  Vector u;    // A^-1 K(X, c)
  double mean_c = 0.0;
  double tau2 = 0.0;  // Sigma_n(c, c) + noise
  double tau = 0.0;
  // False when tau2 is numerically zero: the observation carries no new
  // information (noise-free duplicate), so fantasies equal the parent.
  bool informative = true;
};

inline std::shared_ptr<const FantasyCore> make_fantasy_core(
    std::shared_ptr<const GaussianProcess> parent, const Vector& candidate) {
  if (!parent) throw InvalidArgument("fantasize: null parent model");
  if (candidate.size() != parent->dim()) throw InvalidArgument("fantasize: candidate dimension mismatch");
  if (!candidate.allFinite()) throw InvalidArgument("fantasize: non-finite candidate");
  auto core = std::make_shared<FantasyCore>();
  core->candidate = candidate;
  core->kxc = parent->cross_covariance(candidate);
  core->vc = parent->chol_factor().triangularView<Eigen::Lower>().solve(core->kxc);
  core->u = parent->chol_factor().transpose().triangularView<Eigen::Upper>().solve(core->vc);
  core->mean_c = parent->prior_mean() + core->kxc.dot(parent->alpha_vector());
  const double var_c = std::max(0.0, parent->hyper().outputscale - core->vc.squaredNorm());
  core->tau2 = var_c + parent->effective_noise();
  core->tau = std::sqrt(core->tau2);
  core->informative = core->tau2 > kPosteriorJitter.degenerate_tol * parent->hyper().outputscale;
  core->parent = std::move(parent);
  return core;
}

// Fantasy posterior on one query block. The covariance does not depend on the
// fantasy draw, only the mean does.
struct FantasyBlock {
  Vector parent_mean;
  Vector s;  // Sigma_n(Q, c)
  double tau = 1.0;
  bool informative = true;
  Matrix cov;
  Matrix chol;
  bool degenerate = false;

  // Derivatives along the candidate coordinates.
  Matrix ds_c;
  Vector dtau2_c;
  std::vector<Matrix> dcov_c;
  std::vector<Matrix> dchol_c;

  // Derivatives along the shared query x coordinates.
  Matrix dmean_x;  // parent part
  Matrix ds_x;
  std::vector<Matrix> dcov_x;
  std::vector<Matrix> dchol_x;

  Vector mean(double z) const {
    if (!informative) return parent_mean;
    return parent_mean + s * (z / tau);
  }

  Matrix d_mean_candidate(double z) const {
    if (!informative) return Matrix::Zero(parent_mean.size(), ds_c.cols());
    const double t3 = tau * tau * tau;
    return ds_c * (z / tau) - s * (z / (2.0 * t3)) * dtau2_c.transpose();
  }

  Matrix d_mean_x(double z) const {
    if (!informative) return dmean_x;
    return dmean_x + ds_x * (z / tau);
  }
};

inline FantasyBlock fantasy_block(const FantasyCore& core, const QueryCache& pq, bool grad_candidate,
                                  int n_shared_x) {
  const GaussianProcess& gp = *core.parent;
  const Hyperparameters& hy = gp.hyper();
  const Eigen::Index l = pq.points.rows();
  const Eigen::Index n = gp.size();
  const int dc = gp.dim();
  FantasyBlock b;
  b.parent_mean = pq.mean;
  b.tau = core.tau;
  b.informative = core.informative;

  Vector kqc(l);
  for (Eigen::Index j = 0; j < l; ++j) kqc[j] = kernel_value(pq.points.row(j), core.candidate, hy);
  b.s = kqc - pq.v.transpose() * core.vc;
  const double t2 = core.tau2;
  b.cov = pq.cov;
  if (b.informative) b.cov.noalias() -= b.s * b.s.transpose() / t2;
  b.cov = 0.5 * (b.cov + b.cov.transpose());

  auto fantasy_term = [&](const Vector& ds, double dtau2) {
    Matrix m = ds * b.s.transpose();
    Matrix out = -(m + m.transpose()) / t2;
    if (dtau2 != 0.0) out += b.s * b.s.transpose() * (dtau2 / (t2 * t2));
    return out;
  };

  if (grad_candidate) {
    b.ds_c.setZero(l, dc);
    b.dtau2_c.setZero(dc);
    if (b.informative) {
      const Matrix gx = kernel_grad_rows(gp.inputs(), core.candidate, hy, dc);  // n x dc
      Vector tmp;
      for (Eigen::Index j = 0; j < l; ++j) {
        kernel_grad_first(core.candidate, pq.points.row(j), hy, tmp);
        b.ds_c.row(j) = tmp.transpose();
      }
      if (n > 0) {
        b.ds_c.noalias() -= pq.w.transpose() * gx;
        b.dtau2_c = -2.0 * gx.transpose() * core.u;
      }
    }
    for (int k = 0; k < dc; ++k) {
      b.dcov_c.push_back(b.informative ? fantasy_term(b.ds_c.col(k), b.dtau2_c[k])
                                       : Matrix::Zero(l, l));
    }
  }

  if (n_shared_x > 0) {
    b.dmean_x.setZero(l, n_shared_x);
    b.ds_x.setZero(l, n_shared_x);
    std::vector<Matrix> dk(n_shared_x, Matrix(n, l));
    Vector tmp;
    for (Eigen::Index j = 0; j < l; ++j) {
      const Matrix gr = kernel_grad_rows(gp.inputs(), pq.points.row(j).transpose(), hy, n_shared_x);
      for (int k = 0; k < n_shared_x; ++k) dk[k].col(j) = gr.col(k);
      kernel_grad_first(pq.points.row(j).transpose(), core.candidate, hy, tmp);
      b.ds_x.row(j) = tmp.head(n_shared_x).transpose();
    }
    for (int k = 0; k < n_shared_x; ++k) {
      b.dmean_x.col(k) = dk[k].transpose() * gp.alpha_vector();
      b.ds_x.col(k) -= dk[k].transpose() * core.u;
      Matrix t = dk[k].transpose() * pq.w;
      Matrix dcov = -(t + t.transpose());
      if (b.informative) dcov += fantasy_term(b.ds_x.col(k), 0.0);
      b.dcov_x.push_back(std::move(dcov));
    }
  }

  CholeskyFactor f = cholesky_with_jitter(b.cov, hy.outputscale, "fantasy posterior covariance",
                                          kPosteriorJitter);
  b.chol = std::move(f.lower);
  b.degenerate = f.degenerate;
  auto dchol = [&](const std::vector<Matrix>& src, std::vector<Matrix>& dst) {
    dst.clear();
    for (const Matrix& d : src) {
      dst.push_back(b.degenerate ? Matrix::Zero(l, l) : cholesky_derivative(b.chol, d));
    }
  };
  dchol(b.dcov_c, b.dchol_c);
  dchol(b.dcov_x, b.dchol_x);
  return b;
}

class FantasyModel {
 public:
  FantasyModel(std::shared_ptr<const FantasyCore> core, double z0)
      : core_(std::move(core)), z0_(z0), target_(core_->mean_c + core_->tau * z0) {}

  const GaussianProcess& parent() const { return *core_->parent; }
  const FantasyCore& core() const { return *core_; }
  const Vector& candidate() const { return core_->candidate; }
  double z0() const { return z0_; }
  double fantasy_target() const { return target_; }
  int dim() const { return parent().dim(); }

  Posterior posterior(const Matrix& q) const {
    FantasyBlock b = fantasy_block(*core_, parent().query(q), false, 0);
    return {b.mean(z0_), std::move(b.cov)};
  }

  // Derivatives along the shared query x coordinates.
  PosteriorGradients posterior_with_gradients(const Matrix& q, int n_shared) const {
    FantasyBlock b = fantasy_block(*core_, parent().query(q), false, n_shared);
    PosteriorGradients g;
    g.mean = b.mean(z0_);
    g.d_mean = b.d_mean_x(z0_);
    g.cov = std::move(b.cov);
    g.chol = std::move(b.chol);
    g.degenerate = b.degenerate;
    g.d_cov = std::move(b.dcov_x);
    g.d_chol = std::move(b.dchol_x);
    return g;
  }

  // Derivatives along the candidate (x, w) that produced this fantasy.
  PosteriorGradients candidate_gradients(const Matrix& q) const {
    FantasyBlock b = fantasy_block(*core_, parent().query(q), true, 0);
    PosteriorGradients g;
    g.mean = b.mean(z0_);
    g.d_mean = b.d_mean_candidate(z0_);
    g.cov = std::move(b.cov);
    g.chol = std::move(b.chol);
    g.degenerate = b.degenerate;
    g.d_cov = std::move(b.dcov_c);
    g.d_chol = std::move(b.dchol_c);
    return g;
  }

  // The same model built from scratch on n+1 points.
  GaussianProcess materialize() const { return parent().with_observation(candidate(), target_); }

 private:
  std::shared_ptr<const FantasyCore> core_;
  double z0_;
  double target_;
};

inline std::vector<FantasyModel> fantasize(std::shared_ptr<const GaussianProcess> gp,
                                           const Vector& candidate, const Vector& z0_samples) {
  if (!z0_samples.allFinite()) throw InvalidArgument("fantasize: non-finite base samples");
  auto core = make_fantasy_core(std::move(gp), candidate);
  std::vector<FantasyModel> out;
  out.reserve(z0_samples.size());
  for (Eigen::Index i = 0; i < z0_samples.size(); ++i) out.emplace_back(core, z0_samples[i]);
  return out;
}

}  // namespace riskopt::gp
