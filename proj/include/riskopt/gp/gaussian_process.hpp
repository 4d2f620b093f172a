#pragma once

#include <string>
#include <utility>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/gp/kernel.hpp"
#include "riskopt/gp/transforms.hpp"
#include "riskopt/linalg.hpp"

namespace riskopt::gp {

struct Posterior {
  Vector mean;
  Matrix cov;
};

// Posterior on a block of query points together with derivatives along a set
// of directions. d_mean has one column per direction; d_cov and d_chol hold one
// matrix per direction. chol factors cov plus the posterior jitter.
struct PosteriorGradients {
  Vector mean;
  Matrix cov;
  Matrix chol;
  bool degenerate = false;
  Matrix d_mean;
  std::vector<Matrix> d_cov;
  std::vector<Matrix> d_chol;
};

// Intermediate quantities for one query block, reused by fantasy updates.
struct QueryCache {
  Matrix points;  // L x d, unit cube
  Matrix kxq;     // n x L
  Matrix v;       // L^-1 kxq
  Matrix w;       // A^-1 kxq
  Vector mean;
  Matrix cov;
};

// G(i, k) = d k(a, X_i) / d a_k for k < ncols.
inline Matrix kernel_grad_rows(const Matrix& x, const Vector& a, const Hyperparameters& hyper,
                               int ncols) {
  Matrix g(x.rows(), ncols);
  Vector tmp;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    kernel_grad_first(a, x.row(i), hyper, tmp);
    g.row(i) = tmp.head(ncols).transpose();
  }
  return g;
}

inline void factor_with_derivatives(PosteriorGradients& g, double scale) {
  CholeskyFactor f = cholesky_with_jitter(g.cov, scale, "posterior covariance", kPosteriorJitter);
  g.chol = std::move(f.lower);
  g.degenerate = f.degenerate;
  const Eigen::Index l = g.cov.rows();
  g.d_chol.clear();
  for (const Matrix& d : g.d_cov) {
    g.d_chol.push_back(g.degenerate ? Matrix::Zero(l, l) : cholesky_derivative(g.chol, d));
  }
}

class GaussianProcess {
 public:
  GaussianProcess() = default;

  // inputs live in the unit cube, targets are standardized outcomes.
  GaussianProcess(Matrix inputs, Vector targets, Hyperparameters hyper,
                  InputTransform input_transform = {}, OutcomeTransform outcome_transform = {},
                  double prior_mean = 0.0)
      : x_(std::move(inputs)),
        y_(std::move(targets)),
        hyper_(std::move(hyper)),
        in_(std::move(input_transform)),
        out_(outcome_transform),
        prior_mean_(prior_mean) {
    const int d = hyper_.dim();
    hyper_.validate(d);
    if (x_.rows() == 0) x_.resize(0, d);
    if (x_.cols() != d) {
      throw InvalidArgument("GaussianProcess: inputs have " + std::to_string(x_.cols()) +
                            " columns, hyperparameters expect " + std::to_string(d));
    }
    if (x_.rows() != y_.size()) throw InvalidArgument("GaussianProcess: inputs/targets size mismatch");
    if (!x_.allFinite() || !y_.allFinite()) throw InvalidArgument("GaussianProcess: non-finite data");
    if (in_.lower.size() == 0) in_ = InputTransform::identity(d);
    in_.validate();
    refactor();
  }

  int dim() const { return hyper_.dim(); }
  int size() const { return static_cast<int>(x_.rows()); }
  const Matrix& inputs() const { return x_; }
  const Vector& targets() const { return y_; }
  const Hyperparameters& hyper() const { return hyper_; }
  const InputTransform& input_transform() const { return in_; }
  const OutcomeTransform& outcome_transform() const { return out_; }
  double prior_mean() const { return prior_mean_; }
  const Matrix& chol_factor() const { return chol_; }
  const Vector& alpha_vector() const { return alpha_; }
  double training_jitter() const { return jitter_; }
  // Noise variance plus whatever jitter the training factorization needed.
  double effective_noise() const { return hyper_.noise_variance + jitter_; }

  Matrix cross_covariance(const Matrix& q) const { return kernel_matrix(x_, q, hyper_); }

  Vector cross_covariance(const Vector& c) const {
    Vector k(x_.rows());
    for (Eigen::Index i = 0; i < x_.rows(); ++i) k[i] = kernel_value(x_.row(i), c, hyper_);
    return k;
  }

  QueryCache query(const Matrix& q) const {
    check_query(q);
    QueryCache c;
    c.points = q;
    c.kxq = cross_covariance(q);
    c.v = chol_.triangularView<Eigen::Lower>().solve(c.kxq);
    c.w = chol_.transpose().triangularView<Eigen::Upper>().solve(c.v);
    c.mean = Vector::Constant(q.rows(), prior_mean_) + c.kxq.transpose() * alpha_;
    c.cov = kernel_matrix(q, hyper_);
    c.cov.noalias() -= c.v.transpose() * c.v;
    c.cov = 0.5 * (c.cov + c.cov.transpose());
    return c;
  }

  Posterior posterior(const Matrix& q) const {
    QueryCache c = query(q);
    return {std::move(c.mean), std::move(c.cov)};
  }

  Vector posterior_mean(const Matrix& q) const {
    check_query(q);
    return Vector::Constant(q.rows(), prior_mean_) + cross_covariance(q).transpose() * alpha_;
  }

  double posterior_mean(const Vector& x) const {
    return prior_mean_ + cross_covariance(x).dot(alpha_);
  }

  double posterior_variance(const Vector& x) const {
    const Vector v = chol_.triangularView<Eigen::Lower>().solve(cross_covariance(x));
    return hyper_.outputscale - v.squaredNorm();
  }

  // Same hyperparameters and transforms, one more observation.
  GaussianProcess with_observation(const Vector& x, double y) const {
    Matrix nx(x_.rows() + 1, x_.cols());
    nx << x_, x.transpose();
    Vector ny(y_.size() + 1);
    ny << y_, y;
    return GaussianProcess(std::move(nx), std::move(ny), hyper_, in_, out_, prior_mean_);
  }

  // Model of -F: useful to turn minimization-oriented acquisitions around.
  GaussianProcess negated() const {
    OutcomeTransform o = out_;
    o.mean = -o.mean;
    return GaussianProcess(x_, -y_, hyper_, in_, o, -prior_mean_);
  }

  void check_query(const Matrix& q) const {
    if (q.cols() != dim()) {
      throw InvalidArgument("query has " + std::to_string(q.cols()) + " columns, model has " +
                            std::to_string(dim()));
    }
    if (!q.allFinite()) throw InvalidArgument("query contains non-finite coordinates");
  }

 private:
  void refactor() {
    const Eigen::Index n = x_.rows();
    Matrix a = kernel_matrix(x_, hyper_);
    a.diagonal().array() += hyper_.noise_variance;
    CholeskyFactor f = cholesky_with_jitter(a, hyper_.outputscale, "training covariance A_n",
                                            kTrainingJitter);
    chol_ = n == 0 ? Matrix(0, 0) : std::move(f.lower);
    jitter_ = f.jitter;
    alpha_ = n == 0 ? Vector(0)
                    : chol_solve(chol_, (y_.array() - prior_mean_).matrix());
  }

  Matrix x_;
  Vector y_;
  Hyperparameters hyper_;
  InputTransform in_;
  OutcomeTransform out_;
  double prior_mean_ = 0.0;
  Matrix chol_;
  Vector alpha_;
  double jitter_ = 0.0;
};

// Derivatives with respect to the first n_shared coordinates of the query,
// moved jointly in every row (the decision x shared by the points (x, w_l)).
// A single-row query with n_shared = dim gives the ordinary gradient.
inline PosteriorGradients posterior_with_gradients(const GaussianProcess& gp, const Matrix& q,
                                                   int n_shared) {
  if (n_shared < 0 || n_shared > gp.dim()) throw InvalidArgument("posterior_with_gradients: bad n_shared");
  QueryCache c = gp.query(q);
  PosteriorGradients g;
  const Eigen::Index l = q.rows();
  const Eigen::Index n = gp.size();
  g.d_mean.setZero(l, n_shared);
  std::vector<Matrix> dk(n_shared, Matrix(n, l));
  for (Eigen::Index j = 0; j < l; ++j) {
    const Matrix gr = kernel_grad_rows(gp.inputs(), q.row(j).transpose(), gp.hyper(), n_shared);
    for (int k = 0; k < n_shared; ++k) dk[k].col(j) = gr.col(k);
  }
  for (int k = 0; k < n_shared; ++k) {
    g.d_mean.col(k) = dk[k].transpose() * gp.alpha_vector();
    Matrix t = dk[k].transpose() * c.w;
    g.d_cov.push_back(-(t + t.transpose()));
  }
  g.mean = std::move(c.mean);
  g.cov = std::move(c.cov);
  factor_with_derivatives(g, gp.hyper().outputscale);
  return g;
}

}  // namespace riskopt::gp
