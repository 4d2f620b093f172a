#pragma once

#include <cmath>
#include <string>

#include "riskopt/errors.hpp"
#include "riskopt/linalg.hpp"

namespace riskopt::gp {

struct Hyperparameters {
  Vector lengthscales;        // one per input dimension, unit-cube coordinates
  double outputscale = 1.0;   // signal variance of standardized outcomes
  double noise_variance = 0;  // standardized-outcome units

  int dim() const { return static_cast<int>(lengthscales.size()); }

  void validate(int expected_dim) const {
    if (lengthscales.size() != expected_dim) {
      throw InvalidArgument("hyperparameters: expected " + std::to_string(expected_dim) +
                            " lengthscales, got " + std::to_string(lengthscales.size()));
    }
    if (!lengthscales.allFinite() || (lengthscales.array() <= 0.0).any()) {
      throw InvalidArgument("hyperparameters: lengthscales must be finite and positive");
    }
    if (!std::isfinite(outputscale) || outputscale <= 0.0) {
      throw InvalidArgument("hyperparameters: outputscale must be positive");
    }
    if (!std::isfinite(noise_variance) || noise_variance < 0.0) {
      throw InvalidArgument("hyperparameters: noise_variance must be nonnegative");
    }
  }
};

namespace detail {

inline constexpr double kSqrt5 = 2.23606797749978969640917366873;

// Matern 5/2 profile as a function of the scaled distance r.
inline double matern52_profile(double r) {
  const double sr = kSqrt5 * r;
  return (1.0 + sr + 5.0 * r * r / 3.0) * std::exp(-sr);
}

// (1/r) d/dr of the profile, finite at r = 0.
inline double matern52_dprofile_over_r(double r) {
  const double sr = kSqrt5 * r;
  return -(5.0 / 3.0) * (1.0 + sr) * std::exp(-sr);
}

template <class A, class B>
double scaled_sq_distance(const A& a, const B& b, const Vector& lengthscales) {
  double r2 = 0.0;
  for (Eigen::Index k = 0; k < lengthscales.size(); ++k) {
    const double d = (a[k] - b[k]) / lengthscales[k];
    r2 += d * d;
  }
  return r2;
}

}  // namespace detail

/// Matern 5/2 covariance with per-dimension lengthscales.
template <class A, class B>
double kernel_matern52(const A& a, const B& b, const Hyperparameters& hyper) {
  if (!a.allFinite() || !b.allFinite()) {
    throw InvalidArgument("kernel_matern52: non-finite input");
  }
  return hyper.outputscale *
         detail::matern52_profile(std::sqrt(detail::scaled_sq_distance(a, b, hyper.lengthscales)));
}

// Unchecked variant for inner loops.
template <class A, class B>
inline double kernel_value(const A& a, const B& b, const Hyperparameters& hyper) {
  return hyper.outputscale *
         detail::matern52_profile(std::sqrt(detail::scaled_sq_distance(a, b, hyper.lengthscales)));
}

// Gradient of k(a, b) with respect to a, written into grad.
template <class A, class B>
inline void kernel_grad_first(const A& a, const B& b, const Hyperparameters& hyper, Vector& grad) {
  const double r = std::sqrt(detail::scaled_sq_distance(a, b, hyper.lengthscales));
  const double c = hyper.outputscale * detail::matern52_dprofile_over_r(r);
  grad.resize(hyper.lengthscales.size());
  for (Eigen::Index k = 0; k < grad.size(); ++k) {
    const double l = hyper.lengthscales[k];
    grad[k] = c * (a[k] - b[k]) / (l * l);
  }
}

// Covariance matrix between the rows of a and the rows of b.
inline Matrix kernel_matrix(const Matrix& a, const Matrix& b, const Hyperparameters& hyper) {
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      k(i, j) = kernel_value(a.row(i), b.row(j), hyper);
    }
  }
  return k;
}

inline Matrix kernel_matrix(const Matrix& a, const Hyperparameters& hyper) {
  const Eigen::Index n = a.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = hyper.outputscale;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = kernel_value(a.row(i), a.row(j), hyper);
    }
  }
  return k;
}

}  // namespace riskopt::gp
