#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "riskopt/gp/gaussian_process.hpp"

namespace riskopt::testing {

inline Matrix uniform_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Vector uniform_vector(std::mt19937_64& rng, Eigen::Index n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// A smooth random GP with n training points in dim dimensions.
inline gp::GaussianProcess random_gp(std::mt19937_64& rng, int dim, int n, double noise = 1e-2) {
  std::uniform_real_distribution<double> ls(0.3, 0.8);
  std::normal_distribution<double> z(0.0, 1.0);
  gp::Hyperparameters h;
  h.lengthscales.resize(dim);
  for (int k = 0; k < dim; ++k) h.lengthscales[k] = ls(rng);
  h.outputscale = 0.5 + std::uniform_real_distribution<double>(0.0, 1.5)(rng);
  h.noise_variance = noise;
  Matrix x = uniform_matrix(rng, n, dim);
  Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = std::sin(3.0 * x.row(i).sum()) + 0.3 * z(rng);
  return gp::GaussianProcess(std::move(x), std::move(y), std::move(h));
}

inline double rel_error(const Vector& a, const Vector& b, double floor = 1e-6) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

inline double rel_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

}  // namespace riskopt::testing
