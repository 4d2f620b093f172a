#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "riskopt/errors.hpp"

namespace riskopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Jitter policy: base jitter is 1e-9 * scale, multiplied by 10 on each failed
// attempt, at most four escalations.
struct JitterPolicy {
  double base = 1e-9;
  double growth = 10.0;
  int max_escalations = 4;
  // Try a plain factorization before adding any jitter.
  bool try_unjittered = false;
  // Matrices whose largest diagonal entry is at or below
  // degenerate_tol * scale are treated as zero and get a zero factor.
  double degenerate_tol = 0.0;
};

inline constexpr JitterPolicy kTrainingJitter{1e-9, 10.0, 4, true, 0.0};
inline constexpr JitterPolicy kPosteriorJitter{1e-9, 10.0, 4, false, 1e-10};

struct CholeskyFactor {
  Matrix lower;
  double jitter = 0.0;
  bool degenerate = false;
};

inline CholeskyFactor cholesky_with_jitter(const Matrix& m, double scale, std::string_view name,
                                           const JitterPolicy& policy = kPosteriorJitter) {
  const Eigen::Index n = m.rows();
  CholeskyFactor out;
  if (n == 0) return out;
  if (!m.allFinite()) {
    throw NumericalError("non-finite entries in matrix '" + std::string(name) + "'");
  }
  if (policy.degenerate_tol > 0.0 && m.diagonal().maxCoeff() <= policy.degenerate_tol * scale) {
    out.lower = Matrix::Zero(n, n);
    out.degenerate = true;
    return out;
  }
  auto attempt = [&](double jitter) {
    Matrix a = m;
    a.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) return false;
    Matrix l = llt.matrixL();
    if (!l.allFinite() || (l.diagonal().array() <= 0.0).any()) return false;
    out.lower = std::move(l);
    out.jitter = jitter;
    return true;
  };
  if (policy.try_unjittered && attempt(0.0)) return out;
  double jitter = policy.base * scale;
  for (int k = 0; k <= policy.max_escalations; ++k) {
    if (attempt(jitter)) return out;
    jitter *= policy.growth;
  }
  throw NumericalError("Cholesky factorization of '" + std::string(name) + "' (" +
                       std::to_string(n) + "x" + std::to_string(n) +
                       ") failed after jitter escalation");
}

// Forward-mode derivative of the Cholesky factor: given C = chol(S) and a
// symmetric perturbation dS, returns dC = C * Phi(C^-1 dS C^-T), where Phi keeps
// the lower triangle and halves the diagonal.
inline Matrix cholesky_derivative(const Matrix& chol, const Matrix& d_sigma) {
  const auto tri = chol.triangularView<Eigen::Lower>();
  Matrix x = tri.solve(d_sigma);
  x = tri.solve(x.transpose()).transpose();
  Matrix phi = x.triangularView<Eigen::Lower>();
  phi.diagonal() *= 0.5;
  return chol * phi;
}

// Solves (L L^T) x = b.
inline Vector chol_solve(const Matrix& lower, const Vector& b) {
  Vector y = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace riskopt
