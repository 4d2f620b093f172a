#pragma once

#include <algorithm>

#include <boost/math/distributions/normal.hpp>

#include "riskopt/linalg.hpp"

namespace riskopt::qmc {

inline constexpr double kUniformClamp = 1e-12;

inline double inverse_normal_cdf(double u) {
  static const boost::math::normal_distribution<double> standard(0.0, 1.0);
  u = std::clamp(u, kUniformClamp, 1.0 - kUniformClamp);
  return boost::math::quantile(standard, u);
}

inline double normal_cdf(double z) {
  static const boost::math::normal_distribution<double> standard(0.0, 1.0);
  return boost::math::cdf(standard, z);
}

inline double normal_pdf(double z) {
  static const boost::math::normal_distribution<double> standard(0.0, 1.0);
  return boost::math::pdf(standard, z);
}

/// Elementwise inverse standard-normal CDF after clamping away from {0, 1}.
inline Matrix normal_transform(const Matrix& u) {
  return u.unaryExpr([](double v) { return inverse_normal_cdf(v); });
}

}  // namespace riskopt::qmc
