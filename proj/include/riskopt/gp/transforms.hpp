#pragma once

#include <cmath>

#include "riskopt/errors.hpp"
#include "riskopt/linalg.hpp"

namespace riskopt::gp {

// Per-dimension affine map between the raw domain and the unit cube.
struct InputTransform {
  Vector lower;
  Vector upper;

  static InputTransform identity(int dim) {
    return {Vector::Zero(dim), Vector::Ones(dim)};
  }

  int dim() const { return static_cast<int>(lower.size()); }

  void validate() const {
    if (lower.size() != upper.size()) throw InvalidArgument("input transform: bound size mismatch");
    for (Eigen::Index k = 0; k < lower.size(); ++k) {
      if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || !(upper[k] > lower[k])) {
        throw InvalidArgument("input transform: empty or non-finite interval in dimension " +
                              std::to_string(k));
      }
    }
  }

  Vector to_unit(const Vector& raw) const {
    return ((raw - lower).array() / (upper - lower).array()).matrix();
  }
  Vector from_unit(const Vector& unit) const {
    return (lower.array() + unit.array() * (upper - lower).array()).matrix();
  }
  Matrix to_unit_rows(const Matrix& raw) const {
    Matrix out(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) out.row(i) = to_unit(raw.row(i).transpose());
    return out;
  }
  Matrix from_unit_rows(const Matrix& unit) const {
    Matrix out(unit.rows(), unit.cols());
    for (Eigen::Index i = 0; i < unit.rows(); ++i) out.row(i) = from_unit(unit.row(i).transpose());
    return out;
  }
};

// raw = mean + scale * standardized
struct OutcomeTransform {
  double mean = 0.0;
  double scale = 1.0;

  // Sample standard deviation; a constant target vector keeps scale 1.
  static OutcomeTransform fit(const Vector& y) {
    OutcomeTransform t;
    const Eigen::Index n = y.size();
    if (n == 0) return t;
    t.mean = y.mean();
    if (n > 1) {
      const double var = (y.array() - t.mean).square().sum() / static_cast<double>(n - 1);
      const double sd = std::sqrt(var);
      if (sd > 0.0 && std::isfinite(sd)) t.scale = sd;
    }
    return t;
  }

  Vector standardize(const Vector& y) const { return ((y.array() - mean) / scale).matrix(); }
  double standardize(double y) const { return (y - mean) / scale; }
  double unstandardize(double z) const { return mean + scale * z; }
  double variance_to_standardized(double v) const { return v / (scale * scale); }
  double variance_to_raw(double v) const { return v * scale * scale; }
};

inline bool in_unit_cube(const Vector& x, double tol = 0.0) {
  return (x.array() >= -tol).all() && (x.array() <= 1.0 + tol).all();
}

}  // namespace riskopt::gp
