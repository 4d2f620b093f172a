#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/linalg.hpp"

namespace riskopt::risk {

// Mean is not a risk measure from the paper: it turns the machinery into
// expectation-based KG (posterior mean objective, no sampling).
enum class RiskKind { VaR, CVaR, Mean };

inline std::string to_string(RiskKind k) {
  switch (k) {
    case RiskKind::VaR: return "VaR";
    case RiskKind::CVaR: return "CVaR";
    case RiskKind::Mean: return "mean";
  }
  return "?";
}

inline RiskKind parse_risk_kind(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "var") return RiskKind::VaR;
  if (s == "cvar") return RiskKind::CVaR;
  if (s == "mean") return RiskKind::Mean;
  throw InvalidArgument("unknown risk measure '" + s + "'");
}

// L environmental points (rows) with probabilities.
struct WSet {
  Matrix points;
  Vector weights;

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }

  static WSet uniform(Matrix pts) {
    const auto n = pts.rows();
    return {std::move(pts), Vector::Constant(n, 1.0 / static_cast<double>(n))};
  }

  void validate() const {
    if (points.rows() != weights.size()) throw InvalidArgument("WSet: points/weights size mismatch");
    if (points.rows() == 0) throw InvalidArgument("WSet: empty set");
    if (!weights.allFinite() || (weights.array() < 0.0).any())
      throw InvalidArgument("WSet: weights must be finite and nonnegative");
    if (std::abs(weights.sum() - 1.0) > 1e-12) throw InvalidArgument("WSet: weights must sum to 1");
  }
};

struct RiskSpec {
  RiskKind kind = RiskKind::VaR;
  double alpha = 0.5;
  WSet w_distribution;  // may be empty when the environment is continuous

  void validate() const {
    if (kind == RiskKind::VaR && !(alpha > 0.0 && alpha < 1.0))
      throw InvalidArgument("VaR level must lie in (0,1)");
    if (kind == RiskKind::CVaR && !(alpha >= 0.0 && alpha < 1.0))
      throw InvalidArgument("CVaR level must lie in [0,1)");
  }
};

struct RiskSampleEstimate {
  double value = 0.0;
  std::optional<Vector> gradient;
  std::vector<int> ordering;  // ascending order of samples, ties by index
  // value = sum_i lambda_i * samples_i, so gradients follow by linearity.
  Vector lambda;
};

namespace detail {

inline constexpr double kCumulativeTol = 1e-12;

inline void check(const Vector& samples, const Vector& weights) {
  if (samples.size() == 0) throw InvalidArgument("risk estimate of an empty sample vector");
  if (weights.size() != 0 && weights.size() != samples.size())
    throw InvalidArgument("risk estimate: samples/weights size mismatch");
}

inline bool is_uniform(const Vector& weights) {
  if (weights.size() == 0) return true;
  for (Eigen::Index i = 1; i < weights.size(); ++i)
    if (weights[i] != weights[0]) return false;
  return true;
}

inline std::vector<int> ascending_order(const Vector& samples) {
  std::vector<int> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return samples[a] < samples[b]; });
  return idx;
}

// Number of order statistics below and including the VaR in the uniform case.
inline int uniform_rank(int n, double alpha) {
  const int m = static_cast<int>(std::ceil(static_cast<double>(n) * (alpha - kCumulativeTol)));
  return std::clamp(m, 1, n);
}

// Position (in sorted order) of the weighted VaR and the cumulative weight up to it.
inline std::pair<int, double> weighted_rank(const Vector& weights, const std::vector<int>& order,
                                            double alpha) {
  double cum = 0.0;
  const int n = static_cast<int>(order.size());
  for (int p = 0; p < n; ++p) {
    cum += weights[order[p]];
    if (cum >= alpha - kCumulativeTol) return {p, cum};
  }
  return {n - 1, cum};
}

inline RiskSampleEstimate finish(const Vector& samples, std::vector<int> order, Vector lambda) {
  RiskSampleEstimate r;
  r.value = lambda.dot(samples);
  r.ordering = std::move(order);
  r.lambda = std::move(lambda);
  return r;
}

}  // namespace detail

/// Smallest sample whose cumulative weight reaches alpha.
inline RiskSampleEstimate empirical_var(const Vector& samples, const Vector& weights, double alpha) {
  detail::check(samples, weights);
  const int n = static_cast<int>(samples.size());
  std::vector<int> order = detail::ascending_order(samples);
  const int p = detail::is_uniform(weights) ? detail::uniform_rank(n, alpha) - 1
                                            : detail::weighted_rank(weights, order, alpha).first;
  Vector lambda = Vector::Zero(n);
  lambda[order[p]] = 1.0;
  RiskSampleEstimate r = detail::finish(samples, std::move(order), std::move(lambda));
  r.value = samples[r.ordering[p]];
  return r;
}

/// Tail mean beyond the VaR. Uniform weights: mean of the top n - ceil(n alpha) + 1
/// order statistics. Otherwise Rockafellar-Uryasev with the VaR atom split.
inline RiskSampleEstimate empirical_cvar(const Vector& samples, const Vector& weights, double alpha) {
  detail::check(samples, weights);
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidArgument("CVaR level must lie in [0,1)");
  const int n = static_cast<int>(samples.size());
  std::vector<int> order = detail::ascending_order(samples);
  Vector lambda = Vector::Zero(n);
  double value = 0.0;
  if (detail::is_uniform(weights)) {
    const int m = detail::uniform_rank(n, alpha);
    const int count = n - m + 1;
    for (int p = m - 1; p < n; ++p) {
      lambda[order[p]] = 1.0 / count;
      value += samples[order[p]];
    }
    value /= count;
  } else {
    const auto [p, cum] = detail::weighted_rank(weights, order, alpha);
    const double denom = 1.0 - alpha;
    const double head = std::max(0.0, cum - alpha);
    lambda[order[p]] = head / denom;
    value = head * samples[order[p]];
    for (int q = p + 1; q < n; ++q) {
      lambda[order[q]] = weights[order[q]] / denom;
      value += weights[order[q]] * samples[order[q]];
    }
    value /= denom;
  }
  RiskSampleEstimate r = detail::finish(samples, std::move(order), std::move(lambda));
  r.value = std::clamp(value, samples.minCoeff(), samples.maxCoeff());
  return r;
}

inline RiskSampleEstimate empirical_mean(const Vector& samples, const Vector& weights) {
  detail::check(samples, weights);
  const int n = static_cast<int>(samples.size());
  Vector lambda = weights.size() == 0 ? Vector::Constant(n, 1.0 / n) : weights;
  return detail::finish(samples, detail::ascending_order(samples), std::move(lambda));
}

inline RiskSampleEstimate empirical_risk(const Vector& samples, const Vector& weights, RiskKind kind,
                                         double alpha) {
  switch (kind) {
    case RiskKind::VaR: return empirical_var(samples, weights, alpha);
    case RiskKind::CVaR: return empirical_cvar(samples, weights, alpha);
    case RiskKind::Mean: return empirical_mean(samples, weights);
  }
  throw InvalidArgument("unknown risk kind");
}

/// Value of empirical_risk without the ordering and weights, reusing buf.
/// Sorting (value, index) pairs reproduces the stable order, so the result is
/// bit-identical to empirical_risk(...).value.
inline double empirical_risk_value(const double* s, int n, const Vector& weights, RiskKind kind, double alpha,
                                   std::vector<std::pair<double, int>>& buf) {
  if (kind == RiskKind::Mean) {
    const Eigen::Map<const Vector> v(s, n);
    return empirical_mean(v, weights).value;
  }
  buf.resize(n);
  for (int i = 0; i < n; ++i) buf[i] = {s[i], i};
  std::sort(buf.begin(), buf.end());
  const bool uniform = detail::is_uniform(weights);
  if (kind == RiskKind::VaR) {
    if (uniform) return buf[detail::uniform_rank(n, alpha) - 1].first;
    double cum = 0.0;
    for (int p = 0; p < n; ++p) {
      cum += weights[buf[p].second];
      if (cum >= alpha - detail::kCumulativeTol) return buf[p].first;
    }
    return buf[n - 1].first;
  }
  double value = 0.0;
  if (uniform) {
    const int m = detail::uniform_rank(n, alpha);
    for (int p = m - 1; p < n; ++p) value += buf[p].first;
    value /= n - m + 1;
  } else {
    double cum = 0.0;
    int p = n - 1;
    for (int q = 0; q < n; ++q) {
      cum += weights[buf[q].second];
      if (cum >= alpha - detail::kCumulativeTol) {
        p = q;
        break;
      }
    }
    const double denom = 1.0 - alpha;
    value = std::max(0.0, cum - alpha) * buf[p].first;
    for (int q = p + 1; q < n; ++q) value += weights[buf[q].second] * buf[q].first;
    value /= denom;
  }
  return std::clamp(value, buf.front().first, buf.back().first);
}

}  // namespace riskopt::risk
