#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/optimize/lbfgs.hpp"
#include "riskopt/qmc/sobol.hpp"

namespace riskopt::optimize {

// Cheap scores for a batch of raw points (rows); larger is better.
using BatchScoreFn = std::function<Vector(const Matrix& points)>;
// Value to maximize and its gradient.
using AcqFn = std::function<double(const Vector& x, Vector& grad)>;

struct MultistartOptions {
  int restarts = 10;
  int raw_samples = 500;
  double eta = 1.0;
  LbfgsOptions lbfgs;
};

struct MultistartResult {
  Vector x;
  double value = -std::numeric_limits<double>::infinity();
  std::vector<LbfgsResult> runs;
  Matrix starts;
  int best_restart = -1;
};

inline Matrix scale_to_box(const Matrix& unit, const Vector& lower, const Vector& upper) {
  Matrix out(unit.rows(), unit.cols());
  for (Eigen::Index i = 0; i < unit.rows(); ++i)
    out.row(i) = (lower.array() + unit.row(i).transpose().array() * (upper - lower).array()).transpose();
  return out;
}

/// Restart indices drawn without replacement with probability proportional to
/// exp(eta * standardized score). The best raw point is always included unless
/// every score is equal, in which case selection is uniform.
inline std::vector<int> select_restarts(const Vector& scores, int restarts, double eta,
                                        std::mt19937_64& rng) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> finite;
  for (int i = 0; i < n; ++i)
    if (std::isfinite(scores[i])) finite.push_back(i);
  if (finite.empty()) throw NumericalError("multistart: every raw-sample score is non-finite");
  restarts = std::min<int>(restarts, static_cast<int>(finite.size()));

  double mean = 0.0, lo = scores[finite[0]], hi = lo;
  for (int i : finite) {
    mean += scores[i];
    lo = std::min(lo, scores[i]);
    hi = std::max(hi, scores[i]);
  }
  mean /= static_cast<double>(finite.size());
  Vector weight = Vector::Zero(n);
  std::vector<int> chosen;
  if (hi == lo) {
    for (int i : finite) weight[i] = 1.0;
  } else {
    double var = 0.0;
    for (int i : finite) var += (scores[i] - mean) * (scores[i] - mean);
    const double sd = finite.size() > 1 ? std::sqrt(var / static_cast<double>(finite.size() - 1)) : 1.0;
    const double zmax = (hi - mean) / sd;
    int best = finite[0];
    for (int i : finite) {
      weight[i] = std::exp(eta * ((scores[i] - mean) / sd - zmax));
      if (scores[i] > scores[best]) best = i;
    }
    chosen.push_back(best);
    weight[best] = 0.0;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (static_cast<int>(chosen.size()) < restarts) {
    const double total = weight.sum();
    if (!(total > 0.0)) break;
    const double target = u(rng) * total;
    double acc = 0.0;
    int pick = -1;
    for (int i = 0; i < n; ++i) {
      if (weight[i] <= 0.0) continue;
      acc += weight[i];
      pick = i;
      if (acc > target) break;
    }
    chosen.push_back(pick);
    weight[pick] = 0.0;
  }
  return chosen;
}

/// Multistart maximization: score raw Sobol points, pick restarts, ascend
/// from each with projected L-BFGS. Ties go to the lowest restart index.
inline MultistartResult multistart_maximize(const BatchScoreFn& score, const AcqFn& acq,
                                            const Vector& lower, const Vector& upper,
                                            const MultistartOptions& opt, std::mt19937_64& rng,
                                            const IterationHook& hook = {},
                                            const std::vector<Vector>& extra_starts = {}) {
  if (opt.restarts < 1 || opt.raw_samples < 1) throw InvalidArgument("multistart: counts must be positive");
  if (opt.restarts > opt.raw_samples) throw InvalidArgument("multistart: restarts exceed raw samples");
  const int d = static_cast<int>(lower.size());
  const std::uint64_t sobol_seed = rng();
  const Matrix raw = scale_to_box(qmc::sobol_points(d, opt.raw_samples, sobol_seed), lower, upper);
  const Vector scores = score(raw);
  const std::vector<int> picks = select_restarts(scores, opt.restarts, opt.eta, rng);

  MultistartResult res;
  res.starts.resize(static_cast<Eigen::Index>(picks.size() + extra_starts.size()), d);
  for (std::size_t i = 0; i < picks.size(); ++i) res.starts.row(static_cast<Eigen::Index>(i)) = raw.row(picks[i]);
  for (std::size_t i = 0; i < extra_starts.size(); ++i)
    res.starts.row(static_cast<Eigen::Index>(picks.size() + i)) = clamp_to_box(extra_starts[i], lower, upper).transpose();

  auto neg = [&](const Vector& x, Vector& g) {
    const double v = acq(x, g);
    g = -g;
    return -v;
  };
  for (Eigen::Index r = 0; r < res.starts.rows(); ++r) {
    LbfgsResult run = lbfgs_box(neg, res.starts.row(r).transpose(), lower, upper, opt.lbfgs, hook);
    if (-run.value > res.value) {
      res.value = -run.value;
      res.x = run.x;
      res.best_restart = static_cast<int>(r);
    }
    res.runs.push_back(std::move(run));
  }
  if (res.best_restart < 0) throw NumericalError("multistart: no restart produced a finite value");
  return res;
}

}  // namespace riskopt::optimize
