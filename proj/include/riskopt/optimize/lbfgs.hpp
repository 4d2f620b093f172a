#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/linalg.hpp"

namespace riskopt::optimize {

// Returns f(x) and writes the gradient into grad.
using ObjectiveFn = std::function<double(const Vector& x, Vector& grad)>;

// Called before iteration t of a descent; returning true means the objective
// has changed and f, grad must be re-evaluated at the current point.
using IterationHook = std::function<bool(int t)>;

struct LbfgsOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // on the infinity norm of the projected gradient
  int memory = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 20;
};

struct LbfgsResult {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

inline Vector clamp_to_box(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

inline Vector projected_gradient(const Vector& x, const Vector& g, const Vector& lower,
                                 const Vector& upper) {
  Vector pg = g;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if ((x[k] <= lower[k] && g[k] > 0.0) || (x[k] >= upper[k] && g[k] < 0.0)) pg[k] = 0.0;
  }
  return pg;
}

/// Projected L-BFGS for box constraints. Returns the best iterate seen since
/// the last objective refresh.
inline LbfgsResult lbfgs_box(const ObjectiveFn& f, const Vector& start, const Vector& lower,
                             const Vector& upper, const LbfgsOptions& opt = {},
                             const IterationHook& hook = {}) {
  const Eigen::Index d = start.size();
  if (lower.size() != d || upper.size() != d) throw InvalidArgument("lbfgs_box: bound size mismatch");
  if ((lower.array() > upper.array()).any()) throw InvalidArgument("lbfgs_box: empty box");

  LbfgsResult res;
  Vector x = clamp_to_box(start, lower, upper);
  Vector g(d);
  double fx = f(x, g);
  ++res.evaluations;
  if (!std::isfinite(fx) || !g.allFinite()) {
    throw InvalidArgument("lbfgs_box: objective is not finite at the starting point");
  }
  res.x = x;
  res.value = fx;

  std::deque<Vector> mem_s, mem_y;
  std::deque<double> mem_rho;

  for (int t = 0; t < opt.max_iterations; ++t) {
    if (hook && hook(t)) {
      fx = f(x, g);
      ++res.evaluations;
      if (!std::isfinite(fx) || !g.allFinite()) break;
      res.x = x;
      res.value = fx;
    }
    const Vector pg = projected_gradient(x, g, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < opt.tolerance) {
      res.converged = true;
      break;
    }
    Eigen::Array<bool, Eigen::Dynamic, 1> active = (pg.array() == 0.0) && (g.array() != 0.0);

    // two-loop recursion on the free variables
    Vector q = pg;
    const std::size_t m = mem_s.size();
    std::vector<double> a(m);
    for (std::size_t i = m; i-- > 0;) {
      a[i] = mem_rho[i] * mem_s[i].dot(q);
      q -= a[i] * mem_y[i];
    }
    if (m > 0) {
      const double gamma = mem_s.back().dot(mem_y.back()) / mem_y.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double b = mem_rho[i] * mem_y[i].dot(q);
      q += (a[i] - b) * mem_s[i];
    }
    Vector dir = -q;
    for (Eigen::Index k = 0; k < d; ++k)
      if (active[k]) dir[k] = 0.0;
    double slope = dir.dot(g);
    if (!(slope < 0.0) || !dir.allFinite()) {
      dir = -pg;
      slope = dir.dot(g);
      mem_s.clear();
      mem_y.clear();
      mem_rho.clear();
    }

    double step = m == 0 ? std::min(1.0, 1.0 / dir.lpNorm<Eigen::Infinity>()) : 1.0;
    bool have = false, backtracked = false;
    Vector best_x, best_g(d), xn, gn(d);
    double best_f = 0.0;
    for (int trial = 0; trial < opt.max_line_search; ++trial) {
      xn = clamp_to_box(x + step * dir, lower, upper);
      const double fn = f(xn, gn);
      ++res.evaluations;
      const bool ok = std::isfinite(fn) && gn.allFinite() &&
                      fn <= fx + opt.c1 * g.dot(xn - x);
      if (ok) {
        have = true;
        best_x = xn;
        best_f = fn;
        best_g = gn;
        const bool clipped = (xn.array() <= lower.array()).any() || (xn.array() >= upper.array()).any();
        if (backtracked || clipped || gn.dot(dir) >= opt.c2 * slope) break;
        step *= 2.0;
      } else {
        if (have) break;
        step *= 0.5;
        backtracked = true;
      }
    }
    if (!have) break;

    const Vector s = best_x - x;
    const Vector y = best_g - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      mem_s.push_back(s);
      mem_y.push_back(y);
      mem_rho.push_back(1.0 / sy);
      if (static_cast<int>(mem_s.size()) > opt.memory) {
        mem_s.pop_front();
        mem_y.pop_front();
        mem_rho.pop_front();
      }
    }
    x = best_x;
    fx = best_f;
    g = best_g;
    ++res.iterations;
    if (fx < res.value) {
      res.value = fx;
      res.x = x;
    }
    if (s.lpNorm<Eigen::Infinity>() < 1e-15) break;
  }
  return res;
}

}  // namespace riskopt::optimize
