#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/problems/problem.hpp"
#include "riskopt/qmc/sobol.hpp"
#include "riskopt/risk/empirical.hpp"

namespace riskopt::problems {

inline constexpr int kBruteForceGrid = 10000;
inline constexpr std::uint64_t kBruteForceSeed = 0x5eed0f0a11ULL;

/// Environment set used as ground truth: the full finite set, or a fixed
/// quasi-random grid of n points for a continuous box.
inline risk::WSet truth_wset(const ProblemSpec& p, int n = kBruteForceGrid) {
  if (p.w.finite) return p.w.set;
  Matrix u = qmc::sobol_points(p.dw(), n, kBruteForceSeed);
  for (int i = 0; i < n; ++i)
    u.row(i) = (p.w.lower.array() + u.row(i).transpose().array() * (p.w.upper - p.w.lower).array()).transpose();
  return risk::WSet::uniform(std::move(u));
}

/// Noise-free rho[F(x, W)] over the given environment set (raw coordinates).
inline double brute_force_risk(const ProblemSpec& p, const Vector& x, const risk::WSet& wset) {
  Vector f(wset.size());
  for (int l = 0; l < wset.size(); ++l) f[l] = p.evaluate(x, wset.points.row(l).transpose());
  return risk::empirical_risk(f, wset.weights, p.kind, p.alpha).value;
}

inline double brute_force_risk(const ProblemSpec& p, const Vector& x) {
  return brute_force_risk(p, x, truth_wset(p));
}

struct OptimumResult {
  Vector x;
  double value = 0.0;
  long evaluations = 0;
};

/// Global minimum of the true risk: full-factorial grid with `grid` points per
/// decision dimension, then coordinate-wise refinement on a shrinking lattice
/// (`refine` points per line) until the step falls below `min_step` of the range.
inline OptimumResult true_optimum_search(const ProblemSpec& p, int grid, int refine = 21, double min_step = 1e-7,
                                         std::optional<risk::WSet> wset = std::nullopt) {
  if (grid < 2 || refine < 3) throw InvalidArgument("true_optimum_search: grid sizes too small");
  const risk::WSet w = wset ? *wset : truth_wset(p);
  const int d = p.dx();
  const Vector range = p.x_upper - p.x_lower;
  OptimumResult best;
  best.value = INFINITY;
  auto consider = [&](const Vector& x) {
    const double v = brute_force_risk(p, x, w);
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.x = x;
    }
  };
  long total = 1;
  for (int k = 0; k < d; ++k) total *= grid;
  std::vector<int> idx(d, 0);
  for (long c = 0; c < total; ++c) {
    long r = c;
    Vector x(d);
    for (int k = 0; k < d; ++k) {
      idx[k] = static_cast<int>(r % grid);
      r /= grid;
      x[k] = p.x_lower[k] + range[k] * idx[k] / (grid - 1.0);
    }
    consider(x);
  }
  // lattice half-width starts at one coarse cell
  double step = 1.0 / (grid - 1.0);
  const int half = refine / 2;
  while (step > min_step) {
    const double before = best.value;
    for (int k = 0; k < d; ++k) {
      const Vector centre = best.x;
      for (int j = -half; j <= half; ++j) {
        if (j == 0) continue;
        Vector x = centre;
        x[k] = std::clamp(centre[k] + range[k] * step * j / half, p.x_lower[k], p.x_upper[k]);
        consider(x);
      }
    }
    if (!(best.value < before)) step *= 0.25;
  }
  return best;
}

struct TrueOptimumRecord {
  std::string problem;
  risk::RiskKind kind;
  double alpha;
  double value;
};

/// Rows "problem,risk,alpha,true_optimum" with a header; '#' lines are comments.
inline std::vector<TrueOptimumRecord> load_true_optima(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open true-optima file " + path);
  std::vector<TrueOptimumRecord> out;
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::string name, kind, alpha, value;
    if (!std::getline(ss, name, ',') || !std::getline(ss, kind, ',') || !std::getline(ss, alpha, ',') ||
        !std::getline(ss, value, ','))
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
    try {
      out.push_back({name, risk::parse_risk_kind(kind), std::stod(alpha), std::stod(value)});
    } catch (const std::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::optional<double> lookup_true_optimum(const std::vector<TrueOptimumRecord>& rows, const ProblemSpec& p) {
  for (const auto& r : rows)
    if (r.problem == p.name && r.kind == p.kind && std::abs(r.alpha - p.alpha) < 1e-12) return r.value;
  return std::nullopt;
}

#ifdef RISKOPT_DATA_DIR
inline std::string default_true_optima_path() { return std::string(RISKOPT_DATA_DIR) + "/true_optima.csv"; }
#else
inline std::string default_true_optima_path() { return "data/true_optima.csv"; }
#endif

}  // namespace riskopt::problems
