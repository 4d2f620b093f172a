#pragma once

#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "riskopt/acquisition/context.hpp"
#include "riskopt/acquisition/rho_kg.hpp"
#include "riskopt/errors.hpp"
#include "riskopt/optimize/multistart.hpp"

namespace riskopt::optimize {

struct OptimizerConfig {
  int q2 = 100;  // outer L-BFGS iterations per restart
  int q3 = 50;   // inner L-BFGS iterations per restart
  int tts_period = 10;
  int restarts = 10;
  int raw_samples = 500;
  int inner_restarts = 5;
  int inner_raw = 50;
  int memory = 10;
  double tolerance = 1e-6;
  double eta = 1.0;

  // restarts 10(dx+dw), raw 500(dx+dw), inner restarts 5dx, inner raw 50dx.
  static OptimizerConfig defaults(int dx, int dw) {
    OptimizerConfig c;
    c.restarts = 10 * (dx + dw);
    c.raw_samples = 500 * (dx + dw);
    c.inner_restarts = 5 * dx;
    c.inner_raw = 50 * dx;
    return c;
  }

  void validate() const {
    if (q2 < 1 || q3 < 1 || tts_period < 1 || restarts < 1 || raw_samples < 1 || inner_restarts < 1 ||
        inner_raw < 1 || memory < 1)
      throw InvalidArgument("optimizer config: all counts must be at least 1");
    if (!(tolerance > 0.0)) throw InvalidArgument("optimizer config: tolerance must be positive");
    if (restarts > raw_samples) throw InvalidArgument("optimizer config: restarts exceed raw samples");
  }

  LbfgsOptions outer_lbfgs() const {
    LbfgsOptions o;
    o.max_iterations = q2;
    o.memory = memory;
    o.tolerance = tolerance;
    return o;
  }
};

struct TtsResult {
  Vector candidate;
  double value = 0.0;
  long inner_solves = 0;
  long evaluations = 0;
  std::vector<std::pair<Vector, double>> trace;  // every acquisition evaluation
};

/// Multistart maximization of rho-KG in which the inner problems are re-solved
/// only on acquisition evaluations whose running count is a multiple of T.
/// Other evaluations reuse the cached inner solutions, which are also warm
/// starts for the next solve. T=1 is the fully nested optimization.
inline TtsResult tts_optimize(acquisition::AcqContext& ctx, const OptimizerConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  ctx.validate();
  ctx.inner.restarts = cfg.inner_restarts;
  ctx.inner.raw_samples = cfg.inner_raw;
  ctx.inner.max_iterations = cfg.q3;
  const long solves_before = ctx.inner_solves;

  TtsResult res;
  long count = 0;
  auto acq = [&](const Vector& c, Vector& g) {
    const bool solve = count % cfg.tts_period == 0;
    ++count;
    const acquisition::AcqValue v = acquisition::rho_kg(ctx, c, solve);
    g = v.gradient;
    res.trace.emplace_back(c, v.value);
    return v.value;
  };
  auto score = [&](const Matrix& pts) { return acquisition::rho_kg_raw_scores(ctx, pts); };

  MultistartOptions mo;
  mo.restarts = cfg.restarts;
  mo.raw_samples = cfg.raw_samples;
  mo.eta = cfg.eta;
  mo.lbfgs = cfg.outer_lbfgs();
  const MultistartResult ms =
      multistart_maximize(score, acq, Vector::Zero(ctx.dim()), Vector::Ones(ctx.dim()), mo, rng);
  res.candidate = ms.x;
  res.value = ms.value;
  res.inner_solves = ctx.inner_solves - solves_before;
  res.evaluations = static_cast<long>(res.trace.size());
  return res;
}

}  // namespace riskopt::optimize
