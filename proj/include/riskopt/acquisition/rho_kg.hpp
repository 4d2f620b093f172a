#pragma once

#include <algorithm>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "riskopt/acquisition/context.hpp"
#include "riskopt/optimize/lbfgs.hpp"
#include "riskopt/optimize/multistart.hpp"
#include "riskopt/qmc/sobol.hpp"
#include "riskopt/risk/posterior_risk.hpp"

namespace riskopt::acquisition {

namespace detail {

// Inner objectives R_0..R_K for one candidate. R_i (i >= 1) is the posterior
// risk under fantasy i on base-sample slice i. R_0 is the current-model term:
// the fantasy mixture (1/K) sum_i R_i by default, or the parent posterior risk
// on slice 0 when ctx.separate_parent is set.
class CandidateEvaluator {
 public:
  CandidateEvaluator(const AcqContext& ctx, const Vector& candidate, int nfant)
      : ctx_(ctx), nfant_(nfant), core_(gp::make_fantasy_core(ctx.gp, candidate)) {
    if (nfant < 1 || nfant > ctx.fantasies()) throw InvalidArgument("acquisition: bad fantasy count");
  }

  int problems() const { return nfant_ + 1; }
  int fantasies() const { return nfant_; }

  gp::QueryCache parent_block(const Vector& x) const {
    return ctx_.gp->query(risk::risk_query(x, ctx_.base.wset));
  }

  double z(int i) const { return ctx_.base.z0[i - 1]; }

  Vector values(const gp::QueryCache& pq) const {
    const gp::FantasyBlock fb = gp::fantasy_block(*core_, pq, false, 0);
    Vector r(nfant_ + 1);
    double mix = 0.0;
    for (int i = 1; i <= nfant_; ++i) {
      r[i] = risk::risk_from_block(fb.mean(z(i)), fb.chol, ctx_.base.zl[i], weights(), ctx_.spec).estimate;
      mix += r[i];
    }
    r[0] = ctx_.separate_parent ? parent_value(pq) : mix / nfant_;
    return r;
  }

  Vector values(const Vector& x) const { return values(parent_block(x)); }

  double value_grad_x(int i, const Vector& x, Vector& g) const {
    const Matrix q = risk::risk_query(x, ctx_.base.wset);
    const int dx = ctx_.dx;
    if (i == 0 && ctx_.separate_parent) {
      const gp::PosteriorGradients pg = gp::posterior_with_gradients(*ctx_.gp, q, dx);
      return risk::risk_gradient_from_block(pg.mean, pg.chol, ctx_.base.zl[0], weights(), ctx_.spec,
                                            pg.d_mean, pg.d_chol, g);
    }
    const gp::FantasyBlock fb = gp::fantasy_block(*core_, ctx_.gp->query(q), false, dx);
    if (i > 0) {
      return risk::risk_gradient_from_block(fb.mean(z(i)), fb.chol, ctx_.base.zl[i], weights(), ctx_.spec,
                                            fb.d_mean_x(z(i)), fb.dchol_x, g);
    }
    g.setZero(dx);
    double v = 0.0;
    Vector gi;
    for (int f = 1; f <= nfant_; ++f) {
      v += risk::risk_gradient_from_block(fb.mean(z(f)), fb.chol, ctx_.base.zl[f], weights(), ctx_.spec,
                                          fb.d_mean_x(z(f)), fb.dchol_x, gi);
      g += gi;
    }
    g /= nfant_;
    return v / nfant_;
  }

  // Value of problem i at x; adds coef * dR_i/dc to grad. With chain, x is the
  // candidate's own decision and moves with it.
  double accumulate_candidate_grad(int i, const Vector& x, double coef, bool chain, Vector& grad) const {
    const int dx = ctx_.dx;
    if (i == 0 && ctx_.separate_parent) {
      const gp::QueryCache pq = parent_block(x);
      if (chain) {
        Vector gx;
        const double v = value_grad_x(0, x, gx);
        grad.head(dx) += coef * gx;
        return v;
      }
      return parent_value(pq);
    }
    const gp::FantasyBlock fb = gp::fantasy_block(*core_, parent_block(x), true, chain ? dx : 0);
    const int lo = i == 0 ? 1 : i;
    const int hi = i == 0 ? nfant_ : i;
    const double c = i == 0 ? coef / nfant_ : coef;
    double v = 0.0;
    Vector gc, gx;
    for (int f = lo; f <= hi; ++f) {
      v += risk::risk_gradient_from_block(fb.mean(z(f)), fb.chol, ctx_.base.zl[f], weights(), ctx_.spec,
                                          fb.d_mean_candidate(z(f)), fb.dchol_c, gc);
      grad += c * gc;
      if (chain) {
        risk::risk_gradient_from_block(fb.mean(z(f)), fb.chol, ctx_.base.zl[f], weights(), ctx_.spec,
                                       fb.d_mean_x(z(f)), fb.dchol_x, gx);
        grad.head(dx) += c * gx;
      }
    }
    return i == 0 ? v / nfant_ : v;
  }

 private:
  const Vector& weights() const { return ctx_.base.wset.weights; }

  double parent_value(const gp::QueryCache& pq) const {
    const CholeskyFactor c =
        cholesky_with_jitter(pq.cov, ctx_.gp->hyper().outputscale, "posterior covariance");
    return risk::risk_from_block(pq.mean, c.lower, ctx_.base.zl[0], weights(), ctx_.spec).estimate;
  }

  const AcqContext& ctx_;
  int nfant_;
  std::shared_ptr<const gp::FantasyCore> core_;
};

inline int argmin_index(const Vector& v, int begin, int end) {
  int best = begin;
  for (int j = begin + 1; j < end; ++j)
    if (v[j] < v[best]) best = j;
  return best;
}

inline void solve_inner_problems(AcqContext& ctx, const CandidateEvaluator& ev) {
  const int p = ev.problems();
  const int dx = ctx.dx;
  std::vector<Vector> sol(p);
  if (ctx.inner.grid) {
    const Matrix& grid = *ctx.inner.grid;
    if (grid.cols() != dx || grid.rows() == 0) throw InvalidArgument("inner grid has the wrong shape");
    Matrix table(grid.rows(), p);
    for (Eigen::Index r = 0; r < grid.rows(); ++r) table.row(r) = ev.values(Vector(grid.row(r).transpose())).transpose();
    for (int i = 0; i < p; ++i) {
      const Vector col = table.col(i);
      sol[i] = grid.row(argmin_index(col, 0, static_cast<int>(grid.rows()))).transpose();
    }
  } else {
    const Vector lo = Vector::Zero(dx), hi = Vector::Ones(dx);
    const Matrix raw = qmc::sobol_points(dx, ctx.inner.raw_samples, qmc::child_seed(ctx.inner.seed, 0));
    Matrix table(raw.rows(), p);
    for (Eigen::Index r = 0; r < raw.rows(); ++r) table.row(r) = ev.values(Vector(raw.row(r).transpose())).transpose();
    optimize::LbfgsOptions lopt;
    lopt.max_iterations = ctx.inner.max_iterations;
    std::vector<Vector> pool;
    const bool warm = static_cast<int>(ctx.inner_solutions.size()) == p;
    for (int i = 0; i < p; ++i) {
      std::mt19937_64 rng(qmc::child_seed(ctx.inner.seed, 1 + static_cast<std::uint64_t>(i)));
      const std::vector<int> picks =
          optimize::select_restarts(-table.col(i), std::min<int>(ctx.inner.restarts, static_cast<int>(raw.rows())), 1.0, rng);
      std::vector<Vector> starts;
      for (int k : picks) starts.push_back(raw.row(k).transpose());
      if (warm) starts.push_back(ctx.inner_solutions[i]);
      auto f = [&](const Vector& x, Vector& g) { return ev.value_grad_x(i, x, g); };
      double best = std::numeric_limits<double>::infinity();
      Vector bx = starts.front();
      for (const Vector& s : starts) {
        const optimize::LbfgsResult r = optimize::lbfgs_box(f, s, lo, hi, lopt);
        if (r.value < best) {
          best = r.value;
          bx = r.x;
        }
      }
      pool.push_back(bx);
    }
    if (warm)
      for (const Vector& s : ctx.inner_solutions) pool.push_back(s);
    // Every problem takes the best point of the shared pool, which keeps the
    // value nonnegative (min of an average >= average of mins on one set).
    Matrix vals(static_cast<Eigen::Index>(pool.size()), p);
    for (std::size_t j = 0; j < pool.size(); ++j) vals.row(static_cast<Eigen::Index>(j)) = ev.values(pool[j]).transpose();
    for (int i = 0; i < p; ++i) {
      const Vector col = vals.col(i);
      sol[i] = pool[argmin_index(col, 0, static_cast<int>(pool.size()))];
    }
  }
  ctx.inner_solutions = std::move(sol);
  ctx.inner_stale_counter = 0;
  ++ctx.inner_solves;
}

inline void check_candidate(const AcqContext& ctx, const Vector& c) {
  if (c.size() != ctx.dim()) {
    throw InvalidArgument("candidate has " + std::to_string(c.size()) + " coordinates, model has " +
                          std::to_string(ctx.dim()));
  }
  if (!c.allFinite()) throw InvalidArgument("candidate contains non-finite coordinates");
}

}  // namespace detail

/// SAA value and envelope gradient of rho-KG at candidate (x, w).
inline AcqValue rho_kg(AcqContext& ctx, const Vector& candidate, bool solve_inner) {
  detail::check_candidate(ctx, candidate);
  const int k = ctx.fantasies();
  const detail::CandidateEvaluator ev(ctx, candidate, k);
  if (solve_inner || static_cast<int>(ctx.inner_solutions.size()) != k + 1) {
    detail::solve_inner_problems(ctx, ev);
  } else {
    ++ctx.inner_stale_counter;
  }
  AcqValue out;
  out.gradient = Vector::Zero(ctx.dim());
  out.inner_values.resize(k + 1);
  out.inner_values[0] = ev.accumulate_candidate_grad(0, ctx.inner_solutions[0], 1.0, false, out.gradient);
  double mean_fantasy = 0.0;
  for (int i = 1; i <= k; ++i) {
    out.inner_values[i] =
        ev.accumulate_candidate_grad(i, ctx.inner_solutions[i], -1.0 / k, false, out.gradient);
    mean_fantasy += out.inner_values[i];
  }
  out.value = out.inner_values[0] - mean_fantasy / k;
  return out;
}

/// Inner minimization restricted to a finite decision set plus the
/// candidate's own x. The current-model term is minimized over the set alone.
inline AcqValue discrete_kg(const AcqContext& ctx, const Vector& candidate, const Matrix& set,
                            const std::vector<gp::QueryCache>& blocks, int nfant, bool with_gradient) {
  detail::check_candidate(ctx, candidate);
  const int n = static_cast<int>(set.rows());
  if (n == 0) throw InvalidArgument("approximate rho-KG needs at least one evaluated decision");
  const detail::CandidateEvaluator ev(ctx, candidate, nfant);
  const Vector xc = candidate.head(ctx.dx);
  Matrix vals(n + 1, nfant + 1);
  for (int j = 0; j < n; ++j) vals.row(j) = ev.values(blocks[j]).transpose();
  vals.row(n) = ev.values(xc).transpose();

  AcqValue out;
  out.inner_values.resize(nfant + 1);
  const Vector c0 = vals.col(0);
  const int j0 = detail::argmin_index(c0, 0, n);
  out.inner_values[0] = vals(j0, 0);
  std::vector<int> arg(nfant + 1);
  double mean_fantasy = 0.0;
  for (int i = 1; i <= nfant; ++i) {
    const Vector ci = vals.col(i);
    arg[i] = detail::argmin_index(ci, 0, n + 1);
    out.inner_values[i] = vals(arg[i], i);
    mean_fantasy += out.inner_values[i];
  }
  out.value = out.inner_values[0] - mean_fantasy / nfant;
  out.gradient = Vector::Zero(ctx.dim());
  if (with_gradient) {
    ev.accumulate_candidate_grad(0, set.row(j0).transpose(), 1.0, false, out.gradient);
    for (int i = 1; i <= nfant; ++i) {
      const bool own = arg[i] == n;
      const Vector x = own ? xc : Vector(set.row(arg[i]).transpose());
      ev.accumulate_candidate_grad(i, x, -1.0 / nfant, own, out.gradient);
    }
  }
  return out;
}

/// rho-KG^apx: inner problems restricted to the evaluated decisions x_tilde
/// and the candidate's own x.
inline AcqValue rho_kg_apx(AcqContext& ctx, const Vector& candidate) {
  const auto& blocks = ctx.x_tilde_blocks();
  return discrete_kg(ctx, candidate, ctx.x_tilde, blocks, ctx.fantasies(), true);
}

/// Cheap raw-sample scores for rho-KG: a few fantasies, inner problems over
/// the evaluated decisions and the cached inner solutions.
inline Vector rho_kg_raw_scores(AcqContext& ctx, const Matrix& candidates) {
  Matrix set = ctx.x_tilde;
  std::vector<gp::QueryCache> blocks = ctx.x_tilde_blocks();
  if (!ctx.inner_solutions.empty()) {
    Matrix ext(set.rows() + static_cast<Eigen::Index>(ctx.inner_solutions.size()), ctx.dx);
    ext.topRows(set.rows()) = set;
    for (std::size_t i = 0; i < ctx.inner_solutions.size(); ++i) {
      ext.row(set.rows() + static_cast<Eigen::Index>(i)) = ctx.inner_solutions[i].transpose();
      blocks.push_back(ctx.gp->query(risk::risk_query(ctx.inner_solutions[i], ctx.base.wset)));
    }
    set = std::move(ext);
  }
  const int nf = std::min(ctx.score_fantasies, ctx.fantasies());
  Vector s(candidates.rows());
  for (Eigen::Index r = 0; r < candidates.rows(); ++r)
    s[r] = discrete_kg(ctx, candidates.row(r).transpose(), set, blocks, nf, false).value;
  return s;
}

inline Vector rho_kg_apx_raw_scores(AcqContext& ctx, const Matrix& candidates) {
  const auto& blocks = ctx.x_tilde_blocks();
  const int nf = std::min(ctx.score_fantasies, ctx.fantasies());
  Vector s(candidates.rows());
  for (Eigen::Index r = 0; r < candidates.rows(); ++r)
    s[r] = discrete_kg(ctx, candidates.row(r).transpose(), ctx.x_tilde, blocks, nf, false).value;
  return s;
}

}  // namespace riskopt::acquisition
