// Acceptance checks. One PASS/FAIL line per criterion:
//   acceptance --criterion N      (N = 1..8, or 0 for all)

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "riskopt.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/toy.hpp"

using namespace riskopt;
using namespace riskopt::testing;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes.
constexpr int kGradConfigs = 50;
constexpr double kRiskGradTol = 1e-3;
constexpr double kPosteriorGradTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr double kGradRuntimeS = 120.0;
constexpr int kOracleConfigs = 10;
constexpr int kOracleM = 5000;
constexpr long kOracleDraws = 1'000'000;
constexpr double kOracleSe = 3.0;
constexpr int kEmpiricalVectors = 1000;
constexpr double kToyOracleTol = 1e-4;
constexpr int kToyGrid = 10001;
constexpr int kNonnegCandidates = 100;
constexpr double kNonnegTol = 1e-6;
constexpr int kTtsTraceSeeds = 5;
constexpr int kTtsSeeds = 20;
constexpr double kTtsQualityTol = 0.05;
constexpr double kTtsReduction = 5.0;
constexpr int kBwSeeds = 20;
constexpr double kBwLevel = 0.05;
constexpr double kBwRuntimeS = 3600.0;
constexpr double kMeanTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- 1: gradients ----------------------------------------------------------

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  double worst_risk = 0.0, worst_post = 0.0;
  int bad = 0;
  for (int t = 0; t < kGradConfigs; ++t) {
    const int dx = 1 + t % 2;
    const int n = 2 + t % 9;               // <= 10
    const int l = 2 + (t * 7) % 11;        // <= 12
    const int m = 1 + (t * 5) % 16;        // <= 16
    const risk::WSet w = risk::WSet::uniform(uniform_matrix(rng, l, 1));
    const gp::GaussianProcess model = random_gp(rng, dx + 1, n);
    const qmc::BaseSampleSet base =
        qmc::make_base_samples(1, m, l, qmc::WDomain::finite_set(w), qmc::WSource::Full, 2000 + t);
    const risk::RiskKind kind = t % 2 ? risk::RiskKind::VaR : risk::RiskKind::CVaR;
    const double alpha = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    const risk::RiskSpec spec{kind, alpha, w};
    const Vector x = keep_interior(uniform_vector(rng, dx), 0.05);

    const Vector g = risk::posterior_risk_gradient(model, x, w, spec, base, risk::Wrt::InnerX);
    const Vector fd = central_difference(
        [&](const Vector& z) { return risk::posterior_risk(model, z, w, spec, base).estimate; }, x, kFdStep);
    const double er = rel_error(g, fd, 1e-4);

    const Matrix q = risk::risk_query(x, w);
    const gp::PosteriorGradients pg = gp::posterior_with_gradients(model, q, dx);
    double ep = 0.0;
    for (int k = 0; k < dx; ++k) {
      Matrix qp = q, qm = q;
      qp.col(k).array() += kFdStep;
      qm.col(k).array() -= kFdStep;
      const gp::Posterior pp = model.posterior(qp), pm = model.posterior(qm);
      const double s = model.hyper().outputscale;
      const Matrix cp = cholesky_with_jitter(pp.cov, s, "fd").lower;
      const Matrix cm = cholesky_with_jitter(pm.cov, s, "fd").lower;
      const Vector dm = (pp.mean - pm.mean) / (2.0 * kFdStep);
      const Matrix dc = (cp - cm) / (2.0 * kFdStep);
      ep = std::max({ep, rel_error(Vector(pg.d_mean.col(k)), dm), rel_error(pg.d_chol[k], dc)});
    }
    worst_risk = std::max(worst_risk, er);
    worst_post = std::max(worst_post, ep);
    if (er >= kRiskGradTol || ep >= kPosteriorGradTol) {
      ++bad;
      std::cerr << "  config " << t << ": risk rel err " << er << ", posterior rel err " << ep << "\n";
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < kGradRuntimeS,
          std::to_string(kGradConfigs - bad) + "/" + std::to_string(kGradConfigs) +
              " configs; worst risk-gradient rel err " + fmt("%.2e", worst_risk) + ", worst posterior rel err " +
              fmt("%.2e", worst_post) + ", " + fmt("%.1f", secs) + " s"};
}

// ---- 2: oracle equivalence -------------------------------------------------

Outcome oracle_equivalence() {
  std::mt19937_64 rng(2002);
  int ok = 0;
  double worst_z = 0.0;
  for (int t = 0; t < kOracleConfigs; ++t) {
    const int l = 3 + t % 6;
    const risk::WSet w = risk::WSet::uniform(uniform_matrix(rng, l, 1));
    const gp::GaussianProcess model = random_gp(rng, 2, 4 + t % 5, 1e-3);
    const Vector x = uniform_vector(rng, 1);
    const risk::RiskKind kind = t % 2 ? risk::RiskKind::VaR : risk::RiskKind::CVaR;
    const double alpha = 0.3 + 0.06 * t;
    const risk::RiskSpec spec{kind, alpha, w};
    const qmc::BaseSampleSet base =
        qmc::make_base_samples(1, kOracleM, l, qmc::WDomain::finite_set(w), qmc::WSource::Full, 3000 + t);
    const risk::PosteriorRiskResult r = risk::posterior_risk(model, x, w, spec, base);
    const gp::Posterior post = model.posterior(risk::risk_query(x, w));
    auto rho = [&](const Vector& f) { return kind == risk::RiskKind::VaR ? oracle_var(f, alpha) : oracle_cvar(f, alpha); };
    const McEstimate mc = mc_risk_oracle(post.mean, post.cov, rho, kOracleDraws, 4000 + t);
    const double se = std::sqrt(mc.sd * mc.sd / kOracleM + mc.sd * mc.sd / static_cast<double>(kOracleDraws));
    const double z = se > 0.0 ? std::abs(r.estimate - mc.mean) / se : (r.estimate == mc.mean ? 0.0 : INFINITY);
    worst_z = std::max(worst_z, z);
    if (z <= kOracleSe) ++ok;
  }

  std::mt19937_64 vr(2003);
  std::uniform_int_distribution<int> len(1, 30), pick(0, 6);
  int exact = 0;
  for (int t = 0; t < kEmpiricalVectors; ++t) {
    const int n = len(vr);
    Vector s(n);
    for (int i = 0; i < n; ++i) s[i] = t % 2 ? 0.5 * pick(vr) - 1.0 : std::uniform_real_distribution<double>(-5, 5)(vr);
    const double alpha = (t % 19 + 1) / 20.0;
    const Vector u = Vector::Constant(n, 1.0 / n);
    Vector wt = uniform_vector(vr, n, 0.05, 1.0);
    wt /= wt.sum();
    const bool same = risk::empirical_var(s, u, alpha).value == oracle_var(s, alpha) &&
                      risk::empirical_cvar(s, u, alpha).value == oracle_cvar(s, alpha) &&
                      risk::empirical_var(s, wt, alpha).value == oracle_weighted_var(s, wt, alpha);
    exact += same;
  }
  return {ok == kOracleConfigs && exact == kEmpiricalVectors,
          std::to_string(ok) + "/" + std::to_string(kOracleConfigs) + " configs within " + fmt("%.0f", kOracleSe) +
              " SE (worst " + fmt("%.2f", worst_z) + " SE); " + std::to_string(exact) + "/" +
              std::to_string(kEmpiricalVectors) + " sample vectors exact"};
}

// ---- 3: toy oracle match ---------------------------------------------------

gp::Hyperparameters fixed_hyper(double ls, double s, double noise) {
  gp::Hyperparameters h;
  h.lengthscales = Vector::Constant(2, ls);
  h.outputscale = s;
  h.noise_variance = noise;
  return h;
}

double grid_min(const gp::GaussianProcess& model, const Matrix& grid, double w, double z) {
  double best = INFINITY;
  Vector q(2);
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    q << grid(r, 0), w;
    best = std::min(best, model.posterior_mean(q) + std::sqrt(std::max(0.0, model.posterior_variance(q))) * z);
  }
  return best;
}

Outcome toy_oracle() {
  const Matrix grid = unit_grid(kToyGrid);
  int ok = 0;
  double worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    std::mt19937_64 rng(5000 + s);
    const Matrix x = uniform_matrix(rng, 6, 2);
    Vector y(6);
    for (int i = 0; i < 6; ++i) y[i] = problems::toy_function(x(i, 0), x(i, 1));
    const gp::Hyperparameters h = fixed_hyper(0.3 + 0.02 * s, 1.2, 1e-2);
    auto model = std::make_shared<const gp::GaussianProcess>(x, y, h);
    const double w = uniform_vector(rng, 1, 0.1, 0.9)[0];
    acquisition::AcqContext ctx;
    ctx.gp = model;
    ctx.dx = 1;
    ctx.base = qmc::make_base_samples(1, 1, 1, qmc::WDomain::finite_set(risk::WSet::uniform(Matrix::Constant(1, 1, w))),
                                      qmc::WSource::Full, 5100 + s);
    ctx.spec = risk::RiskSpec{risk::RiskKind::VaR, 0.5, ctx.base.wset};
    ctx.separate_parent = true;
    ctx.inner.seed = s;
    const Vector c = keep_interior(uniform_vector(rng, 2), 0.05);
    const double v = acquisition::rho_kg(ctx, c, true).value;

    const double z0 = ctx.base.z0[0], z = ctx.base.zl[0](0, 0);
    const double tau = std::sqrt(model->posterior_variance(c) + h.noise_variance);
    Matrix nx(7, 2);
    nx << x, c.transpose();
    Vector ny(7);
    ny << y, model->posterior_mean(c) + tau * z0;
    const gp::GaussianProcess retrained(nx, ny, h);
    const double oracle = grid_min(*model, grid, w, z) - grid_min(retrained, grid, w, z);
    worst = std::max(worst, std::abs(v - oracle));
    if (std::abs(v - oracle) <= kToyOracleTol) ++ok;
  }

  int exact = 0;
  for (int s = 0; s < 10; ++s) {
    const int k = s < 5 ? 1 : 4, m = s < 5 ? 1 : 6;
    auto model = toy_model(5200 + s);
    acquisition::AcqContext ctx = toy_context(model, k, m, 5300 + s);
    if (s < 5) {
      const problems::ProblemSpec p = problems::toy_problem();
      ctx.base = qmc::make_base_samples(1, 1, 1, p.unit_w_domain(), qmc::WSource::Subsample, 5300 + s);
      ctx.spec = risk::RiskSpec{p.kind, p.alpha, ctx.base.wset};
    }
    std::mt19937_64 rng(5400 + s);
    ctx.x_tilde = uniform_matrix(rng, 5, 1);
    const Vector c = uniform_vector(rng, 2);
    const double v = acquisition::rho_kg_apx(ctx, c).value;
    const auto fantasies = gp::fantasize(ctx.gp, c, ctx.base.z0);
    Matrix table(6, k);
    for (int j = 0; j < 6; ++j) {
      const Vector xj = j < 5 ? Vector(ctx.x_tilde.row(j).transpose()) : Vector(c.head(1));
      for (int i = 0; i < k; ++i)
        table(j, i) = risk::posterior_risk(fantasies[i], xj, ctx.base.wset, ctx.spec, ctx.base, i + 1).estimate;
    }
    double current = INFINITY, future = 0.0;
    for (int j = 0; j < 5; ++j) {
      double mix = 0.0;
      for (int i = 0; i < k; ++i) mix += table(j, i);
      current = std::min(current, mix / k);
    }
    for (int i = 0; i < k; ++i) future += table.col(i).minCoeff();
    exact += v == current - future / k;
  }
  return {ok == 10 && exact == 10, std::to_string(ok) + "/10 rho-KG within " + fmt("%.0e", kToyOracleTol) +
                                       " of the retrain oracle (worst " + fmt("%.2e", worst) + "); " +
                                       std::to_string(exact) + "/10 rho-KG^apx equal to enumeration"};
}

// ---- 4: nonnegativity ------------------------------------------------------

Outcome nonnegativity() {
  auto model = toy_model(6001);
  acquisition::AcqContext ctx = toy_context(model, 4, 8, 6002);
  ctx.inner.grid = unit_grid(1001);
  acquisition::AcqContext literal = ctx;
  literal.separate_parent = true;
  std::mt19937_64 rng(6003);
  double lo_kg = INFINITY, lo_apx = INFINITY, lo_literal = INFINITY;
  for (int t = 0; t < kNonnegCandidates; ++t) {
    const Vector c = uniform_vector(rng, 2);
    lo_kg = std::min(lo_kg, acquisition::rho_kg(ctx, c, true).value);
    lo_apx = std::min(lo_apx, acquisition::rho_kg_apx(ctx, c).value);
    lo_literal = std::min(lo_literal, acquisition::rho_kg(literal, c, true).value);
  }

  std::mt19937_64 r2(6004);
  const Matrix x = uniform_matrix(r2, 5, 2);
  const Vector y = uniform_vector(r2, 5, -1.0, 1.0);
  auto exact = std::make_shared<const gp::GaussianProcess>(x, y, fixed_hyper(0.4, 1.0, 0.0));
  acquisition::AcqContext dup = toy_context(exact, 4, 6, 6005);
  dup.inner.grid = unit_grid(1001);
  double dup_max = 0.0;
  for (int i = 0; i < 5; ++i) {
    const Vector c = x.row(i).transpose();
    dup_max = std::max({dup_max, std::abs(acquisition::rho_kg(dup, c, true).value),
                        std::abs(acquisition::rho_kg_apx(dup, c).value)});
  }
  const bool pass = lo_kg >= -kNonnegTol && lo_apx >= -kNonnegTol && dup_max <= kNonnegTol;
  return {pass, "min rho-KG " + fmt("%.3e", lo_kg) + ", min rho-KG^apx " + fmt("%.3e", lo_apx) +
                    ", max |value| at duplicates " + fmt("%.1e", dup_max) +
                    " (separate-parent SAA, not checked: min " + fmt("%.3e", lo_literal) + ")"};
}

// ---- 5: two-time-scale -----------------------------------------------------

optimize::OptimizerConfig tts_config(int period) {
  optimize::OptimizerConfig c;
  c.q2 = 30;
  c.q3 = 20;
  c.tts_period = period;
  c.restarts = 3;
  c.raw_samples = 32;
  c.inner_restarts = 2;
  c.inner_raw = 16;
  return c;
}

Outcome two_time_scale() {
  // T = 1 against a nested optimizer that re-solves on every evaluation
  int identical = 0;
  for (int s = 0; s < kTtsTraceSeeds; ++s) {
    auto model = toy_model(7000 + s);
    const acquisition::AcqContext start = toy_context(model, 3, 4, 7100 + s);
    const optimize::OptimizerConfig cfg = tts_config(1);
    acquisition::AcqContext a = start;
    std::mt19937_64 ra(7200 + s);
    const optimize::TtsResult tts = optimize::tts_optimize(a, cfg, ra);

    acquisition::AcqContext nested = start;
    nested.inner.restarts = cfg.inner_restarts;
    nested.inner.raw_samples = cfg.inner_raw;
    nested.inner.max_iterations = cfg.q3;
    std::vector<std::pair<Vector, double>> trace;
    auto acq = [&](const Vector& c, Vector& g) {
      const acquisition::AcqValue v = acquisition::rho_kg(nested, c, true);
      g = v.gradient;
      trace.emplace_back(c, v.value);
      return v.value;
    };
    auto score = [&](const Matrix& pts) { return acquisition::rho_kg_raw_scores(nested, pts); };
    optimize::MultistartOptions mo;
    mo.restarts = cfg.restarts;
    mo.raw_samples = cfg.raw_samples;
    mo.lbfgs = cfg.outer_lbfgs();
    std::mt19937_64 rb(7200 + s);
    const optimize::MultistartResult ref =
        optimize::multistart_maximize(score, acq, Vector::Zero(2), Vector::Ones(2), mo, rb);
    bool same = tts.trace.size() == trace.size() && tts.candidate == ref.x;
    for (std::size_t i = 0; same && i < trace.size(); ++i)
      same = tts.trace[i].first == trace[i].first && tts.trace[i].second == trace[i].second;
    identical += same;
  }

  // T = 10 against T = 1: candidate quality under an exact (grid inner) evaluation
  std::vector<double> shortfall;
  long solves1 = 0, solves10 = 0;
  for (int s = 0; s < kTtsSeeds; ++s) {
    auto model = toy_model(7300 + s);
    const acquisition::AcqContext start = toy_context(model, 4, 8, 7400 + s);
    acquisition::AcqContext c1 = start, c10 = start;
    std::mt19937_64 r1(7500 + s), r10(7500 + s);
    const optimize::TtsResult t1 = optimize::tts_optimize(c1, tts_config(1), r1);
    const optimize::TtsResult t10 = optimize::tts_optimize(c10, tts_config(10), r10);
    solves1 += t1.inner_solves;
    solves10 += t10.inner_solves;
    acquisition::AcqContext judge = start;
    judge.inner.grid = unit_grid(1001);
    const double q1 = acquisition::rho_kg(judge, t1.candidate, true).value;
    const double q10 = acquisition::rho_kg(judge, t10.candidate, true).value;
    shortfall.push_back(q1 > 0.0 ? (q1 - q10) / q1 : (q10 >= q1 ? 0.0 : 1.0));
  }
  const double med = median(shortfall);
  const double reduction = static_cast<double>(solves1) / static_cast<double>(std::max(1L, solves10));
  const bool pass = identical == kTtsTraceSeeds && med <= kTtsQualityTol && reduction >= kTtsReduction;
  return {pass, std::to_string(identical) + "/" + std::to_string(kTtsTraceSeeds) +
                    " traces bit-identical; median quality shortfall T=10 vs T=1 " + fmt("%.2f%%", 100.0 * med) +
                    "; inner solves " + std::to_string(solves1) + " -> " + std::to_string(solves10) + " (x" +
                    fmt("%.1f", reduction) + ")"};
}

// ---- 6: Branin-Williams comparison -----------------------------------------

harness::ExperimentConfig bw_config(harness::Algorithm a, std::uint64_t seed) {
  harness::ExperimentConfig c;
  c.problem = "branin_williams";
  c.risk = risk::RiskKind::VaR;
  c.alpha = 0.7;
  c.noise_std = 10.0;
  c.budget = 240;
  c.algorithm = a;
  c.seed = seed;
  // desk-scale optimizer settings
  c.restarts = 2;
  c.raw_samples = 100;
  c.q2 = 20;
  c.rec_restarts = 2;
  c.rec_raw = 100;
  c.gp_refit_restarts = 0;
  c.gp_refit_every = 3;
  return c;
}

Outcome branin_williams() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<harness::Algorithm> algs = {harness::Algorithm::RhoKgApx, harness::Algorithm::RhoRandom,
                                                harness::Algorithm::Ei, harness::Algorithm::Random};
  std::vector<std::vector<double>> gap(algs.size(), std::vector<double>(kBwSeeds, NAN));
  std::vector<std::pair<std::size_t, int>> jobs;
  for (int s = 0; s < kBwSeeds; ++s)
    for (std::size_t a = 0; a < algs.size(); ++a) jobs.emplace_back(a, s);
  std::mutex mu;
  std::size_t next = 0;
  std::string failure;
  auto worker = [&] {
    for (;;) {
      std::pair<std::size_t, int> job;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next == jobs.size() || !failure.empty()) return;
        job = jobs[next++];
      }
      try {
        harness::Experiment e(bw_config(algs[job.first], static_cast<std::uint64_t>(job.second)));
        e.run();
        const double g = e.recommendations().back().gap.value();
        std::lock_guard<std::mutex> lock(mu);
        gap[job.first][job.second] = g;
        std::cerr << "  seed " << job.second << " " << harness::to_string(algs[job.first]) << ": final gap " << g
                  << " (" << fmt("%.0f", seconds_since(t0)) << " s)\n";
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(mu);
        failure = ex.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (!failure.empty()) return {false, "run failed: " + failure};
  const double secs = seconds_since(t0);

  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  auto compare = [&](std::size_t better, std::size_t worse, bool& ok) {
    std::vector<double> d(kBwSeeds);
    for (int s = 0; s < kBwSeeds; ++s) d[s] = gap[worse][s] - gap[better][s];
    const harness::SignedRankResult r = harness::signed_rank_test_greater(d);
    const bool lower = mean(gap[better]) < mean(gap[worse]);
    ok = ok && lower && r.p_value < kBwLevel;
    return harness::to_string(algs[better]) + " < " + harness::to_string(algs[worse]) + ": p=" +
           fmt("%.4f", r.p_value);
  };
  bool ok = true;
  std::string detail = "mean final gap";
  for (std::size_t a = 0; a < algs.size(); ++a) detail += " " + harness::to_string(algs[a]) + "=" + fmt("%.2f", mean(gap[a]));
  detail += "; " + compare(0, 3, ok) + ", " + compare(0, 2, ok) + ", " + compare(1, 3, ok);
  detail += "; " + fmt("%.0f", secs) + " s on " + std::to_string(threads) + " thread(s)";
  return {ok && secs < kBwRuntimeS, detail};
}

// ---- 7: distribution fidelity ----------------------------------------------

Outcome distribution_fidelity() {
  const double table[3][4] = {{0.0375, 0.0875, 0.0875, 0.0375},
                              {0.0750, 0.1750, 0.1750, 0.0750},
                              {0.0375, 0.0875, 0.0875, 0.0375}};
  const double x2[3] = {0.25, 0.5, 0.75}, x3[4] = {0.2, 0.4, 0.6, 0.8};
  const risk::WSet s = problems::bw_distribution();
  int matched = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      for (int r = 0; r < s.size(); ++r)
        if (s.points(r, 0) == x2[i] && s.points(r, 1) == x3[j] && s.weights[r] == table[i][j]) ++matched;

  std::mt19937_64 rng(8001);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 20;
    const Vector v = uniform_vector(rng, n, -10.0, 10.0);
    Vector w = t % 2 ? Vector(uniform_vector(rng, n, 0.05, 1.0)) : Vector(Vector::Ones(n));
    w /= w.sum();
    worst = std::max(worst, std::abs(risk::empirical_cvar(v, w, 0.0).value - w.dot(v)));
  }
  return {matched == 12 && s.size() == 12 && worst <= kMeanTol,
          std::to_string(matched) + "/12 masses exact; worst |CVaR_0 - mean| " + fmt("%.1e", worst)};
}

// ---- 8: CLI determinism ----------------------------------------------------

std::string masked(const fs::path& p) {
  std::ifstream in(p);
  std::string line, out;
  bool timed = false;
  while (std::getline(in, line)) {
    if (line.rfind("# riskopt", 0) == 0) continue;  // timestamp header
    if (line.find("wall_time_s") != std::string::npos) timed = true;
    if (timed) line = line.substr(0, line.rfind(','));
    out += line + "\n";
  }
  return out;
}

Outcome cli_determinism() {
  const fs::path d = fs::temp_directory_path() / ("riskopt_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(d);
  const std::string cli = RISKOPT_CLI;
  const std::string small = " --set opt.restarts=2 --set opt.raw_samples=32 --set acq.K=3 --set acq.M=4";
  const std::string hist = (d / "h.csv").string();
  // subcommand, arguments writing to {out}
  const std::vector<std::pair<std::string, std::string>> cmds = {
      {"run rho_kg_apx", "run --problem toy --algorithm rho_kg_apx --budget 44 --seed 7" + small +
                             " --history-output " + hist},
      {"run rho_kg", "run --problem toy --algorithm rho_kg --budget 42 --seed 7" + small},
      {"run ei", "run --problem branin_williams --algorithm ei --budget 96 --seed 7"},
      {"run kg_plain", "run --problem toy --algorithm kg_plain --budget 60 --seed 7" + small},
      {"suggest", "suggest --problem toy --algorithm rho_kg_apx" + small + " --history " + hist},
      {"recommend", "recommend --problem toy --algorithm rho_kg_apx --history " + hist},
      {"oracle", "oracle --problem branin_williams --grid 21"},
      {"oracle --optimum", "oracle --problem toy --optimum --grid 201"},
      {"report", "report --smooth " + (d / "res.csv").string()},
      {"plot-data", "plot-data " + (d / "res.csv").string()},
  };
  int same = 0;
  std::string bad;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    std::string outs[2];
    bool ran = true;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = d / ("o" + std::to_string(i) + "_" + std::to_string(k) + ".csv");
      const int rc = std::system((cli + " " + cmds[i].second + " --output " + out.string() + " 2>/dev/null").c_str());
      ran = ran && rc == 0;
      outs[k] = masked(out);
      if (i == 0 && k == 0) fs::copy_file(out, d / "res.csv", fs::copy_options::overwrite_existing);
    }
    if (ran && !outs[0].empty() && outs[0] == outs[1]) {
      ++same;
    } else {
      bad += " " + cmds[i].first;
    }
  }
  fs::remove_all(d);
  return {same == static_cast<int>(cmds.size()),
          std::to_string(same) + "/" + std::to_string(cmds.size()) + " subcommands reproduce their output" +
              (bad.empty() ? "" : " (differ or failed:" + bad + ")")};
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"gradient suite", gradients},
    {"posterior risk and empirical estimators vs oracles", oracle_equivalence},
    {"rho-KG toy oracle and rho-KG^apx enumeration", toy_oracle},
    {"nonnegativity", nonnegativity},
    {"two-time-scale optimization", two_time_scale},
    {"Branin-Williams VaR ordering", branin_williams},
    {"distribution fidelity", distribution_fidelity},
    {"CLI determinism", cli_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riskopt acceptance checks"};
  int which = 0;
  app.add_option("--criterion", which, "criterion number, 0 for all")->check(CLI::Range(0, 8));
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (int c = 1; c <= 8; ++c) {
    if (which != 0 && which != c) continue;
    Outcome o;
    try {
      o = kCriteria[c - 1].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << c << " " << (o.pass ? "PASS" : "FAIL") << "  " << kCriteria[c - 1].name << ": "
              << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
