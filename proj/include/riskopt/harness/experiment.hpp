#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "riskopt/acquisition/baselines.hpp"
#include "riskopt/acquisition/rho_kg.hpp"
#include "riskopt/gp/fit.hpp"
#include "riskopt/harness/config.hpp"
#include "riskopt/optimize/multistart.hpp"
#include "riskopt/optimize/tts.hpp"
#include "riskopt/problems/oracle.hpp"
#include "riskopt/qmc/sobol.hpp"
#include "riskopt/risk/posterior_risk.hpp"

namespace riskopt::harness {

// Child-seed streams. Per-iteration streams add the iteration number.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kRecommendBase = 3;
inline constexpr std::uint64_t kBase = 100000;
inline constexpr std::uint64_t kInner = 200000;
inline constexpr std::uint64_t kEvalSet = 300000;
inline constexpr std::uint64_t kAcq = 400000;
inline constexpr std::uint64_t kRecommend = 500000;
inline constexpr std::uint64_t kFit = 600000;
}  // namespace stream

/// One F(x, w) evaluation in raw coordinates.
struct Evaluation {
  Vector x, w;
  double y = 0.0;
  int iteration = 0;
};

/// One modeled observation. Joint methods: a single evaluation, w set.
/// Baselines: a rho estimate at x from `cost` evaluations, w empty.
struct Observation {
  Vector x, w;
  double y = 0.0;
  int iteration = 0;
  int cost = 1;
};

struct Recommendation {
  int iteration = 0;
  long evals_used = 0;
  Vector x;  // raw decision
  double posterior_risk = 0.0;
  std::optional<double> true_risk;
  std::optional<double> gap;
  double wall_time_s = 0.0;
};

class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)), problem_(make_problem(cfg_)) {
    cfg_.validate();
    joint_ = is_joint(cfg_.algorithm);
    if (cfg_.algorithm == Algorithm::RhoKgApx || cfg_.algorithm == Algorithm::RhoKg) {
      if (problem_.l_inner < 1) throw ConfigError("acq.L must be positive");
    }
    n_init_ = cfg_.n_init.value_or(2 * problem_.dx() + 2);
    if (init_cost() > cfg_.budget) {
      throw ConfigError("budget " + std::to_string(cfg_.budget) + " is smaller than the initialization cost " +
                        std::to_string(init_cost()));
    }
    noise_rng_.seed(qmc::child_seed(cfg_.seed, stream::kNoise));
    rec_base_ = qmc::make_base_samples(1, cfg_.rec_paths, problem_.l_inner, problem_.unit_w_domain(),
                                       problem_.inner_source(), qmc::child_seed(cfg_.seed, stream::kRecommendBase));
    start_ = std::chrono::steady_clock::now();
  }

  const ExperimentConfig& config() const { return cfg_; }
  const problems::ProblemSpec& problem() const { return problem_; }
  bool joint() const { return joint_; }
  int iteration() const { return iteration_; }
  long evals_used() const { return evals_used_; }
  long remaining() const { return cfg_.budget - evals_used_; }
  long init_cost() const { return static_cast<long>(n_init_) * problem_.l_eval; }
  long step_cost() const { return joint_ ? 1 : problem_.l_eval; }
  bool can_step() const { return initialized_ && remaining() >= step_cost(); }
  const std::vector<Evaluation>& evaluations() const { return evals_; }
  const std::vector<Observation>& history() const { return history_; }
  const std::vector<Recommendation>& recommendations() const { return recs_; }
  const std::vector<std::string>& log() const { return log_; }
  std::shared_ptr<const gp::GaussianProcess> model() const { return model_; }

  /// Random initial design. Runs sharing a seed share these draws.
  void initialize() {
    if (initialized_) throw InvalidArgument("experiment already initialized");
    std::mt19937_64 rng(qmc::child_seed(cfg_.seed, stream::kInit));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto random_x = [&] {
      Vector x(problem_.dx());
      for (int k = 0; k < x.size(); ++k)
        x[k] = problem_.x_lower[k] + u(rng) * (problem_.x_upper[k] - problem_.x_lower[k]);
      return x;
    };
    if (joint_) {
      for (long i = 0; i < init_cost(); ++i) {
        const Vector x = random_x();
        observe_joint(x, random_w(rng), 0);
      }
    } else {
      for (int i = 0; i < n_init_; ++i) {
        const Vector x = random_x();
        observe_rho(x, qmc::child_seed(qmc::child_seed(cfg_.seed, stream::kEvalSet), static_cast<std::uint64_t>(i)), 0);
      }
    }
    initialized_ = true;
    refit();
    record_recommendation();
  }

  /// Seeds the model with existing observations instead of a random design.
  void load(const std::vector<Observation>& obs) {
    if (initialized_) throw InvalidArgument("experiment already initialized");
    if (obs.size() < 2) throw InvalidArgument("history needs at least two observations");
    for (const Observation& o : obs) {
      if (o.x.size() != problem_.dx()) throw InvalidArgument("history row has the wrong decision dimension");
      if (joint_ && o.w.size() != problem_.dw()) throw InvalidArgument("history row has the wrong environment dimension");
      if (!joint_ && o.w.size() != 0) throw InvalidArgument("history rows for this method carry no environment values");
    }
    for (const Observation& o : obs) {
      history_.push_back(o);
      evals_used_ += o.cost;
      iteration_ = std::max(iteration_, o.iteration);
    }
    initialized_ = true;
    refit();
  }

  /// Next point to evaluate, raw coordinates: (x, w) for joint methods, x otherwise.
  Vector propose() {
    if (!initialized_) throw InvalidArgument("experiment not initialized");
    const int it = iteration_ + 1;
    std::mt19937_64 rng(qmc::child_seed(cfg_.seed, stream::kAcq + static_cast<std::uint64_t>(it)));
    Vector unit;
    try {
      unit = joint_ ? propose_joint(it, rng) : propose_baseline(it, rng);
    } catch (const std::exception& e) {
      log_.push_back("iteration " + std::to_string(it) + ": acquisition optimization failed (" + e.what() +
                     "), using a random point");
      unit = random_unit(rng);
    }
    return joint_ ? problem_.joint_transform().from_unit(unit) : problem_.x_transform().from_unit(unit);
  }

  /// One BO iteration: propose, evaluate, refit, recommend.
  void step() {
    if (!initialized_) throw InvalidArgument("experiment not initialized");
    if (remaining() < step_cost()) {
      throw BudgetExhausted("budget exhausted: " + std::to_string(remaining()) + " evaluations left, step needs " +
                                std::to_string(step_cost()),
                            remaining());
    }
    const Vector p = propose();
    ++iteration_;
    if (joint_) {
      observe_joint(p.head(problem_.dx()), p.tail(problem_.dw()), iteration_);
    } else {
      observe_rho(p, qmc::child_seed(cfg_.seed, stream::kEvalSet + static_cast<std::uint64_t>(iteration_)),
                  iteration_);
    }
    refit();
    record_recommendation();
  }

  void run() {
    if (!initialized_) initialize();
    while (can_step()) step();
  }

  /// argmin of the posterior risk (joint) or posterior mean (baselines) over X.
  Recommendation recommend() const {
    if (!model_) throw InvalidArgument("no fitted model");
    std::mt19937_64 rng(qmc::child_seed(cfg_.seed, stream::kRecommend + static_cast<std::uint64_t>(iteration_)));
    const int dx = problem_.dx();
    optimize::MultistartOptions mo;
    mo.restarts = cfg_.rec_restarts.value_or(5 * dx);
    mo.raw_samples = cfg_.rec_raw.value_or(100 * dx);
    mo.lbfgs.max_iterations = cfg_.q2;
    std::vector<Vector> extra;
    if (!recs_.empty()) extra.push_back(problem_.x_transform().to_unit(recs_.back().x));
    const risk::RiskSpec spec{problem_.kind, problem_.alpha, rec_base_.wset};
    optimize::BatchScoreFn score;
    optimize::AcqFn acq;
    if (joint_) {
      score = [&](const Matrix& pts) {
        Vector s(pts.rows());
        for (Eigen::Index r = 0; r < pts.rows(); ++r)
          s[r] = -risk::posterior_risk(*model_, Vector(pts.row(r).transpose()), rec_base_.wset, spec, rec_base_).estimate;
        return s;
      };
      acq = [&](const Vector& x, Vector& g) {
        double v = 0.0;
        g = -risk::posterior_risk_gradient(*model_, x, rec_base_.wset, spec, rec_base_, risk::Wrt::InnerX, 0, &v);
        return -v;
      };
    } else {
      score = [&](const Matrix& pts) { return Vector(-model_->posterior_mean(pts)); };
      acq = [&](const Vector& x, Vector& g) {
        const gp::PosteriorGradients pg = gp::posterior_with_gradients(*model_, Matrix(x.transpose()), dx);
        g = -pg.d_mean.row(0).transpose();
        return -pg.mean[0];
      };
    }
    const optimize::MultistartResult ms =
        optimize::multistart_maximize(score, acq, Vector::Zero(dx), Vector::Ones(dx), mo, rng, {}, extra);
    Recommendation r;
    r.iteration = iteration_;
    r.evals_used = evals_used_;
    r.x = problem_.x_transform().from_unit(ms.x);
    r.posterior_risk = model_->outcome_transform().unstandardize(-ms.value);
    if (problem_.has_oracle) {
      r.true_risk = problems::brute_force_risk(problem_, r.x);
      if (problem_.true_optimum) r.gap = *r.true_risk - *problem_.true_optimum;
    }
    return r;
  }

 private:
  Vector random_w(std::mt19937_64& rng) const {
    const qmc::WDomain& w = problem_.w;
    if (w.finite) {
      std::discrete_distribution<int> pick(w.set.weights.data(), w.set.weights.data() + w.set.size());
      return w.set.points.row(pick(rng)).transpose();
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector out(w.dim());
    for (int k = 0; k < out.size(); ++k) out[k] = w.lower[k] + u(rng) * (w.upper[k] - w.lower[k]);
    return out;
  }

  Vector random_unit(std::mt19937_64& rng) const {
    const Vector lo = Vector::Zero(problem_.dx()), hi = Vector::Ones(problem_.dx());
    if (!joint_) return acquisition::random_strategy(acquisition::RandomKind::PlainRandom, lo, hi, nullptr, rng);
    const qmc::WDomain w = problem_.unit_w_domain();
    return acquisition::random_strategy(acquisition::RandomKind::RhoRandom, lo, hi, &w, rng);
  }

  void observe_joint(const Vector& x, const Vector& w, int it) {
    const double y = problem_.observe(x, w, noise_rng_);
    evals_.push_back({x, w, y, it});
    history_.push_back({x, w, y, it, 1});
    evals_used_ += 1;
  }

  void observe_rho(const Vector& x, std::uint64_t wseed, int it) {
    const risk::WSet ws = qmc::draw_wset(problem_.w, problem_.l_eval, problem_.eval_source(), wseed);
    Vector ys(ws.size());
    for (int l = 0; l < ws.size(); ++l) {
      const Vector w = ws.points.row(l).transpose();
      ys[l] = problem_.observe(x, w, noise_rng_);
      evals_.push_back({x, w, ys[l], it});
    }
    const double rho = risk::empirical_risk(ys, ws.weights, problem_.kind, problem_.alpha).value;
    history_.push_back({x, Vector(), rho, it, ws.size()});
    evals_used_ += ws.size();
  }

  void refit() {
    const int n = static_cast<int>(history_.size());
    const int d = joint_ ? problem_.dx() + problem_.dw() : problem_.dx();
    const gp::InputTransform tr = joint_ ? problem_.joint_transform() : problem_.x_transform();
    Matrix x(n, d);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      Vector raw(d);
      if (joint_) {
        raw << history_[i].x, history_[i].w;
      } else {
        raw = history_[i].x;
      }
      x.row(i) = tr.to_unit(raw).transpose();
      y[i] = history_[i].y;
    }
    const bool full = !last_hyper_ || fits_ % cfg_.gp_refit_every == 0;
    ++fits_;
    if (full) {
      gp::FitOptions fo;
      fo.restarts = last_hyper_ ? cfg_.gp_refit_restarts : std::max(1, cfg_.gp_restarts);
      fo.max_iterations = cfg_.gp_iterations;
      fo.seed = qmc::child_seed(cfg_.seed, stream::kFit + static_cast<std::uint64_t>(iteration_));
      fo.warm_start = last_hyper_;
      model_ = std::make_shared<const gp::GaussianProcess>(gp::fit_map(x, y, fo, tr));
      last_hyper_ = model_->hyper();
    } else {
      const gp::OutcomeTransform out = gp::OutcomeTransform::fit(y);
      model_ = std::make_shared<const gp::GaussianProcess>(x, out.standardize(y), *last_hyper_, tr, out);
    }
  }

  void record_recommendation() {
    Recommendation r = recommend();
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    recs_.push_back(std::move(r));
  }

  // Distinct evaluated decisions in unit coordinates.
  Matrix evaluated_decisions() const {
    std::vector<Vector> xs;
    const gp::InputTransform tr = problem_.x_transform();
    for (const Observation& o : history_) {
      const Vector u = tr.to_unit(o.x);
      bool seen = false;
      for (const Vector& v : xs) seen = seen || v == u;
      if (!seen) xs.push_back(u);
    }
    Matrix m(static_cast<Eigen::Index>(xs.size()), problem_.dx());
    for (std::size_t i = 0; i < xs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = xs[i].transpose();
    return m;
  }

  Vector propose_joint(int it, std::mt19937_64& rng) {
    const int dx = problem_.dx(), dw = problem_.dw();
    const qmc::WDomain unit_w = problem_.unit_w_domain();
    if (cfg_.algorithm == Algorithm::RhoRandom) {
      return acquisition::random_strategy(acquisition::RandomKind::RhoRandom, Vector::Zero(dx), Vector::Ones(dx),
                                          &unit_w, rng);
    }
    acquisition::AcqContext ctx;
    ctx.gp = model_;
    ctx.dx = dx;
    ctx.base = qmc::make_base_samples(cfg_.fantasies, cfg_.paths, problem_.l_inner, unit_w, problem_.inner_source(),
                                      qmc::child_seed(cfg_.seed, stream::kBase + static_cast<std::uint64_t>(it)));
    ctx.spec = risk::RiskSpec{problem_.kind, problem_.alpha, ctx.base.wset};
    ctx.inner.seed = qmc::child_seed(cfg_.seed, stream::kInner + static_cast<std::uint64_t>(it));
    ctx.x_tilde = evaluated_decisions();
    ctx.score_fantasies = cfg_.score_fantasies;
    const optimize::OptimizerConfig oc = cfg_.optimizer(dx, dw);
    Vector cand;
    std::function<double(const Vector&)> value;
    if (cfg_.algorithm == Algorithm::RhoKg) {
      cand = optimize::tts_optimize(ctx, oc, rng).candidate;
      value = [&](const Vector& c) { return acquisition::rho_kg(ctx, c, false).value; };
    } else {
      optimize::MultistartOptions mo;
      mo.restarts = oc.restarts;
      mo.raw_samples = oc.raw_samples;
      mo.eta = oc.eta;
      mo.lbfgs = oc.outer_lbfgs();
      auto score = [&](const Matrix& pts) { return acquisition::rho_kg_apx_raw_scores(ctx, pts); };
      auto acq = [&](const Vector& c, Vector& g) {
        const acquisition::AcqValue v = acquisition::rho_kg_apx(ctx, c);
        g = v.gradient;
        return v.value;
      };
      cand = optimize::multistart_maximize(score, acq, Vector::Zero(dx + dw), Vector::Ones(dx + dw), mo, rng).x;
      value = [&](const Vector& c) { return acquisition::rho_kg_apx(ctx, c).value; };
    }
    if (unit_w.finite) {
      // the environment can only be set to a support point: keep x, take the
      // best w of the set
      double best = -INFINITY;
      Vector snapped = cand;
      for (int j = 0; j < unit_w.set.size(); ++j) {
        Vector c = cand;
        c.tail(dw) = unit_w.set.points.row(j).transpose();
        const double v = value(c);
        if (v > best) {
          best = v;
          snapped = c;
        }
      }
      cand = snapped;
    }
    return cand;
  }

  Vector propose_baseline(int it, std::mt19937_64& rng) {
    const int dx = problem_.dx();
    const Vector lo = Vector::Zero(dx), hi = Vector::Ones(dx);
    if (cfg_.algorithm == Algorithm::Random)
      return acquisition::random_strategy(acquisition::RandomKind::PlainRandom, lo, hi, nullptr, rng);
    const optimize::OptimizerConfig oc = cfg_.optimizer(dx, 0);
    if (cfg_.algorithm == Algorithm::KgPlain) {
      acquisition::AcqContext ctx;
      ctx.gp = model_;
      ctx.dx = dx;
      ctx.base = acquisition::plain_base_samples(cfg_.fantasies,
                                                 qmc::child_seed(cfg_.seed, stream::kBase + static_cast<std::uint64_t>(it)));
      ctx.spec = risk::RiskSpec{risk::RiskKind::Mean, 0.0, ctx.base.wset};
      ctx.inner.seed = qmc::child_seed(cfg_.seed, stream::kInner + static_cast<std::uint64_t>(it));
      ctx.x_tilde = model_->inputs();
      ctx.score_fantasies = cfg_.score_fantasies;
      return optimize::tts_optimize(ctx, oc, rng).candidate;
    }
    optimize::MultistartOptions mo;
    mo.restarts = oc.restarts;
    mo.raw_samples = oc.raw_samples;
    mo.eta = oc.eta;
    mo.lbfgs = oc.outer_lbfgs();
    optimize::AcqFn acq;
    if (cfg_.algorithm == Algorithm::Ei) {
      acq = [&](const Vector& x, Vector& g) { return acquisition::ei_with_gradient(*model_, x, &g); };
    } else {
      // minimization: maximize -(mu - sqrt(beta var)) = ucb_beta - 2 ucb_0
      acq = [&](const Vector& x, Vector& g) {
        Vector g0;
        const double v = acquisition::ucb_with_gradient(*model_, x, cfg_.ucb_beta, &g);
        const double v0 = acquisition::ucb_with_gradient(*model_, x, 0.0, &g0);
        g -= 2.0 * g0;
        return v - 2.0 * v0;
      };
    }
    auto score = [&](const Matrix& pts) {
      Vector s(pts.rows()), g;
      for (Eigen::Index r = 0; r < pts.rows(); ++r) s[r] = acq(pts.row(r).transpose(), g);
      return s;
    };
    return optimize::multistart_maximize(score, acq, lo, hi, mo, rng).x;
  }

  ExperimentConfig cfg_;
  problems::ProblemSpec problem_;
  bool joint_ = true;
  bool initialized_ = false;
  int n_init_ = 0;
  int iteration_ = 0;
  long evals_used_ = 0;
  int fits_ = 0;
  std::mt19937_64 noise_rng_;
  qmc::BaseSampleSet rec_base_;
  std::vector<Evaluation> evals_;
  std::vector<Observation> history_;
  std::vector<Recommendation> recs_;
  std::vector<std::string> log_;
  std::shared_ptr<const gp::GaussianProcess> model_;
  std::optional<gp::Hyperparameters> last_hyper_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace riskopt::harness
