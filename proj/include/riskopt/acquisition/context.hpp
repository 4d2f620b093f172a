#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/gp/fantasy.hpp"
#include "riskopt/gp/gaussian_process.hpp"
#include "riskopt/qmc/base_samples.hpp"
#include "riskopt/risk/posterior_risk.hpp"

namespace riskopt::acquisition {

struct InnerOptions {
  int restarts = 5;
  int raw_samples = 50;
  int max_iterations = 50;  // Q3
  std::uint64_t seed = 0;
  // When set, inner problems are solved by enumeration over these rows.
  std::optional<Matrix> grid;
};

struct AcqValue {
  double value = 0.0;
  Vector gradient;
  // Inner objective value per problem: index 0 is the current-model term,
  // 1..K the fantasies.
  Vector inner_values;
};

// State shared by acquisition evaluations within one BO iteration.
// Coordinates are the model's unit cube: the first dx inputs are the decision
// x, the remaining ones the environment w.
struct AcqContext {
  std::shared_ptr<const gp::GaussianProcess> gp;
  risk::RiskSpec spec;
  qmc::BaseSampleSet base;
  int dx = 0;
  InnerOptions inner;

  // Literal SAA (separate current-model term on slice 0). The default uses
  // the fantasy mixture (1/K) sum_i R_i as the current-model objective.
  bool separate_parent = false;

  // Evaluated decision points (rows) for the approximate variant.
  Matrix x_tilde;
  // Fantasies used when scoring raw samples.
  int score_fantasies = 4;

  // Cached inner solutions x_*^{0..K} and bookkeeping.
  std::vector<Vector> inner_solutions;
  int inner_stale_counter = 0;
  long inner_solves = 0;

  int dim() const { return gp->dim(); }
  int dw() const { return dim() - dx; }
  int fantasies() const { return base.k(); }

  void validate() const {
    if (!gp) throw InvalidArgument("acquisition context: missing model");
    if (dx < 1 || dx > gp->dim()) throw InvalidArgument("acquisition context: bad decision dimension");
    if (base.wset.dim() != dw()) throw InvalidArgument("acquisition context: environment dimension mismatch");
    if (base.l() != base.wset.size()) throw InvalidArgument("acquisition context: base samples and wset disagree");
    if (x_tilde.size() > 0 && x_tilde.cols() != dx) throw InvalidArgument("acquisition context: x_tilde width");
    spec.validate();
  }

  // Parent-model caches for the rows of x_tilde, built on first use.
  const std::vector<gp::QueryCache>& x_tilde_blocks() {
    if (x_tilde_cache_.size() != static_cast<std::size_t>(x_tilde.rows())) {
      x_tilde_cache_.clear();
      for (Eigen::Index i = 0; i < x_tilde.rows(); ++i)
        x_tilde_cache_.push_back(gp->query(risk::risk_query(x_tilde.row(i).transpose(), base.wset)));
    }
    return x_tilde_cache_;
  }

  void invalidate_caches() { x_tilde_cache_.clear(); }

 private:
  std::vector<gp::QueryCache> x_tilde_cache_;
};

}  // namespace riskopt::acquisition
