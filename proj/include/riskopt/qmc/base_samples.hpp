#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/qmc/normal.hpp"
#include "riskopt/qmc/sobol.hpp"
#include "riskopt/risk/empirical.hpp"

namespace riskopt::qmc {

// The environmental support: a finite weighted set or a box with the uniform
// distribution on it.
struct WDomain {
  bool finite = true;
  risk::WSet set;
  Vector lower;
  Vector upper;

  static WDomain finite_set(risk::WSet s) {
    s.validate();
    WDomain d;
    d.finite = true;
    d.lower = s.points.colwise().minCoeff().transpose();
    d.upper = s.points.colwise().maxCoeff().transpose();
    d.set = std::move(s);
    return d;
  }
  static WDomain box(Vector lo, Vector hi) {
    WDomain d;
    d.finite = false;
    d.lower = std::move(lo);
    d.upper = std::move(hi);
    return d;
  }
  int dim() const { return static_cast<int>(lower.size()); }
  int size() const { return finite ? set.size() : -1; }
};

enum class WSource { Full, Subsample };

struct BaseSampleSet {
  Vector z0;               // K fantasy draws
  std::vector<Matrix> zl;  // K+1 slices of M x L draws; slice 0 belongs to the current model
  risk::WSet wset;
  std::uint64_t seed = 0;

  int k() const { return static_cast<int>(z0.size()); }
  int m() const { return zl.empty() ? 0 : static_cast<int>(zl[0].rows()); }
  int l() const { return zl.empty() ? 0 : static_cast<int>(zl[0].cols()); }
};

inline risk::WSet draw_wset(const WDomain& domain, int l, WSource source, std::uint64_t seed) {
  if (l < 1) throw InvalidArgument("wset size must be positive");
  if (domain.finite) {
    const int n = domain.set.size();
    if (l > n) {
      throw InvalidArgument("L=" + std::to_string(l) + " exceeds the " + std::to_string(n) +
                            " points of the finite environment set");
    }
    if (source == WSource::Full) {
      if (l != n) throw InvalidArgument("full environment set requires L = |W|");
      return domain.set;
    }
    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> pick(domain.set.weights.data(),
                                         domain.set.weights.data() + n);
    Matrix pts(l, domain.dim());
    for (int i = 0; i < l; ++i) pts.row(i) = domain.set.points.row(pick(rng));
    return risk::WSet::uniform(std::move(pts));
  }
  if (source == WSource::Full) throw InvalidArgument("a continuous environment must be subsampled");
  Matrix u = sobol_points(domain.dim(), l, seed);
  for (int i = 0; i < l; ++i) {
    u.row(i) = (domain.lower.array() + u.row(i).transpose().array() * (domain.upper - domain.lower).array())
                   .transpose();
  }
  return risk::WSet::uniform(std::move(u));
}

/// Fixed base samples defining one SAA instance. With common random numbers
/// (crn) every slice of zl is the same M x L block.
inline BaseSampleSet make_base_samples(int k, int m, int l, const WDomain& domain, WSource source,
                                       std::uint64_t seed, bool crn = true) {
  if (k < 1 || m < 1 || l < 1) throw InvalidArgument("make_base_samples: K, M, L must be positive");
  BaseSampleSet b;
  b.seed = seed;
  b.z0 = normal_transform(sobol_points(1, k, child_seed(seed, 0))).col(0);
  b.wset = draw_wset(domain, l, source, child_seed(seed, 2));
  if (crn) {
    const Matrix z = normal_transform(sobol_points(l, m, child_seed(seed, 1)));
    b.zl.assign(k + 1, z);
  } else {
    for (int i = 0; i <= k; ++i)
      b.zl.push_back(normal_transform(sobol_points(l, m, child_seed(child_seed(seed, 1), i))));
  }
  return b;
}

}  // namespace riskopt::qmc
