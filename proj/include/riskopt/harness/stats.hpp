#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "riskopt/errors.hpp"

namespace riskopt::harness {

struct SignedRankResult {
  int n = 0;            // nonzero differences
  double statistic = 0.0;  // sum of ranks of the positive differences
  double p_value = 1.0;    // P(W+ >= statistic) under the null
};

/// Exact one-sided Wilcoxon signed-rank test of "differences tend to be
/// positive". Zero differences are dropped; tied magnitudes get average ranks
/// and the null distribution is enumerated over the realized ranks.
inline SignedRankResult signed_rank_test_greater(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double v : diffs) {
    if (!std::isfinite(v)) throw InvalidArgument("signed-rank test: non-finite difference");
    if (v != 0.0) d.push_back(v);
  }
  SignedRankResult r;
  r.n = static_cast<int>(d.size());
  if (r.n == 0) return r;
  std::vector<int> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(d[a]) < std::abs(d[b]); });
  // doubled ranks keep average ranks integral
  std::vector<int> rank2(d.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && std::abs(d[idx[j + 1]]) == std::abs(d[idx[i]])) ++j;
    const int avg2 = static_cast<int>(i + j + 2);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank2[idx[k]] = avg2;
    i = j + 1;
  }
  int stat2 = 0, total2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total2 += rank2[i];
    if (d[i] > 0.0) stat2 += rank2[i];
  }
  // count[s] = number of sign patterns with doubled positive-rank sum s
  std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
  count[0] = 1.0;
  int reach = 0;
  for (int rk : rank2) {
    for (int s = reach; s >= 0; --s)
      if (count[s] != 0.0) count[s + rk] += count[s];
    reach += rk;
  }
  double tail = 0.0;
  for (int s = stat2; s <= total2; ++s) tail += count[s];
  r.statistic = stat2 / 2.0;
  r.p_value = tail / std::ldexp(1.0, r.n);
  return r;
}

}  // namespace riskopt::harness
