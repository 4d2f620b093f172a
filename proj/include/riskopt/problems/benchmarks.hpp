#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/problems/problem.hpp"

namespace riskopt::problems {

namespace detail {

inline void require_box(const Vector& v, double lo, double hi, const char* what) {
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (!(v[k] >= lo && v[k] <= hi))
      throw InvalidArgument(std::string(what) + ": coordinate " + std::to_string(k) + " outside [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace detail

inline double branin(double u, double v) {
  constexpr double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi, t = 1.0 / (8.0 * pi);
  const double a = v - b * u * u + c * u - 6.0;
  return a * a + 10.0 * (1.0 - t) * std::cos(u) + 10.0;
}

/// Product of two Branin functions on [0,1]^4.
inline double branin_williams(const Vector& x) {
  if (x.size() != 4) throw InvalidArgument("branin_williams: expected 4 coordinates");
  detail::require_box(x, 0.0, 1.0, "branin_williams");
  return branin(15.0 * x[0] - 5.0, 15.0 * x[1]) * branin(15.0 * x[2] - 5.0, 15.0 * x[3]);
}

inline double f6(const Vector& xc, const Vector& xe) {
  if (xc.size() != 4 || xe.size() != 3) throw InvalidArgument("f6: expected 4 decision and 3 environment coordinates");
  detail::require_box(xc, -5.0, 5.0, "f6 decision");
  detail::require_box(xe, -2.0, 2.0, "f6 environment");
  const double c1 = xc[0], c2 = xc[1], c3 = xc[2], c4 = xc[3];
  return xe[0] * (c1 * c1 - c2 + c3 - c4 + 2.0) + xe[1] * (-c1 + 2.0 * c2 * c2 - c3 * c3 + 2.0 * c4 + 1.0) +
         xe[2] * (2.0 * c1 - c2 + 2.0 * c3 - c4 * c4 + 5.0) + 5.0 * c1 * c1 + 4.0 * c2 * c2 + 3.0 * c3 * c3 +
         2.0 * c4 * c4 - (xe[0] * xe[0] + xe[1] * xe[1]);
}

/// The 12-point distribution of (x2, x3).
inline risk::WSet bw_distribution() {
  static const double x2[3] = {0.25, 0.5, 0.75};
  static const double x3[4] = {0.2, 0.4, 0.6, 0.8};
  static const double mass[3][4] = {{0.0375, 0.0875, 0.0875, 0.0375},
                                    {0.0750, 0.1750, 0.1750, 0.0750},
                                    {0.0375, 0.0875, 0.0875, 0.0375}};
  risk::WSet s;
  s.points.resize(12, 2);
  s.weights.resize(12);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      s.points.row(4 * i + j) << x2[i], x3[j];
      s.weights[4 * i + j] = mass[i][j];
    }
  return s;
}

// Smooth 2-d function on [0,1]^2 with a w-dependent spread that grows in x.
inline double toy_function(double x, double w) {
  return 4.0 * (x - 0.3) * (x - 0.3) + (0.4 + 1.6 * x) * std::sin(2.0 * std::numbers::pi * w) * w +
         0.3 * std::cos(5.0 * x);
}

inline ProblemSpec branin_williams_problem(risk::RiskKind kind = risk::RiskKind::VaR, double alpha = 0.7) {
  ProblemSpec p;
  p.name = kind == risk::RiskKind::CVaR ? "branin_williams_cvar" : "branin_williams";
  p.x_lower = Vector::Zero(2);
  p.x_upper = Vector::Ones(2);
  p.w = qmc::WDomain::finite_set(bw_distribution());
  p.noise_std = 10.0;
  p.kind = kind;
  p.alpha = alpha;
  p.l_inner = 12;
  p.l_eval = 12;
  // decision (x1, x4), environment (x2, x3)
  p.objective = [](const Vector& x, const Vector& w) {
    Vector z(4);
    z << x[0], w[0], w[1], x[1];
    return branin_williams(z);
  };
  return p;
}

inline ProblemSpec f6_problem(risk::RiskKind kind = risk::RiskKind::CVaR, double alpha = 0.75) {
  ProblemSpec p;
  p.name = "f6";
  p.x_lower = Vector::Constant(4, -5.0);
  p.x_upper = Vector::Constant(4, 5.0);
  p.w = qmc::WDomain::box(Vector::Constant(3, -2.0), Vector::Constant(3, 2.0));
  p.noise_std = 1.0;
  p.kind = kind;
  p.alpha = alpha;
  p.l_inner = 40;
  p.l_eval = 8;
  p.objective = [](const Vector& x, const Vector& w) { return f6(x, w); };
  return p;
}

inline ProblemSpec toy_problem(risk::RiskKind kind = risk::RiskKind::CVaR, double alpha = 0.7) {
  ProblemSpec p;
  p.name = "toy";
  p.x_lower = Vector::Zero(1);
  p.x_upper = Vector::Ones(1);
  Matrix pts(10, 1);
  for (int i = 0; i < 10; ++i) pts(i, 0) = i / 9.0;
  p.w = qmc::WDomain::finite_set(risk::WSet::uniform(std::move(pts)));
  p.noise_std = 0.0;
  p.kind = kind;
  p.alpha = alpha;
  p.l_inner = 10;
  p.l_eval = 10;
  p.objective = [](const Vector& x, const Vector& w) { return toy_function(x[0], w[0]); };
  return p;
}

inline std::vector<std::string> problem_names() { return {"branin_williams", "branin_williams_cvar", "f6", "toy"}; }

/// Built-in problem by name; kind/alpha default to the problem's own setting.
inline ProblemSpec make_problem(const std::string& name) {
  if (name == "branin_williams") return branin_williams_problem();
  if (name == "branin_williams_cvar") return branin_williams_problem(risk::RiskKind::CVaR, 0.7);
  if (name == "f6") return f6_problem();
  if (name == "toy") return toy_problem();
  throw InvalidArgument("unknown problem '" + name + "'");
}

}  // namespace riskopt::problems
