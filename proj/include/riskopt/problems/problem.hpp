#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "riskopt/errors.hpp"
#include "riskopt/gp/transforms.hpp"
#include "riskopt/linalg.hpp"
#include "riskopt/qmc/base_samples.hpp"
#include "riskopt/risk/empirical.hpp"

namespace riskopt::problems {

// F(x, w) in raw coordinates, noise free.
using Objective = std::function<double(const Vector& x, const Vector& w)>;

struct ProblemSpec {
  std::string name;
  Vector x_lower, x_upper;
  qmc::WDomain w;  // raw environment domain
  double noise_std = 0.0;
  risk::RiskKind kind = risk::RiskKind::VaR;
  double alpha = 0.7;
  int l_inner = 0;  // |W~| for the joint-model acquisitions
  int l_eval = 0;   // |W~| used by the baselines to estimate rho
  std::optional<double> true_optimum;
  Objective objective;
  // Replaces objective + Gaussian noise for observations when set (external
  // simulators own their noise and take a seed).
  std::function<double(const Vector& x, const Vector& w, std::uint64_t seed)> sampler;
  bool has_oracle = true;  // noise-free objective usable as ground truth

  int dx() const { return static_cast<int>(x_lower.size()); }
  int dw() const { return w.dim(); }

  void validate() const {
    if (x_lower.size() == 0 || x_lower.size() != x_upper.size())
      throw InvalidArgument("problem " + name + ": bad decision bounds");
    if ((x_lower.array() >= x_upper.array()).any()) throw InvalidArgument("problem " + name + ": empty decision box");
    if (w.dim() < 1) throw InvalidArgument("problem " + name + ": no environment variables");
    if (w.finite) {
      w.set.validate();
    } else if ((w.lower.array() >= w.upper.array()).any()) {
      throw InvalidArgument("problem " + name + ": empty environment box");
    }
    if (!(noise_std >= 0.0)) throw InvalidArgument("problem " + name + ": negative noise");
    if (l_inner < 1 || l_eval < 1) throw InvalidArgument("problem " + name + ": W~ sizes must be positive");
    if (!objective && !sampler) throw InvalidArgument("problem " + name + ": missing objective");
  }

  // Environment set sources for the two uses of W~.
  qmc::WSource inner_source() const {
    return w.finite && l_inner == w.size() ? qmc::WSource::Full : qmc::WSource::Subsample;
  }
  qmc::WSource eval_source() const {
    return w.finite && l_eval == w.size() ? qmc::WSource::Full : qmc::WSource::Subsample;
  }

  // Raw (x, w) box for the joint model; a finite set uses its bounding box.
  gp::InputTransform joint_transform() const {
    gp::InputTransform t;
    t.lower.resize(dx() + dw());
    t.upper.resize(dx() + dw());
    t.lower << x_lower, w_lower();
    t.upper << x_upper, w_upper();
    return t;
  }

  gp::InputTransform x_transform() const { return gp::InputTransform{x_lower, x_upper}; }

  Vector w_lower() const { return w.finite ? Vector(w.set.points.colwise().minCoeff().transpose()) : w.lower; }
  Vector w_upper() const {
    if (!w.finite) return w.upper;
    Vector hi = w.set.points.colwise().maxCoeff().transpose();
    // a degenerate coordinate still needs a nonempty box
    for (Eigen::Index k = 0; k < hi.size(); ++k)
      if (hi[k] <= w_lower()[k]) hi[k] = w_lower()[k] + 1.0;
    return hi;
  }

  // Environment domain in the joint model's unit coordinates.
  qmc::WDomain unit_w_domain() const {
    if (!w.finite) return qmc::WDomain::box(Vector::Zero(dw()), Vector::Ones(dw()));
    const Vector lo = w_lower(), hi = w_upper();
    risk::WSet s = w.set;
    for (Eigen::Index i = 0; i < s.points.rows(); ++i)
      s.points.row(i) = ((s.points.row(i).transpose() - lo).array() / (hi - lo).array()).matrix().transpose();
    return qmc::WDomain::finite_set(std::move(s));
  }

  double evaluate(const Vector& x, const Vector& w_point) const {
    if (!objective) throw InvalidArgument("problem " + name + " has no noise-free objective");
    return objective(x, w_point);
  }

  double observe(const Vector& x, const Vector& w_point, std::mt19937_64& rng) const {
    if (sampler) return sampler(x, w_point, rng());
    const double y = objective(x, w_point);
    if (noise_std == 0.0) return y;
    return y + noise_std * std::normal_distribution<double>(0.0, 1.0)(rng);
  }
};

}  // namespace riskopt::problems
