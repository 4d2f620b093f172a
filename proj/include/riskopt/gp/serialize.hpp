#pragma once

#include <charconv>
#include <string>
#include <system_error>

#include <json.hpp>

#include "riskopt/errors.hpp"
#include "riskopt/gp/gaussian_process.hpp"

namespace riskopt::gp {

inline constexpr int kModelFormatVersion = 1;

// Hex-float text, exact for every finite double.
inline std::string hex_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, r.ptr);
}

inline double parse_hex_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  bool neg = false;
  if (first != last && *first == '-') {
    neg = true;
    ++first;
  }
  const auto r = std::from_chars(first, last, v, std::chars_format::hex);
  if (r.ec != std::errc() || r.ptr != last) throw ParseError("bad hex float '" + s + "'");
  return neg ? -v : v;
}

namespace detail {

inline nlohmann::json vec_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(hex_double(v[i]));
  return a;
}

inline Vector json_vec(const nlohmann::json& a) {
  if (!a.is_array()) throw ParseError("model JSON: expected an array");
  Vector v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_hex_double(a[i].get<std::string>());
  return v;
}

}  // namespace detail

inline nlohmann::json to_json(const GaussianProcess& gp) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["dim"] = gp.dim();
  j["hyper"] = {{"lengthscales", detail::vec_json(gp.hyper().lengthscales)},
                {"outputscale", hex_double(gp.hyper().outputscale)},
                {"noise_variance", hex_double(gp.hyper().noise_variance)}};
  j["prior_mean"] = hex_double(gp.prior_mean());
  j["input_transform"] = {{"lower", detail::vec_json(gp.input_transform().lower)},
                          {"upper", detail::vec_json(gp.input_transform().upper)}};
  j["outcome_transform"] = {{"mean", hex_double(gp.outcome_transform().mean)},
                            {"scale", hex_double(gp.outcome_transform().scale)}};
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < gp.inputs().rows(); ++i) rows.push_back(detail::vec_json(gp.inputs().row(i).transpose()));
  j["train_inputs"] = std::move(rows);
  j["train_targets"] = detail::vec_json(gp.targets());
  return j;
}

// The Cholesky factor is not stored; it is recomputed on load.
inline GaussianProcess from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ParseError("model JSON: unsupported format_version " + std::to_string(version));
    }
    const int d = j.at("dim").get<int>();
    Hyperparameters h;
    h.lengthscales = detail::json_vec(j.at("hyper").at("lengthscales"));
    h.outputscale = parse_hex_double(j.at("hyper").at("outputscale").get<std::string>());
    h.noise_variance = parse_hex_double(j.at("hyper").at("noise_variance").get<std::string>());
    InputTransform in{detail::json_vec(j.at("input_transform").at("lower")),
                      detail::json_vec(j.at("input_transform").at("upper"))};
    OutcomeTransform out;
    out.mean = parse_hex_double(j.at("outcome_transform").at("mean").get<std::string>());
    out.scale = parse_hex_double(j.at("outcome_transform").at("scale").get<std::string>());
    const auto& rows = j.at("train_inputs");
    Matrix x(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Vector r = detail::json_vec(rows[i]);
      if (r.size() != d) throw ParseError("model JSON: training row has wrong dimension");
      x.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    Vector y = detail::json_vec(j.at("train_targets"));
    const double m = parse_hex_double(j.at("prior_mean").get<std::string>());
    return GaussianProcess(std::move(x), std::move(y), std::move(h), std::move(in), out, m);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace riskopt::gp
