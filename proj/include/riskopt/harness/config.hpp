#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/optimize/tts.hpp"
#include "riskopt/problems/benchmarks.hpp"
#include "riskopt/problems/external_simulator.hpp"
#include "riskopt/problems/oracle.hpp"

namespace riskopt::harness {

enum class Algorithm { RhoKg, RhoKgApx, Ei, Ucb, KgPlain, Random, RhoRandom };

inline const std::vector<std::pair<std::string, Algorithm>>& algorithm_names() {
  static const std::vector<std::pair<std::string, Algorithm>> names = {
      {"rho_kg", Algorithm::RhoKg}, {"rho_kg_apx", Algorithm::RhoKgApx}, {"ei", Algorithm::Ei},
      {"ucb", Algorithm::Ucb},      {"kg_plain", Algorithm::KgPlain},    {"random", Algorithm::Random},
      {"rho_random", Algorithm::RhoRandom}};
  return names;
}

inline std::string to_string(Algorithm a) {
  for (const auto& [n, v] : algorithm_names())
    if (v == a) return n;
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (const auto& [n, v] : algorithm_names())
    if (n == s) return v;
  throw ConfigError("unknown algorithm '" + s + "'");
}

// Joint methods model F over X x W and pay one evaluation per step; the
// baselines model rho over X and pay |W~| evaluations per step.
inline bool is_joint(Algorithm a) {
  return a == Algorithm::RhoKg || a == Algorithm::RhoKgApx || a == Algorithm::RhoRandom;
}

// Flat "section.key" -> raw value text, with the line it came from.
struct ConfigValue {
  std::string text;
  int line = 0;
};

class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& source = "<config>") {
    ConfigFile c;
    c.source_ = source;
    std::string raw, section;
    int lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      const std::string line = trim(strip_comment(raw));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError(where(source, lineno) + "unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw ParseError(where(source, lineno) + "empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(where(source, lineno) + "expected key = value");
      std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty()) throw ParseError(where(source, lineno) + "empty key or value");
      if (!section.empty()) key = section + "." + key;
      if (c.values_.count(key)) throw ParseError(where(source, lineno) + "duplicate key '" + key + "'");
      c.values_[key] = {value, lineno};
    }
    return c;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::vector<std::string> keys() const {
    std::vector<std::string> k;
    for (const auto& [name, v] : values_) k.push_back(name);
    return k;
  }

  std::string get_string(const std::string& key) const {
    const ConfigValue& v = at(key);
    if (v.text.size() >= 2 && (v.text.front() == '"' || v.text.front() == '\'')) {
      if (v.text.back() != v.text.front()) throw ParseError(where(source_, v.line) + "unterminated string");
      return v.text.substr(1, v.text.size() - 2);
    }
    return v.text;
  }

  double get_double(const std::string& key) const {
    const ConfigValue& v = at(key);
    return to_double(v.text, v.line);
  }

  long get_long(const std::string& key) const {
    const ConfigValue& v = at(key);
    std::size_t used = 0;
    long out = 0;
    try {
      out = std::stol(v.text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.text.size()) throw ParseError(where(source_, v.line) + "expected an integer for '" + key + "'");
    return out;
  }

  std::vector<double> get_array(const std::string& key) const {
    const ConfigValue& v = at(key);
    if (v.text.size() < 2 || v.text.front() != '[' || v.text.back() != ']')
      throw ParseError(where(source_, v.line) + "expected [a, b, ...] for '" + key + "'");
    std::vector<double> out;
    std::stringstream ss(v.text.substr(1, v.text.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(to_double(item, v.line));
    }
    return out;
  }

  int line_of(const std::string& key) const { return at(key).line; }
  const std::string& source() const { return source_; }

 private:
  static std::string where(const std::string& source, int line) { return source + ":" + std::to_string(line) + ": "; }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::string strip_comment(const std::string& s) {
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (quote) {
        if (s[i] == quote) quote = 0;
      } else if (s[i] == '"' || s[i] == '\'') {
        quote = s[i];
      } else if (s[i] == '#') {
        return s.substr(0, i);
      }
    }
    return s;
  }

  double to_double(const std::string& text, int line) const {
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size()) throw ParseError(where(source_, line) + "expected a number, got '" + text + "'");
    return out;
  }

  const ConfigValue& at(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
  }

  std::string source_;
  std::map<std::string, ConfigValue> values_;
};

struct ExperimentConfig {
  std::string problem = "branin_williams";
  std::optional<risk::RiskKind> risk;
  std::optional<double> alpha;
  std::optional<double> noise_std;
  std::optional<int> l_inner;  // acq.L
  std::optional<int> l_eval;
  // External simulator; problem = "external".
  std::string simulator;
  std::vector<double> x_lower, x_upper, w_lower, w_upper;
  double simulator_timeout = 600.0;

  Algorithm algorithm = Algorithm::RhoKgApx;
  long budget = 240;
  std::uint64_t seed = 0;
  std::optional<int> n_init;  // default 2 dx + 2
  std::string output;
  std::string history_output;

  int fantasies = 10;  // K
  int paths = 10;      // M
  int score_fantasies = 4;
  double ucb_beta = 0.2;

  // Unset fields take the dimension-scaled defaults.
  std::optional<int> restarts, raw_samples, inner_restarts, inner_raw;
  int tts_period = 10;
  int q2 = 100, q3 = 50;

  int gp_restarts = 5;
  int gp_refit_restarts = 1;
  int gp_iterations = 100;
  int gp_refit_every = 1;

  int rec_paths = 64;
  std::optional<int> rec_restarts, rec_raw;

  static const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> k = {
        "problem.name",        "problem.risk",       "problem.alpha",       "problem.noise_std",
        "problem.l_eval",      "problem.simulator",  "problem.x_lower",     "problem.x_upper",
        "problem.w_lower",     "problem.w_upper",    "problem.timeout",     "algorithm",
        "budget",              "seed",               "n_init",              "output",
        "history_output",      "acq.K",              "acq.M",               "acq.L",
        "acq.score_K",         "acq.ucb_beta",       "opt.T",               "opt.restarts",
        "opt.raw_samples",     "opt.inner_restarts", "opt.inner_raw",       "opt.q2",
        "opt.q3",              "gp.restarts",        "gp.refit_restarts",   "gp.iterations",
        "gp.refit_every",      "rec.M",              "rec.restarts",        "rec.raw_samples"};
    return k;
  }

  static ExperimentConfig from_file(const ConfigFile& f);

  // Applies the keys present in f on top of c.
  static ExperimentConfig from_file(const ConfigFile& f, ExperimentConfig c) {
    for (const std::string& key : f.keys()) {
      const auto& k = known_keys();
      if (std::find(k.begin(), k.end(), key) == k.end())
        throw ConfigError(f.source() + ":" + std::to_string(f.line_of(key)) + ": unknown key '" + key + "'");
    }
    auto str = [&](const char* key, std::string& out) {
      if (f.has(key)) out = f.get_string(key);
    };
    auto num = [&](const char* key, auto& out) {
      if (f.has(key)) out = static_cast<std::remove_reference_t<decltype(out)>>(f.get_long(key));
    };
    auto opt_int = [&](const char* key, std::optional<int>& out) {
      if (f.has(key)) out = static_cast<int>(f.get_long(key));
    };
    auto arr = [&](const char* key, std::vector<double>& out) {
      if (f.has(key)) out = f.get_array(key);
    };
    str("problem.name", c.problem);
    if (f.has("problem.risk")) {
      try {
        c.risk = risk::parse_risk_kind(f.get_string("problem.risk"));
      } catch (const InvalidArgument& e) {
        throw ConfigError(f.source() + ":" + std::to_string(f.line_of("problem.risk")) + ": " + e.what());
      }
    }
    if (f.has("problem.alpha")) c.alpha = f.get_double("problem.alpha");
    if (f.has("problem.noise_std")) c.noise_std = f.get_double("problem.noise_std");
    opt_int("problem.l_eval", c.l_eval);
    str("problem.simulator", c.simulator);
    arr("problem.x_lower", c.x_lower);
    arr("problem.x_upper", c.x_upper);
    arr("problem.w_lower", c.w_lower);
    arr("problem.w_upper", c.w_upper);
    if (f.has("problem.timeout")) c.simulator_timeout = f.get_double("problem.timeout");
    if (f.has("algorithm")) c.algorithm = parse_algorithm(f.get_string("algorithm"));
    num("budget", c.budget);
    if (f.has("seed")) c.seed = static_cast<std::uint64_t>(f.get_long("seed"));
    opt_int("n_init", c.n_init);
    str("output", c.output);
    str("history_output", c.history_output);
    num("acq.K", c.fantasies);
    num("acq.M", c.paths);
    opt_int("acq.L", c.l_inner);
    num("acq.score_K", c.score_fantasies);
    if (f.has("acq.ucb_beta")) c.ucb_beta = f.get_double("acq.ucb_beta");
    num("opt.T", c.tts_period);
    opt_int("opt.restarts", c.restarts);
    opt_int("opt.raw_samples", c.raw_samples);
    opt_int("opt.inner_restarts", c.inner_restarts);
    opt_int("opt.inner_raw", c.inner_raw);
    num("opt.q2", c.q2);
    num("opt.q3", c.q3);
    num("gp.restarts", c.gp_restarts);
    num("gp.refit_restarts", c.gp_refit_restarts);
    num("gp.iterations", c.gp_iterations);
    num("gp.refit_every", c.gp_refit_every);
    num("rec.M", c.rec_paths);
    opt_int("rec.restarts", c.rec_restarts);
    opt_int("rec.raw_samples", c.rec_raw);
    return c;
  }

  static ExperimentConfig load(const std::string& path) { return from_file(ConfigFile::load(path)); }

  void validate() const {
    if (budget < 1) throw ConfigError("budget must be positive");
    if (fantasies < 1 || paths < 1 || score_fantasies < 1) throw ConfigError("acq.K, acq.M, acq.score_K must be positive");
    if (tts_period < 1 || q2 < 1 || q3 < 1) throw ConfigError("opt.T, opt.q2, opt.q3 must be positive");
    if (gp_restarts < 0 || gp_refit_restarts < 0 || gp_iterations < 1 || gp_refit_every < 1)
      throw ConfigError("bad gp fitting settings");
    if (rec_paths < 1) throw ConfigError("rec.M must be positive");
    if (n_init && *n_init < 2) throw ConfigError("n_init must be at least 2");
    if (!(ucb_beta >= 0.0)) throw ConfigError("acq.ucb_beta must be nonnegative");
  }

  optimize::OptimizerConfig optimizer(int dx, int dw) const {
    optimize::OptimizerConfig o = optimize::OptimizerConfig::defaults(dx, dw);
    o.q2 = q2;
    o.q3 = q3;
    o.tts_period = tts_period;
    if (restarts) o.restarts = *restarts;
    if (raw_samples) o.raw_samples = *raw_samples;
    if (inner_restarts) o.inner_restarts = *inner_restarts;
    if (inner_raw) o.inner_raw = *inner_raw;
    return o;
  }
};

inline ExperimentConfig ExperimentConfig::from_file(const ConfigFile& f) { return from_file(f, ExperimentConfig{}); }

/// Problem described by a config: a built-in benchmark with overrides, or an
/// external simulator. Attaches the recorded true optimum when available.
inline problems::ProblemSpec make_problem(const ExperimentConfig& c) {
  problems::ProblemSpec p;
  if (c.problem == "external") {
    if (c.simulator.empty()) throw ConfigError("problem 'external' needs problem.simulator");
    auto vec = [](const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())).eval(); };
    if (c.x_lower.empty() || c.w_lower.empty())
      throw ConfigError("external problem needs problem.x_lower/x_upper and problem.w_lower/w_upper");
    const int lw = c.l_inner.value_or(8);
    p = problems::external_problem(c.simulator, vec(c.x_lower), vec(c.x_upper),
                                   qmc::WDomain::box(vec(c.w_lower), vec(c.w_upper)), c.risk.value_or(risk::RiskKind::CVaR),
                                   c.alpha.value_or(0.7), lw, c.l_eval.value_or(lw), c.simulator_timeout);
  } else {
    try {
      p = problems::make_problem(c.problem);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (c.risk) p.kind = *c.risk;
    if (c.alpha) p.alpha = *c.alpha;
    if (c.noise_std) p.noise_std = *c.noise_std;
    if (c.l_inner) p.l_inner = *c.l_inner;
    if (c.l_eval) p.l_eval = *c.l_eval;
    p.true_optimum.reset();
    try {
      p.true_optimum = problems::lookup_true_optimum(problems::load_true_optima(problems::default_true_optima_path()), p);
    } catch (const ParseError&) {
      // no data file: gaps stay empty
    }
  }
  try {
    p.validate();
    risk::RiskSpec{p.kind, p.alpha, {}}.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (p.w.finite && (p.l_inner > p.w.size() || p.l_eval > p.w.size()))
    throw ConfigError("W~ larger than the finite environment set");
  return p;
}

}  // namespace riskopt::harness
