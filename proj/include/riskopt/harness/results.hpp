#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/harness/experiment.hpp"

namespace riskopt::harness {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

inline std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// First line of every file written here; the only field that differs between
// replays of the same config and seed, together with wall_time_s.
inline std::string timestamp_header(const std::string& kind) { return "# riskopt " + kind + "; created " + utc_timestamp(); }

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct ResultRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string algorithm;
  int iteration = 0;
  long evals_used = 0;
  Vector x;
  double posterior_risk = 0.0;
  std::optional<double> true_risk, gap;
  double wall_time_s = 0.0;
};

inline std::string run_id(const ExperimentConfig& c) {
  return c.problem + "-" + to_string(c.algorithm) + "-" + std::to_string(c.seed);
}

inline std::vector<ResultRow> result_rows(const Experiment& e) {
  std::vector<ResultRow> rows;
  for (const Recommendation& r : e.recommendations()) {
    rows.push_back({run_id(e.config()), e.config().seed, to_string(e.config().algorithm), r.iteration, r.evals_used, r.x,
                    r.posterior_risk, r.true_risk, r.gap, r.wall_time_s});
  }
  return rows;
}

inline void write_results(std::ostream& out, const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw InvalidArgument("no result rows to write");
  const Eigen::Index d = rows.front().x.size();
  out << timestamp_header("results") << "\n";
  out << "run_id,seed,algorithm,iteration,evals_used";
  for (Eigen::Index k = 0; k < d; ++k) out << ",x_rec_" << k + 1;
  out << ",posterior_risk_estimate,true_risk,gap,wall_time_s\n";
  for (const ResultRow& r : rows) {
    out << r.run_id << ',' << r.seed << ',' << r.algorithm << ',' << r.iteration << ',' << r.evals_used;
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << format_real(r.x[k]);
    out << ',' << format_real(r.posterior_risk) << ',' << format_optional(r.true_risk) << ','
        << format_optional(r.gap) << ',' << format_real(r.wall_time_s) << "\n";
  }
}

inline void write_results(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  write_results(out, rows);
}

inline std::vector<ResultRow> read_results(std::istream& in, const std::string& path = "<results>") {
  std::vector<ResultRow> rows;
  std::string line;
  int lineno = 0, d = -1;
  auto fail = [&](const std::string& msg) { return ParseError(path + ":" + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_csv(line);
    if (d < 0) {
      if (f.size() < 10 || f[0] != "run_id") throw fail("expected a result header row");
      d = static_cast<int>(f.size()) - 9;
      continue;
    }
    if (static_cast<int>(f.size()) != d + 9) throw fail("expected " + std::to_string(d + 9) + " fields");
    try {
      ResultRow r;
      std::size_t used = 0;
      auto real = [&](const std::string& s) {
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      };
      r.run_id = f[0];
      r.seed = std::stoull(f[1]);
      r.algorithm = f[2];
      r.iteration = std::stoi(f[3]);
      r.evals_used = std::stol(f[4]);
      r.x.resize(d);
      for (int k = 0; k < d; ++k) r.x[k] = real(f[5 + k]);
      r.posterior_risk = real(f[5 + d]);
      if (!f[6 + d].empty()) r.true_risk = real(f[6 + d]);
      if (!f[7 + d].empty()) r.gap = real(f[7 + d]);
      r.wall_time_s = real(f[8 + d]);
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw fail(std::string("malformed field (") + e.what() + ")");
    }
  }
  if (d < 0) throw ParseError(path + ": no header row");
  return rows;
}

inline std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_results(in, path);
}

// ---- aggregation ----------------------------------------------------------

inline constexpr double kLogGapFloor = 1e-12;

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

// Standard error from pairwise differences, so identical replications give
// exactly zero.
inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe m;
  const std::size_t n = v.size();
  if (n == 0) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(n);
  if (n < 2) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += (v[i] - v[j]) * (v[i] - v[j]);
  const double var = s / (static_cast<double>(n) * static_cast<double>(n - 1));
  m.se = std::sqrt(var / static_cast<double>(n));
  return m;
}

struct ReportRow {
  std::string algorithm;
  long evals_used = 0;
  int replications = 0;
  std::optional<MeanSe> gap, log_gap;
  MeanSe posterior_risk;
};

/// Mean and standard error across replications at each evaluation count. With
/// smooth, every series is replaced by a trailing moving average of 3 points.
inline std::vector<ReportRow> aggregate(const std::vector<ResultRow>& rows, bool smooth = false) {
  struct Acc {
    std::vector<double> gap, log_gap, risk;
  };
  std::map<std::string, std::map<long, Acc>> groups;
  for (const ResultRow& r : rows) {
    Acc& a = groups[r.algorithm][r.evals_used];
    a.risk.push_back(r.posterior_risk);
    if (r.gap) {
      a.gap.push_back(*r.gap);
      a.log_gap.push_back(std::log10(std::max(*r.gap, kLogGapFloor)));
    }
  }
  std::vector<ReportRow> out;
  for (const auto& [alg, series] : groups) {
    std::vector<ReportRow> rs;
    for (const auto& [evals, a] : series) {
      ReportRow r;
      r.algorithm = alg;
      r.evals_used = evals;
      r.replications = static_cast<int>(a.risk.size());
      r.posterior_risk = mean_se(a.risk);
      if (a.gap.size() == a.risk.size()) {
        r.gap = mean_se(a.gap);
        r.log_gap = mean_se(a.log_gap);
      }
      rs.push_back(r);
    }
    if (smooth) {
      const std::vector<ReportRow> raw = rs;
      auto avg = [](const std::vector<MeanSe>& v) {
        MeanSe m;
        for (const MeanSe& x : v) {
          m.mean += x.mean;
          m.se += x.se;
        }
        m.mean /= static_cast<double>(v.size());
        m.se /= static_cast<double>(v.size());
        return m;
      };
      for (std::size_t i = 0; i < rs.size(); ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        std::vector<MeanSe> risk, gap, lg;
        bool have_gap = true;
        for (std::size_t j = lo; j <= i; ++j) {
          risk.push_back(raw[j].posterior_risk);
          if (raw[j].gap) {
            gap.push_back(*raw[j].gap);
            lg.push_back(*raw[j].log_gap);
          } else {
            have_gap = false;
          }
        }
        rs[i].posterior_risk = avg(risk);
        if (have_gap) {
          rs[i].gap = avg(gap);
          rs[i].log_gap = avg(lg);
        }
      }
    }
    out.insert(out.end(), rs.begin(), rs.end());
  }
  return out;
}

inline void write_report(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << timestamp_header("report") << "\n";
  out << "algorithm,evals_used,replications,mean_gap,se_gap,mean_log10_gap,se_log10_gap,mean_posterior_risk,"
         "se_posterior_risk\n";
  for (const ReportRow& r : rows) {
    out << r.algorithm << ',' << r.evals_used << ',' << r.replications << ',';
    if (r.gap) {
      out << format_real(r.gap->mean) << ',' << format_real(r.gap->se) << ',' << format_real(r.log_gap->mean) << ','
          << format_real(r.log_gap->se);
    } else {
      out << ",,,";
    }
    out << ',' << format_real(r.posterior_risk.mean) << ',' << format_real(r.posterior_risk.se) << "\n";
  }
}

/// Series for an optimality-gap plot: log10 gap (or the posterior risk
/// estimate when no oracle exists) with a one-standard-error band.
inline void write_plot_data(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << timestamp_header("plot data") << "\n";
  out << "algorithm,evals_used,metric,value,lower,upper\n";
  for (const ReportRow& r : rows) {
    const bool gap = r.log_gap.has_value();
    const MeanSe m = gap ? *r.log_gap : r.posterior_risk;
    out << r.algorithm << ',' << r.evals_used << ',' << (gap ? "log10_gap" : "posterior_risk") << ','
        << format_real(m.mean) << ',' << format_real(m.mean - m.se) << ',' << format_real(m.mean + m.se) << "\n";
  }
}

// ---- observation histories ------------------------------------------------

/// Columns iteration, cost, x_1..x_dx, [w_1..w_dw,] y in raw coordinates.
/// Joint histories hold single evaluations; baseline histories rho estimates.
inline void write_history(std::ostream& out, const std::vector<Observation>& obs, int dx, int dw) {
  out << timestamp_header("history") << "\n";
  out << "iteration,cost";
  for (int k = 0; k < dx; ++k) out << ",x_" << k + 1;
  for (int k = 0; k < dw; ++k) out << ",w_" << k + 1;
  out << ",y\n";
  for (const Observation& o : obs) {
    out << o.iteration << ',' << o.cost;
    for (int k = 0; k < dx; ++k) out << ',' << format_real(o.x[k]);
    for (int k = 0; k < dw; ++k) out << ',' << format_real(o.w[k]);
    out << ',' << format_real(o.y) << "\n";
  }
}

struct History {
  int dx = 0, dw = 0;
  std::vector<Observation> rows;
};

inline History read_history(std::istream& in, const std::string& path = "<history>") {
  History h;
  std::string line;
  int lineno = 0;
  bool header = true;
  auto fail = [&](const std::string& msg) { return ParseError(path + ":" + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_csv(line);
    if (header) {
      if (f.size() < 4 || f[0] != "iteration" || f[1] != "cost" || f.back() != "y") throw fail("expected a history header");
      for (std::size_t i = 2; i + 1 < f.size(); ++i) {
        if (f[i].rfind("x_", 0) == 0 && h.dw == 0) {
          ++h.dx;
        } else if (f[i].rfind("w_", 0) == 0) {
          ++h.dw;
        } else {
          throw fail("unexpected column '" + f[i] + "'");
        }
      }
      if (h.dx == 0) throw fail("history has no decision columns");
      header = false;
      continue;
    }
    if (static_cast<int>(f.size()) != 3 + h.dx + h.dw) throw fail("expected " + std::to_string(3 + h.dx + h.dw) + " fields");
    try {
      Observation o;
      o.iteration = std::stoi(f[0]);
      o.cost = std::stoi(f[1]);
      o.x.resize(h.dx);
      o.w.resize(h.dw);
      for (int k = 0; k < h.dx; ++k) o.x[k] = std::stod(f[2 + k]);
      for (int k = 0; k < h.dw; ++k) o.w[k] = std::stod(f[2 + h.dx + k]);
      o.y = std::stod(f[2 + h.dx + h.dw]);
      if (!std::isfinite(o.y) || !o.x.allFinite() || !o.w.allFinite()) throw std::invalid_argument("non-finite value");
      h.rows.push_back(std::move(o));
    } catch (const std::exception& e) {
      throw fail(std::string("malformed field (") + e.what() + ")");
    }
  }
  if (header) throw ParseError(path + ": no header row");
  return h;
}

inline History read_history(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_history(in, path);
}

}  // namespace riskopt::harness
