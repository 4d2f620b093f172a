// riskopt command line: run experiments, query the models, emit oracle
// surfaces and aggregate result files.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "riskopt.hpp"

using namespace riskopt;
using namespace riskopt::harness;

namespace {

struct Common {
  std::string config, problem, algorithm, output, history;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<long> budget;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "experiment config file");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--output", output, "output file (default stdout)");
    app->add_option("--problem", problem, "problem name");
    app->add_option("--algorithm", algorithm, "algorithm name");
    app->add_option("--budget", budget, "total F evaluations");
    app->add_option("--set", sets, "extra config line key=value (repeatable)");
  }

  ExperimentConfig build() const {
    ExperimentConfig c;
    if (!config.empty()) c = ExperimentConfig::load(config);
    for (const std::string& s : sets) {
      std::istringstream in(s);
      c = ExperimentConfig::from_file(ConfigFile::parse(in, "--set"), c);
    }
    if (!problem.empty()) c.problem = problem;
    if (!algorithm.empty()) c.algorithm = parse_algorithm(algorithm);
    if (seed) c.seed = *seed;
    if (budget) c.budget = *budget;
    if (!output.empty()) c.output = output;
    return c;
  }
};

// Writes via fn to the named file, or stdout when the name is empty.
template <class Fn>
void emit(const std::string& path, Fn fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  fn(out);
}

std::vector<Observation> history_for(const Experiment& e, const std::string& path) {
  if (path.empty()) throw ConfigError("--history is required");
  const History h = read_history(path);
  if (h.dx != e.problem().dx()) throw ConfigError(path + ": decision dimension does not match the problem");
  if (e.joint() && h.dw != e.problem().dw())
    throw ConfigError(path + ": " + to_string(e.config().algorithm) + " needs (x, w, y) rows");
  if (!e.joint() && h.dw != 0) throw ConfigError(path + ": " + to_string(e.config().algorithm) + " needs (x, rho) rows");
  return h.rows;
}

int cmd_run(const Common& c, const std::string& history_output) {
  ExperimentConfig cfg = c.build();
  if (!history_output.empty()) cfg.history_output = history_output;
  Experiment e(cfg);
  e.run();
  for (const std::string& m : e.log()) std::cerr << m << "\n";
  const std::vector<ResultRow> rows = result_rows(e);
  emit(cfg.output, [&](std::ostream& out) { write_results(out, rows); });
  if (!cfg.history_output.empty()) {
    emit(cfg.history_output,
         [&](std::ostream& out) { write_history(out, e.history(), e.problem().dx(), e.joint() ? e.problem().dw() : 0); });
  }
  return 0;
}

int cmd_suggest(const Common& c) {
  const ExperimentConfig cfg = c.build();
  Experiment e(cfg);
  e.load(history_for(e, c.history));
  const Vector p = e.propose();
  for (const std::string& m : e.log()) std::cerr << m << "\n";
  const int dx = e.problem().dx();
  emit(cfg.output, [&](std::ostream& out) {
    for (int k = 0; k < dx; ++k) out << (k ? "," : "") << "x_" << k + 1;
    if (e.joint())
      for (int k = 0; k < e.problem().dw(); ++k) out << ",w_" << k + 1;
    out << "\n";
    for (Eigen::Index k = 0; k < p.size(); ++k) out << (k ? "," : "") << format_real(p[k]);
    out << "\n";
  });
  return 0;
}

int cmd_recommend(const Common& c) {
  const ExperimentConfig cfg = c.build();
  Experiment e(cfg);
  e.load(history_for(e, c.history));
  const Recommendation r = e.recommend();
  emit(cfg.output, [&](std::ostream& out) {
    for (Eigen::Index k = 0; k < r.x.size(); ++k) out << "x_rec_" << k + 1 << ",";
    out << "posterior_risk_estimate,true_risk,gap\n";
    for (Eigen::Index k = 0; k < r.x.size(); ++k) out << format_real(r.x[k]) << ",";
    out << format_real(r.posterior_risk) << "," << format_optional(r.true_risk) << "," << format_optional(r.gap) << "\n";
  });
  return 0;
}

int cmd_oracle(const Common& c, int grid, bool optimum) {
  const ExperimentConfig cfg = c.build();
  const problems::ProblemSpec p = make_problem(cfg);
  if (!p.has_oracle) throw ConfigError("problem " + p.name + " has no noise-free objective");
  if (optimum) {
    const problems::OptimumResult r = problems::true_optimum_search(p, grid);
    emit(cfg.output, [&](std::ostream& out) {
      out << "problem,risk,alpha,true_optimum";
      for (int k = 0; k < p.dx(); ++k) out << ",x_" << k + 1;
      out << "\n" << p.name << "," << risk::to_string(p.kind) << "," << format_real(p.alpha) << "," << format_real(r.value);
      for (int k = 0; k < p.dx(); ++k) out << "," << format_real(r.x[k]);
      out << "\n";
    });
    return 0;
  }
  const int d = p.dx();
  long total = 1;
  for (int k = 0; k < d; ++k) {
    total *= grid;
    if (total > 10'000'000) throw ConfigError("oracle grid too large; lower --grid");
  }
  const risk::WSet w = problems::truth_wset(p);
  emit(cfg.output, [&](std::ostream& out) {
    out << timestamp_header("oracle surface") << "\n";
    for (int k = 0; k < d; ++k) out << "x_" << k + 1 << ",";
    out << "risk\n";
    std::vector<int> idx(d, 0);
    for (long n = 0; n < total; ++n) {
      Vector x(d);
      for (int k = 0; k < d; ++k) x[k] = p.x_lower[k] + (p.x_upper[k] - p.x_lower[k]) * idx[k] / (grid - 1.0);
      for (int k = 0; k < d; ++k) out << format_real(x[k]) << ",";
      out << format_real(problems::brute_force_risk(p, x, w)) << "\n";
      for (int k = d - 1; k >= 0; --k) {
        if (++idx[k] < grid) break;
        idx[k] = 0;
      }
    }
  });
  return 0;
}

std::vector<ResultRow> load_all(const std::vector<std::string>& files) {
  std::vector<ResultRow> rows;
  for (const std::string& f : files) {
    std::vector<ResultRow> r = read_results(f);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization of VaR and CVaR objectives"};
  app.require_subcommand(1);

  Common run_c, suggest_c, rec_c, oracle_c, report_c, plot_c;
  std::string history_output;
  int grid = 101;
  bool optimum = false, smooth = false;
  std::vector<std::string> report_files, plot_files;

  CLI::App* run = app.add_subcommand("run", "execute one experiment and write its result file");
  run_c.attach(run);
  run->add_option("--history-output", history_output, "also write the observation history");

  CLI::App* suggest = app.add_subcommand("suggest", "next point to evaluate given a history file");
  suggest_c.attach(suggest);
  suggest->add_option("--history", suggest_c.history, "history CSV")->required();

  CLI::App* recommend = app.add_subcommand("recommend", "recommended decision given a history file");
  rec_c.attach(recommend);
  recommend->add_option("--history", rec_c.history, "history CSV")->required();

  CLI::App* oracle = app.add_subcommand("oracle", "brute-force risk surface on a grid, or the true optimum");
  oracle_c.attach(oracle);
  oracle->add_option("--grid", grid, "grid points per decision dimension")->check(CLI::Range(2, 100000));
  oracle->add_flag("--optimum", optimum, "search for the global minimum of the true risk");

  CLI::App* report = app.add_subcommand("report", "aggregate result files: mean and standard error per evaluation count");
  report_c.attach(report);
  report->add_option("files", report_files, "result files")->required();
  report->add_flag("--smooth", smooth, "moving average over 3 points");

  CLI::App* plot = app.add_subcommand("plot-data", "optimality-gap series for external plotting");
  plot_c.attach(plot);
  plot->add_option("files", plot_files, "result files")->required();
  plot->add_flag("--smooth", smooth, "moving average over 3 points");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_c, history_output);
    if (*suggest) return cmd_suggest(suggest_c);
    if (*recommend) return cmd_recommend(rec_c);
    if (*oracle) return cmd_oracle(oracle_c, grid, optimum);
    if (*report) {
      const auto rows = aggregate(load_all(report_files), smooth);
      emit(report_c.output, [&](std::ostream& out) { write_report(out, rows); });
      return 0;
    }
    if (*plot) {
      const auto rows = aggregate(load_all(plot_files), smooth);
      emit(plot_c.output, [&](std::ostream& out) { write_plot_data(out, rows); });
      return 0;
    }
  } catch (const BudgetExhausted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
