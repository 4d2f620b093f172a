#pragma once

// Everything: models, risk estimates, acquisitions, optimizers, problems and
// the experiment harness.

#include "riskopt/acquisition/baselines.hpp"
#include "riskopt/acquisition/context.hpp"
#include "riskopt/acquisition/rho_kg.hpp"
#include "riskopt/errors.hpp"
#include "riskopt/gp/fantasy.hpp"
#include "riskopt/gp/fit.hpp"
#include "riskopt/gp/gaussian_process.hpp"
#include "riskopt/gp/serialize.hpp"
#include "riskopt/harness/config.hpp"
#include "riskopt/harness/experiment.hpp"
#include "riskopt/harness/results.hpp"
#include "riskopt/harness/stats.hpp"
#include "riskopt/linalg.hpp"
#include "riskopt/optimize/lbfgs.hpp"
#include "riskopt/optimize/multistart.hpp"
#include "riskopt/optimize/tts.hpp"
#include "riskopt/problems/benchmarks.hpp"
#include "riskopt/problems/external_simulator.hpp"
#include "riskopt/problems/oracle.hpp"
#include "riskopt/problems/problem.hpp"
#include "riskopt/qmc/base_samples.hpp"
#include "riskopt/qmc/normal.hpp"
#include "riskopt/qmc/sobol.hpp"
#include "riskopt/risk/empirical.hpp"
#include "riskopt/risk/posterior_risk.hpp"
