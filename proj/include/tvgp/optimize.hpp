#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tvgp {

struct LbfgsOptions {
  int max_iters = 120;
  int memory = 8;
  double grad_tol = 1e-6;    // projected-gradient sup norm
  double f_tol = 1e-10;      // relative objective change
  double fd_step = 1e-5;     // central-difference step (relative)
  int max_linesearch = 30;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iters = 0;
  bool converged = false;
};

/// Box-constrained quasi-Newton minimization: L-BFGS directions with
/// projection onto [lo, hi] and a backtracking line search. Gradients are
/// central finite differences (shifted one-sided at the bounds). Objective
/// values that are non-finite are treated as +inf barriers.
LbfgsResult minimize_bounded(const std::function<double(const Eigen::VectorXd&)>& f,
                             Eigen::VectorXd x0, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, const LbfgsOptions& opts = {});

struct StartRecord {
  Eigen::VectorXd x0;
  double f0 = 0.0;
  Eigen::VectorXd x;
  double f = 0.0;
  int iters = 0;
  bool converged = false;
};

struct OptimizerTrace {
  std::vector<StartRecord> starts;
  int best_start = -1;
};

/// Shared settings for emulator hyperparameter estimation.
struct FitOptions {
  int multistart = 8;
  std::uint64_t seed = 1;
  double start_lo = 0.05;  // multistart box on the natural theta scale
  double start_hi = 10.0;
  double bound_lo = 1e-3;  // optimizer box on the natural theta scale
  double bound_hi = 1e3;
  LbfgsOptions lbfgs;
};

/// Multistart driver over a fixed box: Latin-hypercube starts in [start_lo,
/// start_hi]^d (log scale), bounded minimization from each, best result kept.
/// Throws if the objective is non-finite at any start (message names the
/// point) or if every start fails to improve on a finite value.
LbfgsResult multistart_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                int dim, const FitOptions& opts, OptimizerTrace* trace);

}  // namespace tvgp
