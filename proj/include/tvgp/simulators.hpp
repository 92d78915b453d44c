#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tvgp/design.hpp"
#include "tvgp/tensor.hpp"

namespace tvgp {

/// Pollutant-spill test simulator: two releases in a long narrow channel,
/// observed as log concentration on a fixed space-time grid.
struct EnvConfig {
  Eigen::VectorXd spatial_grid;   // default 15 points, 0.50 .. 2.50, step 1/7
  Eigen::VectorXd temporal_grid;  // default 100 points, 0.3 .. 59.7, step 0.6
  Box input_box;                  // mass, second-spill location, second-spill time, diffusion

  static EnvConfig defaults();
  void validate() const;
};

/// Raw field y(s,t) = sqrt(4 pi) C(x; s, t). The second plume switches on for
/// t > x_3 (the release happens at time x_3, so the term is only real-valued
/// afterwards).
Tensor env_field_raw(const Eigen::VectorXd& x, const EnvConfig& cfg);

/// Emulated output f = log(y + 1), elementwise over the grid.
Tensor env_simulate(const Eigen::VectorXd& x, const EnvConfig& cfg);

/// Deterministic metapopulation SEIR stand-in: daily home/work two-phase
/// mixing through a commuter matrix, reporting infected counts per patch and
/// day.
struct SeirPatchConfig {
  Eigen::VectorXd populations;   // residents per patch
  Eigen::MatrixXd commuters;     // (a,b): residents of a working in b; zero diagonal
  int seed_patch = 0;
  double initial_infected = 100.0;
  int steps = 150;               // days
  Box rate_box;                  // beta, alpha, gamma ranges

  static SeirPatchConfig defaults();  // 15 patches, bundled commuting network
  void validate() const;
  int patches() const { return static_cast<int>(populations.size()); }
};

/// rates = (beta, alpha, gamma). Returns infected counts, dims (patches, steps).
Tensor seir_simulate(const Eigen::VectorXd& rates, const SeirPatchConfig& cfg);

/// All four compartments, dims (4, patches, steps) in S, E, I, R order.
Tensor seir_simulate_full(const Eigen::VectorXd& rates, const SeirPatchConfig& cfg);

/// Elementwise log(y + 1); y must be >= -1 (entries below -1 are a domain error).
Tensor log_shift(const Tensor& y);
/// Elementwise exp(f) - 1.
Tensor log_shift_inverse(const Tensor& f);

/// Patch ordering by time of maximum output, shared across all runs of a
/// training stack (n, r_1, r_2). coordinate[i] is the 1-based rank of patch i;
/// throws if any two runs disagree on the ordering.
std::vector<int> rank_spatial_coordinate(const Tensor& outputs);

}  // namespace tvgp
