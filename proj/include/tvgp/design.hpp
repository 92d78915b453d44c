#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace tvgp {

/// Per-dimension input bounds with the affine [-1,1] scaling used everywhere
/// in the statistical modeling.
struct Box {
  Eigen::VectorXd lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;
  Eigen::MatrixXd scale_into(const Eigen::MatrixXd& raw) const;   // box -> [-1,1]
  Eigen::MatrixXd unscale(const Eigen::MatrixXd& scaled) const;   // [-1,1] -> box
  static Box unit(int p);                                         // [-1,1]^p
};

/// Experimental design kept on both scales.
struct Design {
  Eigen::MatrixXd raw;     // n x p, in the box
  Eigen::MatrixXd scaled;  // n x p, in [-1,1]^p
  Box box;

  int n() const { return static_cast<int>(raw.rows()); }
  int p() const { return static_cast<int>(raw.cols()); }
};

/// The space-filling criterion being minimized:
/// psi(D) = [ (1/C(n,2)) sum_{j<k} 1 / prod_h (x_jh - x_kh)^2 ]^{1/p}.
double maxpro_criterion(const Eigen::MatrixXd& points);

/// Jittered Latin hypercube in [-1,1]^p (one point per stratum per dimension).
Eigen::MatrixXd latin_hypercube(int n, int p, std::mt19937_64& rng);

/// Space-filling design in [-1,1]^p: seeded Latin-hypercube start, then greedy
/// coordinate moves (within-stratum candidates plus pairwise value swaps) that
/// only ever decrease the criterion. Deterministic given the seed.
Design maxpro_design(int n, int p, std::uint64_t seed, int sweeps = 1000);

/// Attaches a box to scaled points: raw = unscaled image.
Design scale_to_box(const Eigen::MatrixXd& scaled_points, const Box& box);

}  // namespace tvgp
