#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace tvgp {

enum class KernelFamily { gaussian };

/// Two Gaussian parameterizations are in use and must not be conflated:
///  - per_coordinate: exp(-sum_h ((x_h - y_h)/theta_h)^2), one length per
///    active coordinate (the input-space form);
///  - sq_distance_divisor: exp(-|x - y|^2 / theta), a single divisor on the
///    squared distance (the output-location form).
enum class LengthForm { per_coordinate, sq_distance_divisor };

struct CorrelationSpec {
  KernelFamily family = KernelFamily::gaussian;
  LengthForm form = LengthForm::per_coordinate;
  Eigen::VectorXd lengths;      // strictly positive
  std::optional<double> scale;  // optional sigma^2 multiplier, strictly positive

  void validate() const;
};

/// Correlation between two points; in (0,1] (before any scale) and 1 iff x==y.
double correlation(const CorrelationSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

/// Symmetric kernel matrix together with the Cholesky factor of
/// values + jitter_used*I. The jitter ladder starts at 0 and escalates by
/// decades from 1e-10, capped at 1e-4 times the mean diagonal.
struct KernelMatrix {
  Eigen::MatrixXd values;  // as assembled, no jitter
  Eigen::MatrixXd chol;    // lower factor of values + jitter_used*I
  double jitter_used = 0.0;

  int n() const { return static_cast<int>(values.rows()); }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  double log_det() const;  // of values + jitter_used*I
};

/// Kernel matrix over a point set (rows of `points`).
KernelMatrix build_kernel_matrix(const Eigen::MatrixXd& points, const CorrelationSpec& spec);

/// Cross-correlation matrix L with L(j,k) = corr(points.row(j), new_points.row(k)).
Eigen::MatrixXd build_cross(const Eigen::MatrixXd& points, const Eigen::MatrixXd& new_points,
                            const CorrelationSpec& spec);

/// Wraps a set of scalar locations as an n x 1 point matrix.
Eigen::MatrixXd scalar_points(const Eigen::VectorXd& locations);

}  // namespace tvgp
