#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tvgp/prediction.hpp"
#include "tvgp/tensor.hpp"

namespace tvgp {

/// Floor applied to predictive variances before division/logs; floored points
/// are counted and reported.
constexpr double kVarianceFloor = 1e-12;

/// Mean absolute standardized prediction error: (1/n) sum |f - mu| / sqrt(v).
/// Roughly sqrt(2/pi) for calibrated Gaussian predictions.
double maspe(const Eigen::VectorXd& truths, const Eigen::VectorXd& means,
             const Eigen::VectorXd& variances);

/// Root mean squared prediction error: sqrt((1/n) sum (f - mu)^2).
double rmspe(const Eigen::VectorXd& truths, const Eigen::VectorXd& means);

/// Mean generalized entropy score: -(1/n) sum [ (f - mu)^2 / v + log v ];
/// larger is better.
double mges(const Eigen::VectorXd& truths, const Eigen::VectorXd& means,
            const Eigen::VectorXd& variances);

struct MetricSet {
  double maspe = 0.0;
  double rmspe = 0.0;
  double mges = 0.0;
  double mges_scaled = 0.0;        // mges / 1000, the table convention
  double mean_sq_std_err = 0.0;    // mges = -(mean_sq_std_err) - mean_log_var
  double mean_log_var = 0.0;
  long floored = 0;                // variances raised to the floor
  long count = 0;
};

struct DiagnosticPoint {
  int run = 0;
  std::vector<int> index;  // output-location indices (i_1, ..., i_m)
  double truth = 0.0, mean = 0.0, variance = 0.0, std_error = 0.0;
};

struct DiagnosticReport {
  MetricSet full;     // over every (run, location) cell
  MetricSet sampled;  // over the without-replacement sample
  std::vector<DiagnosticPoint> points;  // the sampled records
  int runs = 0;
  long sample_count = 0;
  std::uint64_t sample_seed = 0;
};

/// Samples `count` (run, location) cells without replacement from the
/// predictions over the diagnostic set, computes all three metrics on the
/// sample and on the full set, and keeps per-point records for plotting.
DiagnosticReport sample_diag_points(const PredictiveDistribution& pred, const Tensor& truth,
                                    long count, std::uint64_t seed);

}  // namespace tvgp
