#pragma once

#include <limits>
#include <string>

#include <Eigen/Dense>

#include "tvgp/tensor.hpp"

namespace tvgp {

/// Posterior predictive summary over a batch of query inputs. mean and
/// variance share dims (n_query, r_1, ..., r_m); kstar holds the posterior
/// input correlation at each query point.
struct PredictiveDistribution {
  Tensor mean;
  Tensor variance;
  Eigen::VectorXd kstar;
  std::string emulator;  // "ope" | "ppe" | "tvgp"
  double dof = std::numeric_limits<double>::quiet_NaN();  // t dof metadata, if any

  int n_query() const { return mean.extent(0); }
};

}  // namespace tvgp
