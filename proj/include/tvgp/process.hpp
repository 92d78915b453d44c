#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tvgp/kernels.hpp"
#include "tvgp/tensor.hpp"

namespace tvgp {

/// Prior for a tensor-variate GP: a tensor-valued mean function, a
/// correlation function over inputs, and the Kronecker-factorized
/// coregionalization over output dimensions.
struct TvGpPrior {
  std::function<Tensor(const Eigen::VectorXd&)> mean;  // empty => zero mean
  CorrelationSpec input_corr;
  KroneckerMatrix coregionalization;
};

/// Conditioned tensor-variate GP. Immutable after condition(); predictions
/// and sampling are read-only and safe to call concurrently.
class PosteriorState {
 public:
  static PosteriorState condition(TvGpPrior prior, Eigen::MatrixXd design, Tensor outputs);

  /// Posterior mean tensor at one query point:
  /// M(x) + [F - M] x_0 kappa(x)^T K^{-1}.
  Tensor predict_mean(const Eigen::VectorXd& x) const;

  /// Batch posterior mean; leading mode indexes the queries.
  Tensor predict_mean_batch(const Eigen::MatrixXd& queries) const;

  /// Posterior input correlation kappa*(x, x') = kappa(x,x') - kappa(x)^T K^{-1} kappa(x').
  /// The diagonal (x == x') is clamped into [0, kappa(x,x)].
  double posterior_corr(const Eigen::VectorXd& x, const Eigen::VectorXd& x2) const;

  /// kappa* together with the coregionalization factors: the posterior
  /// covariance between F(x) and F(x') is kappa* (Sigma_1 (x) ... (x) Sigma_m).
  std::pair<double, const KroneckerMatrix*> predict_cov(const Eigen::VectorXd& x,
                                                        const Eigen::VectorXd& x2) const;

  /// Draw from the predictive tensor-normal at x; deterministic given seed.
  Tensor sample(const Eigen::VectorXd& x, std::uint64_t seed) const;

  /// kappa(x): training correlations at a query point.
  Eigen::VectorXd kappa_vector(const Eigen::VectorXd& x) const;

  const KernelMatrix& kernel() const { return kernel_; }
  const Tensor& residuals() const { return residuals_; }
  const Eigen::MatrixXd& design() const { return design_; }
  const TvGpPrior& prior() const { return prior_; }
  const std::vector<int>& output_dims() const { return output_dims_; }
  int n() const { return static_cast<int>(design_.rows()); }

 private:
  PosteriorState(TvGpPrior prior, Eigen::MatrixXd design, Tensor outputs);

  Tensor prior_mean_at(const Eigen::VectorXd& x) const;
  double posterior_corr_raw(const Eigen::VectorXd& x, const Eigen::VectorXd& x2) const;

  TvGpPrior prior_;
  Eigen::MatrixXd design_;
  Tensor residuals_;  // (n, r_1..r_m)
  KernelMatrix kernel_;
  std::vector<int> output_dims_;
  std::vector<Eigen::MatrixXd> coreg_chol_;  // per-factor lower factors, for sampling
};

}  // namespace tvgp
