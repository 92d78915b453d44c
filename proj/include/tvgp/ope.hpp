#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvgp/basis.hpp"
#include "tvgp/kernels.hpp"
#include "tvgp/optimize.hpp"
#include "tvgp/prediction.hpp"
#include "tvgp/tensor.hpp"

namespace tvgp {

/// One output dimension of the outer-product emulator: the locations feeding
/// the coregionalization kernel, the locations feeding the regressors (often
/// the same), and the regressor set over a scalar location.
struct OpeOutputDim {
  Eigen::VectorXd corr_locations;
  Eigen::VectorXd regressor_locations;
  Basis basis;
  LengthForm corr_form = LengthForm::sq_distance_divisor;

  int size() const { return static_cast<int>(corr_locations.size()); }
};

/// Normal-inverse-gamma prior on (beta, sigma^2):
/// sigma^{-2} ~ Gamma(shape, rate), beta | sigma^2 ~ N(0, sigma^2/precision I).
/// precision = 0 selects the improper flat limit (GLS), which has no proper
/// marginal likelihood and can fail on rank-deficient regressors.
struct NigPrior {
  double shape = 1.0;
  double rate = 1.0;
  double precision = 1.0;
};

struct OpeSpec {
  Basis input_basis;                   // g_0 over the (scaled) inputs
  std::vector<OpeOutputDim> output_dims;
  LengthForm input_corr_form = LengthForm::per_coordinate;
  NigPrior prior;
};

/// Correlation lengths for the input kernel (one per input coordinate) and
/// each output-dimension kernel (one divisor each).
struct OpeTheta {
  Eigen::VectorXd input_lengths;
  Eigen::VectorXd output_lengths;
};

struct OpeDesignMatrices {
  Eigen::MatrixXd g0;                // n x v_0
  std::vector<Eigen::MatrixXd> gz;   // r_z x v_z per output dim
};

/// Regression design matrices; the Kronecker product of the factors is never
/// formed here.
OpeDesignMatrices ope_design_matrix(const OpeSpec& spec, const Eigen::MatrixXd& design);

/// Conjugate posterior for (beta, sigma^2) at fixed correlation lengths.
struct OpeGls {
  Eigen::VectorXd beta_mean;
  Eigen::MatrixXd beta_cov;   // V_n: posterior covariance factor (beta | sigma^2 is N(mean, sigma^2 V_n))
  double sigma2 = 0.0;        // posterior-mode estimate rate_n / (shape_n + 1)
  double shape_n = 0.0;
  double rate_n = 0.0;
  double log_marginal = std::numeric_limits<double>::quiet_NaN();  // NaN in the flat limit
};

OpeGls ope_gls(const OpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
               const OpeTheta& theta);

/// Marginal log likelihood with beta and sigma^2 integrated out (requires a
/// proper prior: precision > 0).
double ope_log_marginal(const OpeSpec& spec, const Eigen::MatrixXd& design,
                        const Tensor& outputs, const OpeTheta& theta);

struct OpeFit {
  OpeSpec spec;
  Eigen::MatrixXd design;                  // scaled training inputs
  OpeTheta theta;
  OpeGls posterior;
  KernelMatrix input_kernel;               // K at theta-hat
  std::vector<KernelMatrix> output_kernels;  // W_z at theta-hat (unit diagonal)
  OpeDesignMatrices regressors;
  Tensor residuals;                        // F - M(beta-hat), dims (n, r_1..r_m)
  OptimizerTrace trace;
  std::vector<std::string> warnings;

  double dof() const { return 2.0 * posterior.shape_n; }
  std::vector<int> output_sizes() const;
};

/// Maximum-likelihood estimation of all correlation lengths (bounded
/// quasi-Newton over log-theta with multistart), then the conjugate posterior
/// at the optimum.
OpeFit ope_fit(const OpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
               const FitOptions& options = {});

/// Posterior predictive at a batch of query inputs. Mean uses the posterior
/// mean of beta; variance adds the regression-uncertainty term from the beta
/// posterior covariance to kappa* sigma^2, with plug-in sigma^2.
PredictiveDistribution ope_predict(const OpeFit& fit, const Eigen::MatrixXd& queries);

}  // namespace tvgp
