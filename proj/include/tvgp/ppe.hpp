#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvgp/basis.hpp"
#include "tvgp/kernels.hpp"
#include "tvgp/optimize.hpp"
#include "tvgp/prediction.hpp"
#include "tvgp/tensor.hpp"

namespace tvgp {

/// Parallel partial emulator: one GP per output location, all sharing the
/// regressor set g_0 and the input correlation lengths, with per-location
/// coefficients and variances. No coregionalization input exists anywhere in
/// this module; per-location estimates cannot depend on one.
struct PpeSpec {
  Basis input_basis;
  LengthForm input_corr_form = LengthForm::per_coordinate;
  bool reml = true;  // n - v_0 variance divisor and restricted-likelihood terms;
                     // false selects plain maximum likelihood (divisor n)
};

/// Flat-prior GLS at fixed correlation lengths: one shared K factorization,
/// per-location coefficient and variance estimates.
struct PpeGls {
  Eigen::MatrixXd coeffs;   // v_0 x r, column per output location in vec order
  Eigen::VectorXd sigma2;   // per-location variance estimates
  std::vector<Eigen::Index> degenerate;  // constant-output locations (sigma2 = 0)
};

PpeGls ppe_gls(const PpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
               const Eigen::VectorXd& input_lengths);

/// Summed per-location profile log likelihood over the shared lengths
/// (coefficients profiled by GLS, variances by their closed form).
double ppe_profile_loglik(const PpeSpec& spec, const Eigen::MatrixXd& design,
                          const Tensor& outputs, const Eigen::VectorXd& input_lengths);

struct PpeFit {
  PpeSpec spec;
  Eigen::MatrixXd design;          // scaled training inputs
  Eigen::VectorXd theta;           // shared correlation lengths
  Tensor coeff_tensor;             // (r_1..r_m, v_0)
  Eigen::VectorXd sigma2;          // length r = prod r_z
  KernelMatrix input_kernel;
  Eigen::MatrixXd regressors;      // G_0, n x v_0
  Eigen::MatrixXd residual_matrix; // n x r
  Eigen::MatrixXd gram;            // G_0^T K^{-1} G_0
  std::vector<int> output_dims;
  std::vector<Eigen::Index> degenerate;
  OptimizerTrace trace;
  std::vector<std::string> warnings;
};

PpeFit ppe_fit(const PpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
               const FitOptions& options = {});

/// Per-location universal-kriging prediction; all locations share one
/// K^{-1} kappa(x) application per query.
PredictiveDistribution ppe_predict(const PpeFit& fit, const Eigen::MatrixXd& queries);

}  // namespace tvgp
