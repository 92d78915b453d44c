#include "tvgp/ppe.hpp"

#include <cmath>
#include <stdexcept>

namespace tvgp {

namespace {

using ConstRowMajorMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

CorrelationSpec input_spec(const PpeSpec& spec, const Eigen::VectorXd& lengths) {
  CorrelationSpec c;
  c.form = spec.input_corr_form;
  c.lengths = lengths;
  return c;
}

// Views the training stack (n, r_1..r_m) as an n x r matrix, runs by rows.
ConstRowMajorMap as_matrix(const Tensor& outputs) {
  const Eigen::Index n = outputs.extent(0);
  return ConstRowMajorMap(outputs.vec().data(), n, outputs.size() / n);
}

struct GlsParts {
  KernelMatrix kernel;
  Eigen::MatrixXd g0;        // n x v0
  Eigen::MatrixXd gram;      // G0^T K^{-1} G0
  Eigen::LLT<Eigen::MatrixXd> gram_llt;
  Eigen::MatrixXd coeffs;    // v0 x r
  Eigen::MatrixXd residual;  // n x r
  Eigen::VectorXd rss;       // per-location residual quadratic form
  Eigen::VectorXd sigma2;
  std::vector<Eigen::Index> degenerate;
};

GlsParts gls_parts(const PpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
                   const Eigen::VectorXd& lengths) {
  const Eigen::Index n = design.rows();
  const int v0 = spec.input_basis.size();
  if (outputs.order() < 2)
    throw std::invalid_argument("ppe: outputs must carry a leading run mode");
  if (outputs.extent(0) != n)
    throw std::invalid_argument("ppe: outputs leading extent does not match design rows");
  if (n <= v0)
    throw std::invalid_argument("ppe: needs n > v_0 (" + std::to_string(n) + " runs, " +
                                std::to_string(v0) + " regressors)");

  GlsParts parts;
  parts.kernel = build_kernel_matrix(design, input_spec(spec, lengths));
  parts.g0 = spec.input_basis.matrix(design);

  const Eigen::MatrixXd kinv_g0 = parts.kernel.solve(parts.g0);  // n x v0
  parts.gram = parts.g0.transpose() * kinv_g0;
  parts.gram_llt.compute(parts.gram);
  if (parts.gram_llt.info() != Eigen::Success)
    throw std::runtime_error("ppe: G0^T K^{-1} G0 is rank deficient");

  const Eigen::MatrixXd y = as_matrix(outputs);  // n x r
  parts.coeffs = parts.gram_llt.solve(kinv_g0.transpose() * y);
  parts.residual = y - parts.g0 * parts.coeffs;

  const Eigen::MatrixXd kinv_res = parts.kernel.solve(parts.residual);
  parts.rss = (parts.residual.array() * kinv_res.array()).colwise().sum();

  const double divisor = spec.reml ? static_cast<double>(n - v0) : static_cast<double>(n);
  const Eigen::Index r = y.cols();
  parts.sigma2.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double span = y.col(i).maxCoeff() - y.col(i).minCoeff();
    const double scale = std::max(1.0, y.col(i).cwiseAbs().maxCoeff());
    if (span <= 1e-13 * scale) {
      parts.sigma2[i] = 0.0;
      parts.degenerate.push_back(i);
    } else {
      // Exactly-fit locations carry round-off residuals only; report zero.
      const double rss_floor = static_cast<double>(n) * 1e-24 * scale * scale;
      parts.sigma2[i] =
          parts.rss[i] <= rss_floor ? 0.0 : std::max(parts.rss[i], 0.0) / divisor;
    }
  }
  return parts;
}

}  // namespace

PpeGls ppe_gls(const PpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
               const Eigen::VectorXd& input_lengths) {
  GlsParts parts = gls_parts(spec, design, outputs, input_lengths);
  PpeGls out;
  out.coeffs = std::move(parts.coeffs);
  out.sigma2 = std::move(parts.sigma2);
  out.degenerate = std::move(parts.degenerate);
  return out;
}

double ppe_profile_loglik(const PpeSpec& spec, const Eigen::MatrixXd& design,
                          const Tensor& outputs, const Eigen::VectorXd& input_lengths) {
  GlsParts parts = gls_parts(spec, design, outputs, input_lengths);
  const double n = static_cast<double>(design.rows());
  const double v0 = static_cast<double>(spec.input_basis.size());

  // Degenerate locations carry no information about the lengths.
  double sum_log_s2 = 0.0;
  Eigen::Index active = 0;
  std::vector<bool> is_degen(static_cast<size_t>(parts.sigma2.size()), false);
  for (Eigen::Index i : parts.degenerate) is_degen[static_cast<size_t>(i)] = true;
  for (Eigen::Index i = 0; i < parts.sigma2.size(); ++i) {
    if (is_degen[static_cast<size_t>(i)]) continue;
    sum_log_s2 += std::log(std::max(parts.sigma2[i], 1e-300));
    ++active;
  }
  const double r_eff = static_cast<double>(active);

  double loglik;
  if (spec.reml) {
    double logdet_gram = 0.0;
    for (Eigen::Index i = 0; i < parts.gram.rows(); ++i)
      logdet_gram += 2.0 * std::log(parts.gram_llt.matrixLLT()(i, i));
    loglik = -0.5 * (n - v0) * sum_log_s2 - 0.5 * r_eff * parts.kernel.log_det() -
             0.5 * r_eff * logdet_gram;
  } else {
    loglik = -0.5 * n * sum_log_s2 - 0.5 * r_eff * parts.kernel.log_det();
  }
  return loglik;
}

PpeFit ppe_fit(const PpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
               const FitOptions& options) {
  const int p = static_cast<int>(design.cols());

  auto objective = [&](const Eigen::VectorXd& log_theta) {
    return -ppe_profile_loglik(spec, design, outputs, log_theta.array().exp());
  };

  PpeFit fit;
  fit.spec = spec;
  fit.design = design;
  LbfgsResult best = multistart_minimize(objective, p, options, &fit.trace);
  fit.theta = best.x.array().exp();

  GlsParts parts = gls_parts(spec, design, outputs, fit.theta);
  fit.input_kernel = std::move(parts.kernel);
  fit.regressors = std::move(parts.g0);
  fit.sigma2 = std::move(parts.sigma2);
  fit.residual_matrix = std::move(parts.residual);
  fit.gram = std::move(parts.gram);
  fit.degenerate = std::move(parts.degenerate);
  fit.output_dims.assign(outputs.dims().begin() + 1, outputs.dims().end());
  for (Eigen::Index i : fit.degenerate)
    fit.warnings.push_back("output location " + std::to_string(i) +
                           " is constant across all runs; sigma2 set to 0");

  // Coefficient tensor (r_1..r_m, v_0): location index slow, coefficient fast.
  const int v0 = spec.input_basis.size();
  const Eigen::Index r = fit.sigma2.size();
  std::vector<int> bdims = fit.output_dims;
  bdims.push_back(v0);
  Eigen::VectorXd bdata(r * v0);
  for (Eigen::Index i = 0; i < r; ++i) bdata.segment(i * v0, v0) = parts.coeffs.col(i);
  fit.coeff_tensor = Tensor(bdims, std::move(bdata));
  return fit;
}

PredictiveDistribution ppe_predict(const PpeFit& fit, const Eigen::MatrixXd& queries) {
  if (queries.cols() != fit.design.cols())
    throw std::invalid_argument("ppe_predict: query dimension mismatch");
  const Eigen::Index nq = queries.rows();
  const Eigen::Index r = fit.sigma2.size();
  const int v0 = fit.spec.input_basis.size();

  // Re-derive the v0 x r coefficient matrix from the stored tensor.
  Eigen::MatrixXd coeffs(v0, r);
  for (Eigen::Index i = 0; i < r; ++i)
    coeffs.col(i) = fit.coeff_tensor.vec().segment(i * v0, v0);

  const Eigen::MatrixXd g0_new = fit.spec.input_basis.matrix(queries);  // nq x v0
  const Eigen::MatrixXd cross =
      build_cross(fit.design, queries, input_spec(fit.spec, fit.theta));
  const Eigen::MatrixXd weights = fit.input_kernel.solve(cross);  // n x nq

  const Eigen::MatrixXd mean_mat =
      g0_new * coeffs + weights.transpose() * fit.residual_matrix;  // nq x r

  // kappa* and the universal-kriging inflation u^T (G0^T K^{-1} G0)^{-1} u
  // with u = g0(x) - G0^T K^{-1} kappa(x).
  const Eigen::MatrixXd u = g0_new.transpose() - fit.regressors.transpose() * weights;
  Eigen::LLT<Eigen::MatrixXd> gram_llt(fit.gram);
  if (gram_llt.info() != Eigen::Success)
    throw std::runtime_error("ppe_predict: stored G0^T K^{-1} G0 failed to factorize");

  Eigen::VectorXd kstar(nq), inflation(nq);
  for (Eigen::Index j = 0; j < nq; ++j) {
    double k = 1.0 - cross.col(j).dot(weights.col(j));
    if (k < -1e-6)
      throw std::runtime_error("ppe_predict: negative posterior correlation " +
                               std::to_string(k));
    kstar[j] = std::min(std::max(k, 0.0), 1.0);
    inflation[j] = std::max(u.col(j).dot(gram_llt.solve(u.col(j)).eval()), 0.0);
  }

  std::vector<int> dims = fit.output_dims;
  dims.insert(dims.begin(), static_cast<int>(nq));
  Tensor mean(dims), variance(dims);
  for (Eigen::Index j = 0; j < nq; ++j) {
    mean.vec().segment(j * r, r) = mean_mat.row(j);
    variance.vec().segment(j * r, r) = (kstar[j] + inflation[j]) * fit.sigma2;
  }

  PredictiveDistribution out;
  out.mean = std::move(mean);
  out.variance = std::move(variance);
  out.kstar = std::move(kstar);
  out.emulator = "ppe";
  return out;
}

}  // namespace tvgp
