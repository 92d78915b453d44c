#include "tvgp/ope.hpp"

#include <cmath>
#include <stdexcept>

namespace tvgp {

namespace {

Eigen::MatrixXd kron_rect(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Applies k^{-1} along one tensor mode through the stored Cholesky.
Tensor solve_mode(const KernelMatrix& k, Tensor t, int mode) {
  using RowMajorMap =
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  const auto& dims = t.dims();
  const int d = dims[static_cast<size_t>(mode)];
  Eigen::Index outer = 1, inner = 1;
  for (int z = 0; z < mode; ++z) outer *= dims[static_cast<size_t>(z)];
  for (int z = mode + 1; z < t.order(); ++z) inner *= dims[static_cast<size_t>(z)];
  double* ptr = t.vec().data();
  for (Eigen::Index o = 0; o < outer; ++o) {
    RowMajorMap s(ptr + o * d * inner, d, inner);
    s = k.solve(Eigen::MatrixXd(s));
  }
  return t;
}

struct LikelihoodParts {
  std::vector<KernelMatrix> kernels;  // K, then W_z
  OpeDesignMatrices regressors;
  Eigen::MatrixXd precision;      // V_n^{-1} = lambda I + (x)_z G_z^T A_z^{-1} G_z
  Eigen::LLT<Eigen::MatrixXd> precision_llt;
  Eigen::VectorXd beta_mean;
  double quad = 0.0;              // y^T Omega^{-1} y
  double shape_n = 0.0, rate_n = 0.0;
  double log_det_omega = 0.0;
  Eigen::Index total = 0;         // N = n prod r_z
  Eigen::Index nbeta = 0;         // v = v_0 prod v_z
};

CorrelationSpec input_spec(const OpeSpec& spec, const Eigen::VectorXd& lengths) {
  CorrelationSpec c;
  c.form = spec.input_corr_form;
  c.lengths = lengths;
  return c;
}

CorrelationSpec output_spec(const OpeOutputDim& dim, double length) {
  CorrelationSpec c;
  c.form = dim.corr_form;
  c.lengths = Eigen::VectorXd::Constant(1, length);
  return c;
}

void check_shapes(const OpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
                  const OpeTheta& theta) {
  const int m = static_cast<int>(spec.output_dims.size());
  if (m < 1) throw std::invalid_argument("ope: at least one output dimension required");
  if (outputs.order() != m + 1)
    throw std::invalid_argument("ope: outputs order " + std::to_string(outputs.order()) +
                                " != 1 + output dims " + std::to_string(m));
  if (outputs.extent(0) != design.rows())
    throw std::invalid_argument("ope: outputs leading extent does not match design rows");
  for (int z = 0; z < m; ++z) {
    const auto& d = spec.output_dims[static_cast<size_t>(z)];
    if (d.corr_locations.size() != outputs.extent(z + 1))
      throw std::invalid_argument("ope: output dim " + std::to_string(z) +
                                  " has " + std::to_string(d.corr_locations.size()) +
                                  " locations but tensor extent " +
                                  std::to_string(outputs.extent(z + 1)));
    if (d.regressor_locations.size() != d.corr_locations.size())
      throw std::invalid_argument("ope: output dim " + std::to_string(z) +
                                  " regressor/correlation location counts differ");
  }
  if (theta.output_lengths.size() != m)
    throw std::invalid_argument("ope: expected one output length per output dimension");
}

// Everything the marginal likelihood and the conjugate posterior share.
LikelihoodParts assemble(const OpeSpec& spec, const Eigen::MatrixXd& design,
                         const Tensor& outputs, const OpeTheta& theta) {
  check_shapes(spec, design, outputs, theta);
  const int m = static_cast<int>(spec.output_dims.size());
  const double lambda = spec.prior.precision;
  if (lambda < 0.0) throw std::invalid_argument("ope: prior precision must be >= 0");

  LikelihoodParts parts;
  parts.regressors = ope_design_matrix(spec, design);

  parts.kernels.reserve(static_cast<size_t>(m) + 1);
  parts.kernels.push_back(build_kernel_matrix(design, input_spec(spec, theta.input_lengths)));
  for (int z = 0; z < m; ++z) {
    const auto& d = spec.output_dims[static_cast<size_t>(z)];
    parts.kernels.push_back(build_kernel_matrix(
        scalar_points(d.corr_locations), output_spec(d, theta.output_lengths[z])));
  }

  parts.total = outputs.size();
  parts.log_det_omega = 0.0;
  for (const auto& k : parts.kernels)
    parts.log_det_omega += (static_cast<double>(parts.total) / k.n()) * k.log_det();

  // Per-factor whitened regressors: G^T A^{-1} and G^T A^{-1} G.
  std::vector<Eigen::MatrixXd> gt_ainv;  // v_z x d_z
  std::vector<Eigen::MatrixXd> gram;     // v_z x v_z
  gt_ainv.reserve(static_cast<size_t>(m) + 1);
  gram.reserve(static_cast<size_t>(m) + 1);
  auto add_factor = [&](const Eigen::MatrixXd& g, const KernelMatrix& k) {
    Eigen::MatrixXd w = k.solve(g);  // A^{-1} G
    gt_ainv.push_back(w.transpose());
    gram.push_back(g.transpose() * w);
  };
  add_factor(parts.regressors.g0, parts.kernels[0]);
  for (int z = 0; z < m; ++z)
    add_factor(parts.regressors.gz[static_cast<size_t>(z)],
               parts.kernels[static_cast<size_t>(z) + 1]);

  parts.nbeta = 1;
  for (const auto& g : gram) parts.nbeta *= g.rows();

  // b = G^T Omega^{-1} y via mode products; q = y^T Omega^{-1} y via factor solves.
  Tensor bt = outputs;
  for (int z = 0; z <= m; ++z) bt = mode_product(bt, gt_ainv[static_cast<size_t>(z)], z);
  const Eigen::VectorXd bvec = bt.vec();

  Tensor qt = outputs;
  for (int z = 0; z <= m; ++z) qt = solve_mode(parts.kernels[static_cast<size_t>(z)], qt, z);
  parts.quad = outputs.vec().dot(qt.vec());

  KroneckerMatrix gram_kron{std::vector<Eigen::MatrixXd>(gram.begin(), gram.end())};
  parts.precision = gram_kron.dense();
  if (lambda > 0.0)
    parts.precision.diagonal().array() += lambda;
  parts.precision_llt.compute(parts.precision);
  if (parts.precision_llt.info() != Eigen::Success)
    throw std::runtime_error(
        lambda > 0.0
            ? "ope: posterior precision factorization failed"
            : "ope: rank-deficient regressors under the flat prior (G^T Omega^{-1} G singular)");

  parts.beta_mean = parts.precision_llt.solve(bvec);
  parts.shape_n = spec.prior.shape + 0.5 * static_cast<double>(parts.total);
  parts.rate_n = spec.prior.rate + 0.5 * (parts.quad - parts.beta_mean.dot(bvec));
  return parts;
}

}  // namespace

std::vector<int> OpeFit::output_sizes() const {
  std::vector<int> r;
  for (const auto& d : spec.output_dims) r.push_back(d.size());
  return r;
}

OpeDesignMatrices ope_design_matrix(const OpeSpec& spec, const Eigen::MatrixXd& design) {
  OpeDesignMatrices out;
  out.g0 = spec.input_basis.matrix(design);
  for (const auto& d : spec.output_dims)
    out.gz.push_back(d.basis.matrix(scalar_points(d.regressor_locations)));
  return out;
}

OpeGls ope_gls(const OpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
               const OpeTheta& theta) {
  LikelihoodParts parts = assemble(spec, design, outputs, theta);
  OpeGls out;
  out.beta_mean = parts.beta_mean;
  out.beta_cov = parts.precision_llt.solve(
      Eigen::MatrixXd::Identity(parts.nbeta, parts.nbeta));
  out.shape_n = parts.shape_n;
  out.rate_n = parts.rate_n;
  out.sigma2 = parts.rate_n / (parts.shape_n + 1.0);
  if (spec.prior.precision > 0.0) {
    const double v = static_cast<double>(parts.nbeta);
    const double n = static_cast<double>(parts.total);
    double logdet_prec = 0.0;
    for (Eigen::Index i = 0; i < parts.nbeta; ++i)
      logdet_prec += 2.0 * std::log(parts.precision_llt.matrixLLT()(i, i));
    out.log_marginal = -0.5 * n * std::log(2.0 * M_PI) - 0.5 * parts.log_det_omega -
                       0.5 * logdet_prec + 0.5 * v * std::log(spec.prior.precision) +
                       spec.prior.shape * std::log(spec.prior.rate) -
                       parts.shape_n * std::log(parts.rate_n) + std::lgamma(parts.shape_n) -
                       std::lgamma(spec.prior.shape);
  }
  return out;
}

double ope_log_marginal(const OpeSpec& spec, const Eigen::MatrixXd& design,
                        const Tensor& outputs, const OpeTheta& theta) {
  if (spec.prior.precision <= 0.0)
    throw std::invalid_argument("ope_log_marginal: requires a proper prior (precision > 0)");
  return ope_gls(spec, design, outputs, theta).log_marginal;
}

OpeFit ope_fit(const OpeSpec& spec, const Eigen::MatrixXd& design, const Tensor& outputs,
               const FitOptions& options) {
  if (design.rows() < 2) throw std::invalid_argument("ope_fit: need at least two runs");
  if (spec.prior.precision <= 0.0)
    throw std::invalid_argument("ope_fit: maximum likelihood requires a proper prior");

  const int p = static_cast<int>(design.cols());
  const int m = static_cast<int>(spec.output_dims.size());

  auto unpack = [&](const Eigen::VectorXd& log_theta) {
    OpeTheta t;
    t.input_lengths = log_theta.head(p).array().exp();
    t.output_lengths = log_theta.tail(m).array().exp();
    return t;
  };
  auto objective = [&](const Eigen::VectorXd& log_theta) {
    return -ope_log_marginal(spec, design, outputs, unpack(log_theta));
  };

  OpeFit fit;
  fit.spec = spec;
  fit.design = design;

  LbfgsResult best = multistart_minimize(objective, p + m, options, &fit.trace);
  fit.theta = unpack(best.x);

  LikelihoodParts parts = assemble(spec, design, outputs, fit.theta);
  fit.input_kernel = parts.kernels[0];
  fit.output_kernels.assign(parts.kernels.begin() + 1, parts.kernels.end());
  fit.regressors = parts.regressors;

  OpeGls posterior;
  posterior.beta_mean = parts.beta_mean;
  posterior.beta_cov =
      parts.precision_llt.solve(Eigen::MatrixXd::Identity(parts.nbeta, parts.nbeta));
  posterior.shape_n = parts.shape_n;
  posterior.rate_n = parts.rate_n;
  posterior.sigma2 = parts.rate_n / (parts.shape_n + 1.0);
  posterior.log_marginal = -best.f;
  fit.posterior = posterior;

  // Residual stack F - M(beta-hat) via the factored mean.
  std::vector<int> beta_dims;
  beta_dims.push_back(spec.input_basis.size());
  for (const auto& d : spec.output_dims) beta_dims.push_back(d.basis.size());
  Tensor beta_t(beta_dims, posterior.beta_mean);
  Tensor mean = mode_product(beta_t, parts.regressors.g0, 0);
  for (int z = 0; z < m; ++z)
    mean = mode_product(mean, parts.regressors.gz[static_cast<size_t>(z)], z + 1);
  fit.residuals = outputs - mean;

  Eigen::Index vtotal = spec.input_basis.size();
  for (const auto& d : spec.output_dims) vtotal *= d.basis.size();
  if (vtotal > outputs.size())
    fit.warnings.push_back("regression dimension " + std::to_string(vtotal) +
                           " exceeds data size " + std::to_string(outputs.size()) +
                           "; the prior carries the identification");
  return fit;
}

PredictiveDistribution ope_predict(const OpeFit& fit, const Eigen::MatrixXd& queries) {
  if (queries.cols() != fit.design.cols())
    throw std::invalid_argument("ope_predict: query dimension mismatch");
  const int m = static_cast<int>(fit.spec.output_dims.size());
  const Eigen::Index nq = queries.rows();
  const int v0 = fit.spec.input_basis.size();

  // Mean: regression surface at the queries plus the residual-process update.
  std::vector<int> beta_dims;
  beta_dims.push_back(v0);
  for (const auto& d : fit.spec.output_dims) beta_dims.push_back(d.basis.size());
  Tensor beta_t(beta_dims, fit.posterior.beta_mean);

  const Eigen::MatrixXd g0_new = fit.spec.input_basis.matrix(queries);
  Tensor mean = mode_product(beta_t, g0_new, 0);
  for (int z = 0; z < m; ++z)
    mean = mode_product(mean, fit.regressors.gz[static_cast<size_t>(z)], z + 1);

  const Eigen::MatrixXd cross =
      build_cross(fit.design, queries, input_spec(fit.spec, fit.theta.input_lengths));
  const Eigen::MatrixXd weights = fit.input_kernel.solve(cross);  // n x nq
  mean += mode_product(fit.residuals, weights.transpose(), 0);

  // kappa* and the regression-uncertainty direction u = g0(x) - G0^T K^{-1} kappa(x).
  Eigen::VectorXd kstar(nq);
  Eigen::MatrixXd u = g0_new.transpose() - fit.regressors.g0.transpose() * weights;  // v0 x nq
  for (Eigen::Index j = 0; j < nq; ++j) {
    double k = 1.0 - cross.col(j).dot(weights.col(j));
    if (k < -1e-6)
      throw std::runtime_error("ope_predict: negative posterior correlation " +
                               std::to_string(k));
    kstar[j] = std::min(std::max(k, 0.0), 1.0);
  }

  // Output-location blocks: Gout = G_1 (x) ... (x) G_m and the diagonal of
  // W_1 (x) ... (x) W_m.
  Eigen::MatrixXd gout = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd wdiag = Eigen::VectorXd::Ones(1);
  for (int z = 0; z < m; ++z) {
    gout = kron_rect(gout, fit.regressors.gz[static_cast<size_t>(z)]);
    const Eigen::VectorXd dz = fit.output_kernels[static_cast<size_t>(z)].values.diagonal();
    Eigen::VectorXd next(wdiag.size() * dz.size());
    for (Eigen::Index i = 0; i < wdiag.size(); ++i)
      next.segment(i * dz.size(), dz.size()) = wdiag[i] * dz;
    wdiag = next;
  }
  const Eigen::Index r = gout.rows();
  const Eigen::Index vout = gout.cols();

  // Regression variance via the (u (x) gout_i)^T V_n (u (x) gout_i) contraction.
  Tensor variance(mean.dims());
  const Eigen::MatrixXd& vn = fit.posterior.beta_cov;
  const double sigma2 = fit.posterior.sigma2;
  for (Eigen::Index j = 0; j < nq; ++j) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(vout, vout);
    for (int a = 0; a < v0; ++a)
      for (int b = 0; b < v0; ++b)
        q += u(a, j) * u(b, j) * vn.block(a * vout, b * vout, vout, vout);
    const Eigen::VectorXd reg_var = ((gout * q).array() * gout.array()).rowwise().sum();
    for (Eigen::Index i = 0; i < r; ++i)
      variance.vec()[j * r + i] = sigma2 * (kstar[j] * wdiag[i] + std::max(reg_var[i], 0.0));
  }

  PredictiveDistribution out;
  out.mean = std::move(mean);
  out.variance = std::move(variance);
  out.kstar = std::move(kstar);
  out.emulator = "ope";
  out.dof = fit.dof();
  return out;
}

}  // namespace tvgp
