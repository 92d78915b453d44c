#include "tvgp/process.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tvgp {

namespace {

// Predict-path tolerance for numerically negative kappa* at interpolation
// points. sample() applies the stricter -1e-10 rule.
constexpr double kPredictCorrTol = 1e-6;

bool same_point(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return &x == &y || (x.size() == y.size() && (x.array() == y.array()).all());
}

}  // namespace

PosteriorState::PosteriorState(TvGpPrior prior, Eigen::MatrixXd design, Tensor outputs)
    : prior_(std::move(prior)),
      design_(std::move(design)),
      residuals_(std::move(outputs)),
      kernel_(build_kernel_matrix(design_, prior_.input_corr)) {
  output_dims_.assign(residuals_.dims().begin() + 1, residuals_.dims().end());
}

PosteriorState PosteriorState::condition(TvGpPrior prior, Eigen::MatrixXd design,
                                         Tensor outputs) {
  const Eigen::Index n = design.rows();
  if (n < 1) throw std::invalid_argument("condition: need at least one training run");
  if (outputs.order() < 2)
    throw std::invalid_argument("condition: outputs must carry a leading run mode");
  if (outputs.extent(0) != n)
    throw std::invalid_argument("condition: outputs leading extent " +
                                std::to_string(outputs.extent(0)) + " != design rows " +
                                std::to_string(n));
  if (!outputs.all_finite())
    throw std::invalid_argument("condition: non-finite training outputs");

  const auto sizes = prior.coregionalization.factor_sizes();
  if (static_cast<int>(sizes.size()) != outputs.order() - 1)
    throw std::invalid_argument("condition: coregionalization order " +
                                std::to_string(sizes.size()) + " != output tensor order " +
                                std::to_string(outputs.order() - 1));
  for (size_t z = 0; z < sizes.size(); ++z)
    if (sizes[z] != outputs.extent(static_cast<int>(z) + 1))
      throw std::invalid_argument("condition: coregionalization factor " + std::to_string(z) +
                                  " size does not match output extent");

  PosteriorState state(std::move(prior), std::move(design), std::move(outputs));

  if (state.prior_.mean) {
    for (int j = 0; j < state.n(); ++j) {
      Tensor m = state.prior_mean_at(state.design_.row(j));
      const Eigen::Index block = m.size();
      state.residuals_.vec().segment(static_cast<Eigen::Index>(j) * block, block) -= m.vec();
    }
  }

  state.coreg_chol_.reserve(state.prior_.coregionalization.order());
  for (int z = 0; z < state.prior_.coregionalization.order(); ++z) {
    const auto& f = state.prior_.coregionalization.factors()[static_cast<size_t>(z)];
    Eigen::MatrixXd sym = 0.5 * (f + f.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() != Eigen::Success) {
      // PSD-but-singular factors are admissible priors; retry with a tiny shift.
      sym.diagonal().array() += 1e-12 * std::max(1.0, sym.diagonal().mean());
      llt.compute(sym);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("condition: coregionalization factor " + std::to_string(z) +
                                 " is not positive semidefinite");
    }
    state.coreg_chol_.push_back(llt.matrixL());
  }
  return state;
}

Tensor PosteriorState::prior_mean_at(const Eigen::VectorXd& x) const {
  if (!prior_.mean) return Tensor(output_dims_);
  Tensor m = prior_.mean(x);
  if (m.dims() != output_dims_)
    throw std::invalid_argument("prior mean tensor extents do not match outputs");
  return m;
}

Eigen::VectorXd PosteriorState::kappa_vector(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd q(1, x.size());
  q.row(0) = x;
  return build_cross(design_, q, prior_.input_corr).col(0);
}

Tensor PosteriorState::predict_mean(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd q(1, x.size());
  q.row(0) = x;
  return predict_mean_batch(q).squeeze_leading();
}

Tensor PosteriorState::predict_mean_batch(const Eigen::MatrixXd& queries) const {
  if (queries.cols() != design_.cols())
    throw std::invalid_argument("predict: query dimension " + std::to_string(queries.cols()) +
                                " != training dimension " + std::to_string(design_.cols()));
  const Eigen::MatrixXd cross = build_cross(design_, queries, prior_.input_corr);
  const Eigen::MatrixXd weights = kernel_.solve(cross);  // n x n'
  Tensor out = mode_product(residuals_, weights.transpose(), 0);
  if (prior_.mean) {
    const Eigen::Index block = out.size() / queries.rows();
    for (Eigen::Index j = 0; j < queries.rows(); ++j)
      out.vec().segment(j * block, block) += prior_mean_at(queries.row(j)).vec();
  }
  return out;
}

double PosteriorState::posterior_corr_raw(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& x2) const {
  const Eigen::VectorXd ka = kappa_vector(x);
  const Eigen::VectorXd kb = same_point(x, x2) ? ka : kappa_vector(x2);
  const double prior_corr = correlation(prior_.input_corr, x, x2);
  return prior_corr - ka.dot(kernel_.solve(kb));
}

double PosteriorState::posterior_corr(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& x2) const {
  double v = posterior_corr_raw(x, x2);
  if (same_point(x, x2)) {
    if (v < -kPredictCorrTol)
      throw std::runtime_error("posterior_corr: variance " + std::to_string(v) +
                               " below numerical tolerance; kernel conditioning failure");
    const double prior_var = correlation(prior_.input_corr, x, x);
    v = std::min(std::max(v, 0.0), prior_var);
  }
  return v;
}

std::pair<double, const KroneckerMatrix*> PosteriorState::predict_cov(
    const Eigen::VectorXd& x, const Eigen::VectorXd& x2) const {
  return {posterior_corr(x, x2), &prior_.coregionalization};
}

Tensor PosteriorState::sample(const Eigen::VectorXd& x, std::uint64_t seed) const {
  double kstar = posterior_corr_raw(x, x);
  if (kstar < -1e-10)
    throw std::runtime_error("sample: negative predictive variance " + std::to_string(kstar) +
                             " beyond clamping tolerance");
  kstar = std::max(kstar, 0.0);

  Tensor mean = predict_mean(x);
  if (kstar == 0.0) return mean;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd u(mean.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = gauss(rng);

  Tensor t(output_dims_, u);
  for (size_t z = 0; z < coreg_chol_.size(); ++z)
    t = mode_product(t, coreg_chol_[z], static_cast<int>(z));
  mean.vec() += std::sqrt(kstar) * t.vec();
  return mean;
}

}  // namespace tvgp
