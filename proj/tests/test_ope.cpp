#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tvgp/ope.hpp"

using tvgp::Basis;
using tvgp::KroneckerMatrix;
using tvgp::LengthForm;
using tvgp::OpeOutputDim;
using tvgp::OpeSpec;
using tvgp::OpeTheta;
using tvgp::Tensor;

namespace {

OpeOutputDim output_dim(const Eigen::VectorXd& locations, Basis basis) {
  OpeOutputDim d;
  d.corr_locations = locations;
  d.regressor_locations = locations;
  d.basis = std::move(basis);
  return d;
}

// Small two-output-dimension spec over p inputs.
OpeSpec small_spec(int p, const Eigen::VectorXd& loc1, const Eigen::VectorXd& loc2) {
  OpeSpec spec;
  spec.input_basis = Basis::constant_linear(p);
  spec.output_dims.push_back(output_dim(loc1, Basis::constant_linear(1)));
  spec.output_dims.push_back(output_dim(loc2, Basis::constant_linear(1)));
  return spec;
}

OpeTheta theta_of(std::initializer_list<double> input, std::initializer_list<double> output) {
  OpeTheta t;
  t.input_lengths = Eigen::VectorXd::Map(input.begin(), static_cast<Eigen::Index>(input.size()));
  t.output_lengths =
      Eigen::VectorXd::Map(output.begin(), static_cast<Eigen::Index>(output.size()));
  return t;
}

// Rebuilds the dense covariance K (x) W_1 (x) W_2 exactly as the module does,
// jitter included, so the dense oracle conditions on the same matrix.
Eigen::MatrixXd dense_omega(const OpeSpec& spec, const Eigen::MatrixXd& design,
                            const OpeTheta& theta) {
  tvgp::CorrelationSpec in;
  in.form = spec.input_corr_form;
  in.lengths = theta.input_lengths;
  auto k = tvgp::build_kernel_matrix(design, in);
  Eigen::MatrixXd kd = k.values;
  kd.diagonal().array() += k.jitter_used;

  std::vector<Eigen::MatrixXd> blocks{kd};
  for (size_t z = 0; z < spec.output_dims.size(); ++z) {
    tvgp::CorrelationSpec out;
    out.form = spec.output_dims[z].corr_form;
    out.lengths = Eigen::VectorXd::Constant(1, theta.output_lengths[static_cast<Eigen::Index>(z)]);
    auto w = tvgp::build_kernel_matrix(tvgp::scalar_points(spec.output_dims[z].corr_locations),
                                       out);
    Eigen::MatrixXd wd = w.values;
    wd.diagonal().array() += w.jitter_used;
    blocks.push_back(wd);
  }
  return oracle::dense_kron(blocks);
}

Eigen::MatrixXd dense_regressors(const OpeSpec& spec, const Eigen::MatrixXd& design) {
  auto mats = tvgp::ope_design_matrix(spec, design);
  std::vector<Eigen::MatrixXd> blocks{mats.g0};
  for (const auto& g : mats.gz) blocks.push_back(g);
  return oracle::dense_kron(blocks);
}

Tensor mean_from_beta(const OpeSpec& spec, const Eigen::MatrixXd& design,
                      const Eigen::VectorXd& beta, const std::vector<int>& dims) {
  Eigen::VectorXd mean = dense_regressors(spec, design) * beta;
  return Tensor(dims, mean);
}

}  // namespace

TEST_CASE("design matrices evaluate the regressors row by row") {
  Eigen::MatrixXd design(2, 1);
  design << 0.0, 1.0;
  Eigen::VectorXd t(3);
  t << 0.0, 0.5, 1.0;

  OpeSpec spec;
  spec.input_basis = Basis::constant_linear(1);
  spec.output_dims.push_back(output_dim(t, Basis::constant_linear(1)));

  auto mats = tvgp::ope_design_matrix(spec, design);
  Eigen::MatrixXd g0_expect(2, 2);
  g0_expect << 1.0, 0.0, 1.0, 1.0;
  CHECK((mats.g0 - g0_expect).lpNorm<Eigen::Infinity>() == 0.0);

  Eigen::MatrixXd g2_expect(3, 2);
  g2_expect << 1.0, 0.0, 1.0, 0.5, 1.0, 1.0;
  CHECK((mats.gz[0] - g2_expect).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("the factored mean matches elementwise regressor evaluation") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd design = oracle::random_points(3, 2, rng);
  Eigen::VectorXd loc1 = Eigen::VectorXd::LinSpaced(2, -1.0, 1.0);
  Eigen::VectorXd loc2 = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
  OpeSpec spec = small_spec(2, loc1, loc2);

  const int v = 3 * 2 * 2;
  Eigen::VectorXd beta = oracle::random_matrix(v, 1, rng);
  Tensor mean = mean_from_beta(spec, design, beta, {3, 2, 3});

  for (int run = 0; run < 3; ++run) {
    Eigen::VectorXd g0 = spec.input_basis(design.row(run));
    for (int i1 = 0; i1 < 2; ++i1) {
      Eigen::VectorXd g1 =
          spec.output_dims[0].basis(Eigen::VectorXd::Constant(1, loc1[i1]));
      for (int i2 = 0; i2 < 3; ++i2) {
        Eigen::VectorXd g2 =
            spec.output_dims[1].basis(Eigen::VectorXd::Constant(1, loc2[i2]));
        Eigen::VectorXd g = oracle::dense_kron({g0, g1, g2});
        CHECK(mean.at({run, i1, i2}) == doctest::Approx(g.dot(beta)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("flat-prior GLS recovers noiseless coefficients") {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd design = oracle::random_points(6, 2, rng);
  Eigen::VectorXd loc1 = Eigen::VectorXd::LinSpaced(2, -1.0, 1.0);
  Eigen::VectorXd loc2 = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
  OpeSpec spec = small_spec(2, loc1, loc2);
  spec.prior.precision = 0.0;

  Eigen::VectorXd beta_true = oracle::random_matrix(12, 1, rng);
  Tensor outputs = mean_from_beta(spec, design, beta_true, {6, 2, 3});
  auto gls = tvgp::ope_gls(spec, design, outputs, theta_of({1.0, 1.0}, {0.7, 0.9}));
  CHECK((gls.beta_mean - beta_true).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("flat-prior GLS equals the dense Kronecker GLS oracle") {
  std::mt19937_64 rng(3);
  int done = 0;
  while (done < 12) {
    const int n = 3 + static_cast<int>(rng() % 3);  // 3..5
    const int r1 = 2 + static_cast<int>(rng() % 2), r2 = 2 + static_cast<int>(rng() % 2);
    Eigen::MatrixXd design = oracle::random_points(n, 2, rng);
    Eigen::VectorXd loc1 = Eigen::VectorXd::LinSpaced(r1, -1.0, 1.0);
    Eigen::VectorXd loc2 = Eigen::VectorXd::LinSpaced(r2, -1.0, 1.0);
    OpeSpec spec = small_spec(2, loc1, loc2);
    spec.prior.precision = 0.0;
    if (3 * 4 > n * r1 * r2) continue;  // keep the flat prior identifiable
    ++done;

    Tensor outputs = oracle::random_tensor({n, r1, r2}, rng);
    OpeTheta theta = theta_of({0.9, 1.2}, {0.8, 1.1});
    auto gls = tvgp::ope_gls(spec, design, outputs, theta);

    Eigen::VectorXd ref = oracle::dense_gls(dense_regressors(spec, design),
                                            dense_omega(spec, design, theta), outputs.vec());
    const double rel = (gls.beta_mean - ref).norm() / std::max(1.0, ref.norm());
    CHECK(rel < 1e-8);
  }
}

TEST_CASE("the coregionalization matters: changing one output length moves beta") {
  std::mt19937_64 rng(4);
  Eigen::MatrixXd design = oracle::random_points(5, 2, rng);
  OpeSpec spec = small_spec(2, Eigen::VectorXd::LinSpaced(3, -1.0, 1.0),
                            Eigen::VectorXd::LinSpaced(3, -1.0, 1.0));
  spec.prior.precision = 0.0;
  Tensor outputs = oracle::random_tensor({5, 3, 3}, rng);

  auto a = tvgp::ope_gls(spec, design, outputs, theta_of({1.0, 1.0}, {0.3, 0.8}));
  auto b = tvgp::ope_gls(spec, design, outputs, theta_of({1.0, 1.0}, {3.0, 0.8}));
  CHECK((a.beta_mean - b.beta_mean).norm() > 1e-4);
}

TEST_CASE("the proper posterior approaches the flat GLS as precision vanishes") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd design = oracle::random_points(6, 2, rng);
  OpeSpec spec = small_spec(2, Eigen::VectorXd::LinSpaced(2, -1.0, 1.0),
                            Eigen::VectorXd::LinSpaced(3, -1.0, 1.0));
  Tensor outputs = oracle::random_tensor({6, 2, 3}, rng);
  OpeTheta theta = theta_of({1.0, 1.0}, {0.7, 0.9});

  spec.prior.precision = 0.0;
  Eigen::VectorXd flat = tvgp::ope_gls(spec, design, outputs, theta).beta_mean;

  double prev_gap = std::numeric_limits<double>::infinity();
  for (double prec : {1e-2, 1e-4, 1e-6}) {
    spec.prior.precision = prec;
    const double gap = (tvgp::ope_gls(spec, design, outputs, theta).beta_mean - flat).norm();
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-5);
}

TEST_CASE("marginal likelihood is finite-difference smooth in log theta") {
  std::mt19937_64 rng(6);
  Eigen::MatrixXd design = oracle::random_points(8, 2, rng);
  OpeSpec spec = small_spec(2, Eigen::VectorXd::LinSpaced(3, -1.0, 1.0),
                            Eigen::VectorXd::LinSpaced(4, -1.0, 1.0));
  Tensor outputs = oracle::random_tensor({8, 3, 4}, rng);

  std::uniform_real_distribution<double> logt(std::log(0.3), std::log(3.0));
  const double h = 1e-3;
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd lt(4);
    for (int i = 0; i < 4; ++i) lt[i] = logt(rng);
    auto eval = [&](const Eigen::VectorXd& l) {
      return tvgp::ope_log_marginal(spec, design, outputs,
                                    theta_of({std::exp(l[0]), std::exp(l[1])},
                                             {std::exp(l[2]), std::exp(l[3])}));
    };
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd up = lt, down = lt;
      up[i] += h;
      down[i] -= h;
      const double curvature = std::abs(eval(up) - 2.0 * eval(lt) + eval(down)) / (h * h);
      CHECK(std::isfinite(curvature));
      CHECK(curvature < 1e6);
    }
  }
}

TEST_CASE("fit recovers the generating lengths and beats its starts") {
  std::mt19937_64 rng(7);
  const int n = 40, r1 = 3, r2 = 4;
  Eigen::MatrixXd design = oracle::random_points(n, 2, rng, 0.08);
  OpeSpec spec = small_spec(2, Eigen::VectorXd::LinSpaced(r1, -1.0, 1.0),
                            Eigen::VectorXd::LinSpaced(r2, -1.0, 1.0));

  OpeTheta truth = theta_of({0.8, 1.2}, {0.6, 1.0});
  const double sigma = 0.7;

  // Draw from the generating model: G beta + sigma L_K (x) L_W1 (x) L_W2 u.
  Eigen::VectorXd beta_true = oracle::random_matrix(12, 1, rng) * 0.5;
  Eigen::MatrixXd omega = dense_omega(spec, design, truth);
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  Eigen::VectorXd u = oracle::random_matrix(static_cast<int>(omega.rows()), 1, rng);
  Eigen::VectorXd y = dense_regressors(spec, design) * beta_true +
                      sigma * (Eigen::MatrixXd(llt.matrixL()) * u);
  Tensor outputs({n, r1, r2}, y);

  tvgp::FitOptions opts;
  opts.multistart = 4;
  opts.seed = 11;
  auto fit = tvgp::ope_fit(spec, design, outputs, opts);

  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(std::log(fit.theta.input_lengths[i]) -
                   std::log(truth.input_lengths[i])) < 0.5);
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(std::log(fit.theta.output_lengths[i]) -
                   std::log(truth.output_lengths[i])) < 0.5);

  // Optimizer contract: the returned objective dominates every start.
  for (const auto& start : fit.trace.starts)
    CHECK(fit.posterior.log_marginal >= -start.f0 - 1e-9);

  // Interpolation at the training inputs.
  auto pred = tvgp::ope_predict(fit, design);
  CHECK((pred.mean.vec() - outputs.vec()).lpNorm<Eigen::Infinity>() < 1e-4);
  CHECK((pred.variance.vec().array() >= 0.0).all());

  // Far from the data the emulator reverts to the regression surface.
  Eigen::MatrixXd far(1, 2);
  far << 40.0, -35.0;
  auto far_pred = tvgp::ope_predict(fit, far);
  CHECK(far_pred.kstar[0] == doctest::Approx(1.0).epsilon(1e-10));
  Tensor surface = mean_from_beta(spec, far, fit.posterior.beta_mean, {1, r1, r2});
  CHECK((far_pred.mean.vec() - surface.vec()).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((far_pred.variance.vec().array() >= fit.posterior.sigma2 * 0.99).all());
}

TEST_CASE("predictive variances are strictly positive away from the data") {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd design = oracle::random_points(10, 2, rng);
  OpeSpec spec = small_spec(2, Eigen::VectorXd::LinSpaced(2, -1.0, 1.0),
                            Eigen::VectorXd::LinSpaced(2, -1.0, 1.0));
  Tensor outputs = oracle::random_tensor({10, 2, 2}, rng);
  tvgp::FitOptions opts;
  opts.multistart = 2;
  opts.lbfgs.max_iters = 40;
  auto fit = tvgp::ope_fit(spec, design, outputs, opts);

  Eigen::MatrixXd queries = oracle::random_points(20, 2, rng);
  auto pred = tvgp::ope_predict(fit, queries);
  CHECK((pred.variance.vec().array() > 0.0).all());
  CHECK(std::isfinite(pred.dof));
}

TEST_CASE("flat prior with redundant regressors reports rank deficiency") {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd design = oracle::random_points(4, 1, rng);
  OpeSpec spec;
  spec.input_basis = Basis::custom(1, 2, [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(2);
    g << x[0], x[0];  // duplicated column
    return g;
  });
  spec.output_dims.push_back(
      output_dim(Eigen::VectorXd::LinSpaced(2, -1.0, 1.0), Basis::constant(1)));
  spec.prior.precision = 0.0;
  Tensor outputs = oracle::random_tensor({4, 2}, rng);
  CHECK_THROWS_WITH_AS(tvgp::ope_gls(spec, design, outputs, theta_of({1.0}, {1.0})),
                       doctest::Contains("rank"), std::runtime_error);

  // The proper prior regularizes the same problem.
  spec.prior.precision = 1.0;
  CHECK_NOTHROW(tvgp::ope_gls(spec, design, outputs, theta_of({1.0}, {1.0})));
}
