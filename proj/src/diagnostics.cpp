#include "tvgp/diagnostics.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tvgp {

namespace {

void check_sizes(const Eigen::VectorXd& truths, const Eigen::VectorXd& means) {
  if (truths.size() != means.size() || truths.size() < 1)
    throw std::invalid_argument("diagnostics: input lengths differ or are empty");
}

void check_variances(const Eigen::VectorXd& variances) {
  for (Eigen::Index i = 0; i < variances.size(); ++i)
    if (!(variances[i] > 0.0))
      throw std::invalid_argument("diagnostics: nonpositive variance at point " +
                                  std::to_string(i));
}

MetricSet compute_metrics(const Eigen::VectorXd& truths, const Eigen::VectorXd& means,
                          const Eigen::VectorXd& variances_raw) {
  MetricSet m;
  m.count = truths.size();
  Eigen::VectorXd variances = variances_raw;
  for (Eigen::Index i = 0; i < variances.size(); ++i)
    if (variances[i] < kVarianceFloor) {
      variances[i] = kVarianceFloor;
      ++m.floored;
    }
  m.maspe = maspe(truths, means, variances);
  m.rmspe = rmspe(truths, means);
  m.mean_sq_std_err =
      ((truths - means).array().square() / variances.array()).mean();
  m.mean_log_var = variances.array().log().mean();
  m.mges = -m.mean_sq_std_err - m.mean_log_var;
  m.mges_scaled = m.mges / 1e3;
  return m;
}

}  // namespace

double maspe(const Eigen::VectorXd& truths, const Eigen::VectorXd& means,
             const Eigen::VectorXd& variances) {
  check_sizes(truths, means);
  if (variances.size() != truths.size())
    throw std::invalid_argument("maspe: variance length mismatch");
  check_variances(variances);
  return ((truths - means).array().abs() / variances.array().sqrt()).mean();
}

double rmspe(const Eigen::VectorXd& truths, const Eigen::VectorXd& means) {
  check_sizes(truths, means);
  return std::sqrt((truths - means).array().square().mean());
}

double mges(const Eigen::VectorXd& truths, const Eigen::VectorXd& means,
            const Eigen::VectorXd& variances) {
  check_sizes(truths, means);
  if (variances.size() != truths.size())
    throw std::invalid_argument("mges: variance length mismatch");
  check_variances(variances);
  return -(((truths - means).array().square() / variances.array()) +
           variances.array().log())
              .mean();
}

DiagnosticReport sample_diag_points(const PredictiveDistribution& pred, const Tensor& truth,
                                    long count, std::uint64_t seed) {
  if (pred.mean.dims() != truth.dims())
    throw std::invalid_argument("sample_diag_points: prediction/truth extents differ");
  const Eigen::Index total = truth.size();
  if (count < 1 || count > total)
    throw std::invalid_argument("sample_diag_points: count " + std::to_string(count) +
                                " outside [1, " + std::to_string(total) + "]");

  DiagnosticReport report;
  report.runs = truth.extent(0);
  report.sample_count = count;
  report.sample_seed = seed;
  report.full = compute_metrics(truth.vec(), pred.mean.vec(), pred.variance.vec());

  // Without-replacement sample via a partial Fisher-Yates prefix.
  std::vector<Eigen::Index> cells(static_cast<size_t>(total));
  std::iota(cells.begin(), cells.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (long k = 0; k < count; ++k) {
    std::uniform_int_distribution<Eigen::Index> pick(k, total - 1);
    std::swap(cells[static_cast<size_t>(k)], cells[static_cast<size_t>(pick(rng))]);
  }

  Eigen::VectorXd t(count), mu(count), var(count);
  report.points.reserve(static_cast<size_t>(count));
  const auto& dims = truth.dims();
  for (long k = 0; k < count; ++k) {
    const Eigen::Index cell = cells[static_cast<size_t>(k)];
    t[k] = truth.vec()[cell];
    mu[k] = pred.mean.vec()[cell];
    var[k] = pred.variance.vec()[cell];

    DiagnosticPoint pt;
    Eigen::Index rest = cell;
    std::vector<int> idx(dims.size());
    for (int z = static_cast<int>(dims.size()) - 1; z >= 0; --z) {
      idx[static_cast<size_t>(z)] = static_cast<int>(rest % dims[static_cast<size_t>(z)]);
      rest /= dims[static_cast<size_t>(z)];
    }
    pt.run = idx[0];
    pt.index.assign(idx.begin() + 1, idx.end());
    pt.truth = t[k];
    pt.mean = mu[k];
    pt.variance = std::max(var[k], kVarianceFloor);
    pt.std_error = (t[k] - mu[k]) / std::sqrt(pt.variance);
    report.points.push_back(std::move(pt));
  }
  report.sampled = compute_metrics(t, mu, var);
  return report;
}

}  // namespace tvgp
