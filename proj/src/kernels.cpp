#include "tvgp/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace tvgp {

void CorrelationSpec::validate() const {
  if (lengths.size() == 0)
    throw std::invalid_argument("CorrelationSpec: at least one correlation length required");
  if ((lengths.array() <= 0.0).any())
    throw std::invalid_argument("CorrelationSpec: correlation lengths must be positive");
  if (scale && *scale <= 0.0)
    throw std::invalid_argument("CorrelationSpec: scale must be positive");
}

double correlation(const CorrelationSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  spec.validate();
  if (x.size() != y.size())
    throw std::invalid_argument("correlation: point dimensions differ (" +
                                std::to_string(x.size()) + " vs " + std::to_string(y.size()) +
                                ")");
  double expo = 0.0;
  switch (spec.form) {
    case LengthForm::per_coordinate: {
      if (spec.lengths.size() != x.size())
        throw std::invalid_argument("correlation: expected " + std::to_string(x.size()) +
                                    " correlation lengths, got " +
                                    std::to_string(spec.lengths.size()));
      for (Eigen::Index h = 0; h < x.size(); ++h) {
        const double r = (x[h] - y[h]) / spec.lengths[h];
        expo += r * r;
      }
      break;
    }
    case LengthForm::sq_distance_divisor: {
      if (spec.lengths.size() != 1)
        throw std::invalid_argument(
            "correlation: sq_distance_divisor form takes a single length");
      expo = (x - y).squaredNorm() / spec.lengths[0];
      break;
    }
  }
  const double value = std::exp(-expo);
  return spec.scale ? *spec.scale * value : value;
}

KernelMatrix build_kernel_matrix(const Eigen::MatrixXd& points, const CorrelationSpec& spec) {
  spec.validate();
  const Eigen::Index n = points.rows();
  if (n < 1) throw std::invalid_argument("build_kernel_matrix: need at least one point");

  KernelMatrix out;
  out.values.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j, j) = correlation(spec, points.row(j), points.row(j));
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const double v = correlation(spec, points.row(j), points.row(k));
      out.values(j, k) = v;
      out.values(k, j) = v;
    }
  }

  const double mean_diag = out.values.diagonal().mean();
  const double cap = 1e-4 * mean_diag;
  double jitter = 0.0;
  while (true) {
    Eigen::MatrixXd shifted = out.values;
    if (jitter > 0.0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      out.chol = llt.matrixL();
      out.jitter_used = jitter;
      return out;
    }
    if (jitter >= cap) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.values, Eigen::EigenvaluesOnly);
      throw std::runtime_error(
          "build_kernel_matrix: Cholesky failed at jitter cap " + std::to_string(cap) +
          " (smallest eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    jitter = (jitter == 0.0) ? 1e-10 : std::min(jitter * 10.0, cap);
  }
}

Eigen::MatrixXd build_cross(const Eigen::MatrixXd& points, const Eigen::MatrixXd& new_points,
                            const CorrelationSpec& spec) {
  spec.validate();
  if (points.cols() != new_points.cols())
    throw std::invalid_argument("build_cross: point dimensions differ");
  Eigen::MatrixXd out(points.rows(), new_points.rows());
  for (Eigen::Index j = 0; j < points.rows(); ++j)
    for (Eigen::Index k = 0; k < new_points.rows(); ++k)
      out(j, k) = correlation(spec, points.row(j), new_points.row(k));
  return out;
}

Eigen::VectorXd KernelMatrix::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y = chol.triangularView<Eigen::Lower>().solve(b);
  return chol.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd KernelMatrix::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd y = chol.triangularView<Eigen::Lower>().solve(b);
  return chol.transpose().triangularView<Eigen::Upper>().solve(y);
}

double KernelMatrix::log_det() const {
  return 2.0 * chol.diagonal().array().log().sum();
}

Eigen::MatrixXd scalar_points(const Eigen::VectorXd& locations) {
  Eigen::MatrixXd out(locations.size(), 1);
  out.col(0) = locations;
  return out;
}

}  // namespace tvgp
