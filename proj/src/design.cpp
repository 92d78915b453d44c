#include "tvgp/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace tvgp {

void Box::validate() const {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw std::invalid_argument("Box: lo/hi must be nonempty and the same length");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i]))
      throw std::invalid_argument("Box: degenerate bounds in dimension " + std::to_string(i));
}

Eigen::MatrixXd Box::scale_into(const Eigen::MatrixXd& raw) const {
  validate();
  if (raw.cols() != dim()) throw std::invalid_argument("Box: dimension mismatch");
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j)
    out.col(j) = 2.0 * (raw.col(j).array() - lo[j]) / (hi[j] - lo[j]) - 1.0;
  return out;
}

Eigen::MatrixXd Box::unscale(const Eigen::MatrixXd& scaled) const {
  validate();
  if (scaled.cols() != dim()) throw std::invalid_argument("Box: dimension mismatch");
  Eigen::MatrixXd out(scaled.rows(), scaled.cols());
  for (Eigen::Index j = 0; j < scaled.cols(); ++j)
    out.col(j) = lo[j] + (scaled.col(j).array() + 1.0) * 0.5 * (hi[j] - lo[j]);
  return out;
}

Box Box::unit(int p) {
  Box b;
  b.lo = Eigen::VectorXd::Constant(p, -1.0);
  b.hi = Eigen::VectorXd::Constant(p, 1.0);
  return b;
}

namespace {

// Sum over pairs of 1/prod_h (x_jh - x_kh)^2; psi is a monotone transform.
double maxpro_sum(const Eigen::MatrixXd& pts) {
  const Eigen::Index n = pts.rows();
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k) {
      double prod = 1.0;
      for (Eigen::Index h = 0; h < pts.cols(); ++h) {
        const double d = pts(j, h) - pts(k, h);
        prod *= d * d;
      }
      if (prod == 0.0) return std::numeric_limits<double>::infinity();
      total += 1.0 / prod;
    }
  return total;
}

// Contribution of point j against all others.
double point_sum(const Eigen::MatrixXd& pts, Eigen::Index j) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < pts.rows(); ++k) {
    if (k == j) continue;
    double prod = 1.0;
    for (Eigen::Index h = 0; h < pts.cols(); ++h) {
      const double d = pts(j, h) - pts(k, h);
      prod *= d * d;
    }
    if (prod == 0.0) return std::numeric_limits<double>::infinity();
    total += 1.0 / prod;
  }
  return total;
}

}  // namespace

double maxpro_criterion(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw std::invalid_argument("maxpro_criterion: need at least two points");
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return std::pow(maxpro_sum(points) / pairs, 1.0 / static_cast<double>(points.cols()));
}

Eigen::MatrixXd latin_hypercube(int n, int p, std::mt19937_64& rng) {
  if (n < 1 || p < 1) throw std::invalid_argument("latin_hypercube: n and p must be >= 1");
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  const double width = 2.0 / n;
  Eigen::MatrixXd pts(n, p);
  std::vector<int> perm(static_cast<size_t>(n));
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i)
      pts(i, j) = -1.0 + (perm[static_cast<size_t>(i)] + unif(rng)) * width;
  }
  return pts;
}

Design maxpro_design(int n, int p, std::uint64_t seed, int sweeps) {
  if (n < 2) throw std::invalid_argument("maxpro_design: n must be >= 2");
  if (p < 1) throw std::invalid_argument("maxpro_design: p must be >= 1");

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd pts = latin_hypercube(n, p, rng);
  std::vector<int> stratum(static_cast<size_t>(n * p));  // stratum of point i in dim j
  const double width = 2.0 / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      stratum[static_cast<size_t>(i * p + j)] =
          std::min(n - 1, static_cast<int>((pts(i, j) + 1.0) / width));

  std::uniform_int_distribution<int> pick_point(0, n - 1);
  std::uniform_int_distribution<int> pick_dim(0, p - 1);
  std::uniform_int_distribution<int> pick_move(0, 1);

  // Candidate offsets within a stratum, staying off the shared boundaries.
  const double offsets[5] = {0.02, 0.25, 0.50, 0.75, 0.98};

  const long proposals = static_cast<long>(sweeps) * n;
  for (long step = 0; step < proposals; ++step) {
    const int i = pick_point(rng);
    const int h = pick_dim(rng);
    if (pick_move(rng) == 0) {
      // Swap the dim-h values of two points (keeps projections intact). The
      // (i,k) pair term is counted twice on both sides, so the comparison
      // stands.
      int k = pick_point(rng);
      if (k == i) continue;
      const double before = point_sum(pts, i) + point_sum(pts, k);
      std::swap(pts(i, h), pts(k, h));
      const double after = point_sum(pts, i) + point_sum(pts, k);
      if (after < before) {
        std::swap(stratum[static_cast<size_t>(i * p + h)],
                  stratum[static_cast<size_t>(k * p + h)]);
      } else {
        std::swap(pts(i, h), pts(k, h));  // revert
      }
    } else {
      // Move within the stratum toward the best candidate position.
      const int s = stratum[static_cast<size_t>(i * p + h)];
      const double lo = -1.0 + s * width;
      const double old = pts(i, h);
      double best_val = old;
      double best_sum = point_sum(pts, i);
      for (double c : offsets) {
        const double cand = lo + c * width;
        if (cand == old) continue;
        pts(i, h) = cand;
        const double sum = point_sum(pts, i);
        if (sum < best_sum) {
          best_sum = sum;
          best_val = cand;
        }
      }
      pts(i, h) = best_val;
    }
  }

  Design d;
  d.raw = pts;
  d.scaled = pts;
  d.box = Box::unit(p);
  return d;
}

Design scale_to_box(const Eigen::MatrixXd& scaled_points, const Box& box) {
  box.validate();
  if (scaled_points.cols() != box.dim())
    throw std::invalid_argument("scale_to_box: dimension mismatch");
  if ((scaled_points.array() < -1.0 - 1e-12).any() ||
      (scaled_points.array() > 1.0 + 1e-12).any())
    throw std::invalid_argument("scale_to_box: scaled points must lie in [-1,1]");
  Design d;
  d.scaled = scaled_points;
  d.raw = box.unscale(scaled_points);
  d.box = box;
  return d;
}

}  // namespace tvgp
