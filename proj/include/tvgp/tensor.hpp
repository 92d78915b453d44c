#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tvgp {

/// Dense multiway array with a fixed flattening convention: the flat storage
/// order is "last index fastest", so element (i_1,...,i_m) of a tensor with
/// extents (r_1,...,r_m) sits at offset sum_z i_z * prod_{z'>z} r_{z'}.
/// vec() is therefore a view of the storage, and the same convention is what
/// makes K (x) Sigma_1 (x) ... (x) Sigma_m the covariance of a vectorized
/// training stack whose leading mode is the run index.
class Tensor {
 public:
  Tensor() = default;

  /// Zero tensor with the given extents.
  explicit Tensor(std::vector<int> dims);

  /// Wraps flat data already in last-index-fastest order.
  Tensor(std::vector<int> dims, Eigen::VectorXd data);

  const std::vector<int>& dims() const { return dims_; }
  int order() const { return static_cast<int>(dims_.size()); }
  int extent(int mode) const;
  Eigen::Index size() const { return data_.size(); }

  double operator()(std::span<const int> idx) const { return data_[flat_index(idx)]; }
  double& operator()(std::span<const int> idx) { return data_[flat_index(idx)]; }
  double at(std::initializer_list<int> idx) const;
  double& at(std::initializer_list<int> idx);

  Eigen::Index flat_index(std::span<const int> idx) const;

  /// Flat view; vec(T) under the convention above.
  const Eigen::VectorXd& vec() const { return data_; }
  Eigen::VectorXd& vec() { return data_; }

  /// Inverse of vec: reshapes a flat vector back into the given extents.
  static Tensor unvec(std::vector<int> dims, Eigen::VectorXd v);

  /// Drops the leading mode at index j (contiguous block copy).
  Tensor slice_leading(int j) const;

  /// Prepends a unit mode or removes a leading unit mode.
  Tensor with_leading_unit() const;
  Tensor squeeze_leading() const;

  bool all_finite() const { return data_.allFinite(); }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }

 private:
  std::vector<int> dims_;
  Eigen::VectorXd data_;
};

/// c-mode tensor-matrix product: contracts mode `mode` (0-based) of t against
/// the columns of mat, so the result has extent mat.rows() in that mode and
/// entries (t x_c mat)_{..a..} = sum_b mat(a,b) t_{..b..}.
Tensor mode_product(const Tensor& t, const Eigen::MatrixXd& mat, int mode);

/// Kronecker product of square factors, kept factorized. apply/solve work via
/// mode products, never materializing the product; dense() exists as a test
/// oracle and refuses sizes above kDenseGuard unless explicitly overridden.
class KroneckerMatrix {
 public:
  static constexpr Eigen::Index kDenseGuard = 4096;

  explicit KroneckerMatrix(std::vector<Eigen::MatrixXd> factors);

  const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }
  int order() const { return static_cast<int>(factors_.size()); }
  Eigen::Index dim() const;
  std::vector<int> factor_sizes() const;

  /// (A_1 (x) ... (x) A_m) v
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;

  /// (A_1 (x) ... (x) A_m)^{-1} v via per-factor Cholesky; factors must be SPD.
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

  /// Dense materialization (test oracle only; size-guarded).
  Eigen::MatrixXd dense(bool allow_large = false) const;

 private:
  std::vector<Eigen::MatrixXd> factors_;
};

}  // namespace tvgp
