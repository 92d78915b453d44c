#include "tvgp/tensor.hpp"

#include <numeric>
#include <stdexcept>

namespace tvgp {

namespace {

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Eigen::Index check_dims(const std::vector<int>& dims) {
  if (dims.empty()) throw std::invalid_argument("Tensor: dims must be nonempty");
  Eigen::Index total = 1;
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("Tensor: all extents must be >= 1");
    total *= d;
  }
  return total;
}

}  // namespace

Tensor::Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
  data_ = Eigen::VectorXd::Zero(check_dims(dims_));
}

Tensor::Tensor(std::vector<int> dims, Eigen::VectorXd data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (check_dims(dims_) != data_.size())
    throw std::invalid_argument("Tensor: data length does not match product of extents");
}

int Tensor::extent(int mode) const {
  if (mode < 0 || mode >= order())
    throw std::invalid_argument("Tensor: mode " + std::to_string(mode) + " out of range");
  return dims_[static_cast<size_t>(mode)];
}

Eigen::Index Tensor::flat_index(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != order())
    throw std::invalid_argument("Tensor: index arity does not match tensor order");
  Eigen::Index flat = 0;
  for (size_t z = 0; z < idx.size(); ++z) {
    if (idx[z] < 0 || idx[z] >= dims_[z])
      throw std::out_of_range("Tensor: index out of range in mode " + std::to_string(z));
    flat = flat * dims_[z] + idx[z];
  }
  return flat;
}

double Tensor::at(std::initializer_list<int> idx) const {
  return (*this)(std::span<const int>(idx.begin(), idx.size()));
}

double& Tensor::at(std::initializer_list<int> idx) {
  return (*this)(std::span<const int>(idx.begin(), idx.size()));
}

Tensor Tensor::unvec(std::vector<int> dims, Eigen::VectorXd v) {
  return Tensor(std::move(dims), std::move(v));
}

Tensor Tensor::slice_leading(int j) const {
  if (order() < 2) throw std::invalid_argument("Tensor: slice_leading needs order >= 2");
  if (j < 0 || j >= dims_[0]) throw std::out_of_range("Tensor: leading index out of range");
  std::vector<int> rest(dims_.begin() + 1, dims_.end());
  const Eigen::Index block = size() / dims_[0];
  return Tensor(std::move(rest), data_.segment(static_cast<Eigen::Index>(j) * block, block));
}

Tensor Tensor::with_leading_unit() const {
  std::vector<int> d = dims_;
  d.insert(d.begin(), 1);
  return Tensor(std::move(d), data_);
}

Tensor Tensor::squeeze_leading() const {
  if (order() < 2 || dims_[0] != 1)
    throw std::invalid_argument("Tensor: squeeze_leading requires a unit leading mode");
  return Tensor(std::vector<int>(dims_.begin() + 1, dims_.end()), data_);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (dims_ != other.dims_) throw std::invalid_argument("Tensor: extent mismatch in +");
  data_ += other.data_;
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (dims_ != other.dims_) throw std::invalid_argument("Tensor: extent mismatch in -");
  data_ -= other.data_;
  return *this;
}

Tensor mode_product(const Tensor& t, const Eigen::MatrixXd& mat, int mode) {
  if (mode < 0 || mode >= t.order())
    throw std::invalid_argument("mode_product: mode " + std::to_string(mode) +
                                " out of range for order " + std::to_string(t.order()));
  const int d = t.extent(mode);
  if (mat.cols() != d)
    throw std::invalid_argument(
        "mode_product: mode " + std::to_string(mode) + " has extent " + std::to_string(d) +
        " but matrix has " + std::to_string(mat.cols()) + " columns");

  const auto& dims = t.dims();
  Eigen::Index outer = 1, inner = 1;
  for (int z = 0; z < mode; ++z) outer *= dims[static_cast<size_t>(z)];
  for (int z = mode + 1; z < t.order(); ++z) inner *= dims[static_cast<size_t>(z)];

  std::vector<int> out_dims = dims;
  out_dims[static_cast<size_t>(mode)] = static_cast<int>(mat.rows());
  Tensor out(out_dims);

  const double* src = t.vec().data();
  double* dst = out.vec().data();
  const Eigen::Index q = mat.rows();
  for (Eigen::Index o = 0; o < outer; ++o) {
    ConstRowMajorMap s(src + o * d * inner, d, inner);
    RowMajorMap r(dst + o * q * inner, q, inner);
    r.noalias() = mat * s;
  }
  return out;
}

KroneckerMatrix::KroneckerMatrix(std::vector<Eigen::MatrixXd> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("KroneckerMatrix: needs >= 1 factor");
  for (size_t z = 0; z < factors_.size(); ++z) {
    if (factors_[z].rows() != factors_[z].cols())
      throw std::invalid_argument("KroneckerMatrix: factor " + std::to_string(z) +
                                  " is not square");
    if (factors_[z].rows() < 1)
      throw std::invalid_argument("KroneckerMatrix: factor " + std::to_string(z) +
                                  " is empty");
  }
}

Eigen::Index KroneckerMatrix::dim() const {
  Eigen::Index d = 1;
  for (const auto& f : factors_) d *= f.rows();
  return d;
}

std::vector<int> KroneckerMatrix::factor_sizes() const {
  std::vector<int> s;
  s.reserve(factors_.size());
  for (const auto& f : factors_) s.push_back(static_cast<int>(f.rows()));
  return s;
}

Eigen::VectorXd KroneckerMatrix::apply(const Eigen::VectorXd& v) const {
  if (v.size() != dim())
    throw std::invalid_argument("KroneckerMatrix: vector length " + std::to_string(v.size()) +
                                " does not match product dimension " + std::to_string(dim()));
  Tensor t(factor_sizes(), v);
  for (int z = 0; z < order(); ++z) t = mode_product(t, factors_[static_cast<size_t>(z)], z);
  return t.vec();
}

Eigen::VectorXd KroneckerMatrix::solve(const Eigen::VectorXd& v) const {
  if (v.size() != dim())
    throw std::invalid_argument("KroneckerMatrix: vector length " + std::to_string(v.size()) +
                                " does not match product dimension " + std::to_string(dim()));
  Tensor t(factor_sizes(), v);
  for (int z = 0; z < order(); ++z) {
    const auto& f = factors_[static_cast<size_t>(z)];
    Eigen::LLT<Eigen::MatrixXd> llt(f);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f, Eigen::EigenvaluesOnly);
      throw std::runtime_error("KroneckerMatrix: factor " + std::to_string(z) +
                               " is not SPD (smallest eigenvalue " +
                               std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    // Solve along mode z: per block, X = f^{-1} S.
    const auto& dims = t.dims();
    const int d = dims[static_cast<size_t>(z)];
    Eigen::Index outer = 1, inner = 1;
    for (int m = 0; m < z; ++m) outer *= dims[static_cast<size_t>(m)];
    for (int m = z + 1; m < t.order(); ++m) inner *= dims[static_cast<size_t>(m)];
    double* ptr = t.vec().data();
    for (Eigen::Index o = 0; o < outer; ++o) {
      RowMajorMap s(ptr + o * d * inner, d, inner);
      s = llt.solve(Eigen::MatrixXd(s));
    }
  }
  return t.vec();
}

Eigen::MatrixXd KroneckerMatrix::dense(bool allow_large) const {
  const Eigen::Index d = dim();
  if (!allow_large && d > kDenseGuard)
    throw std::runtime_error("KroneckerMatrix: refusing to materialize " + std::to_string(d) +
                             "x" + std::to_string(d) + " dense product (guard " +
                             std::to_string(kDenseGuard) + "); pass allow_large to override");
  Eigen::MatrixXd out = factors_[0];
  for (size_t z = 1; z < factors_.size(); ++z) {
    const Eigen::MatrixXd& f = factors_[z];
    Eigen::MatrixXd next(out.rows() * f.rows(), out.cols() * f.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = out(i, j) * f;
    out = std::move(next);
  }
  return out;
}

}  // namespace tvgp
