#include "tvgp/basis.hpp"

#include <stdexcept>

namespace tvgp {

Basis::Basis(std::string name, int input_dim, int size,
             std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn)
    : name_(std::move(name)), input_dim_(input_dim), size_(size), fn_(std::move(fn)) {
  if (input_dim_ < 1) throw std::invalid_argument("Basis: input dimension must be >= 1");
  if (size_ < 1) throw std::invalid_argument("Basis: needs at least one function");
}

Basis Basis::constant(int input_dim) {
  return Basis("constant", input_dim, 1,
               [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); });
}

Basis Basis::constant_linear(int input_dim) {
  return Basis("constant_linear", input_dim, input_dim + 1, [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(x.size() + 1);
    g[0] = 1.0;
    g.tail(x.size()) = x;
    return g;
  });
}

Basis Basis::custom(int input_dim, int size,
                    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn) {
  return Basis("custom", input_dim, size, std::move(fn));
}

Basis Basis::from_name(const std::string& name, int input_dim) {
  if (name == "constant") return constant(input_dim);
  if (name == "constant_linear") return constant_linear(input_dim);
  throw std::invalid_argument("Basis: unknown basis name '" + name + "'");
}

Eigen::VectorXd Basis::operator()(const Eigen::VectorXd& x) const {
  if (!fn_) throw std::logic_error("Basis: evaluating an uninitialized basis");
  if (x.size() != input_dim_)
    throw std::invalid_argument("Basis: point has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(input_dim_));
  Eigen::VectorXd g = fn_(x);
  if (g.size() != size_)
    throw std::runtime_error("Basis: evaluation returned " + std::to_string(g.size()) +
                             " values, expected " + std::to_string(size_));
  if (!g.allFinite()) throw std::runtime_error("Basis: non-finite regressor value");
  return g;
}

Eigen::MatrixXd Basis::matrix(const Eigen::MatrixXd& points) const {
  Eigen::MatrixXd out(points.rows(), size_);
  for (Eigen::Index j = 0; j < points.rows(); ++j) out.row(j) = (*this)(points.row(j));
  return out;
}

}  // namespace tvgp
