#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace tvgp {

/// A fixed set of regression functions evaluated at a point. The named
/// constructors cover the bases used by the emulators; custom() accepts any
/// callable but cannot be serialized.
class Basis {
 public:
  Basis() = default;  // uninitialized; evaluation throws until assigned

  static Basis constant(int input_dim);         // {1}
  static Basis constant_linear(int input_dim);  // {1, x_1, ..., x_p}
  static Basis custom(int input_dim, int size,
                      std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn);
  static Basis from_name(const std::string& name, int input_dim);

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

  /// Rows are evaluations at the rows of `points` (an n x size matrix).
  Eigen::MatrixXd matrix(const Eigen::MatrixXd& points) const;

  int size() const { return size_; }
  int input_dim() const { return input_dim_; }
  const std::string& name() const { return name_; }

 private:
  Basis(std::string name, int input_dim, int size,
        std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn);

  std::string name_;
  int input_dim_ = 0;
  int size_ = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn_;
};

}  // namespace tvgp
