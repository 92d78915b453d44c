#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tvgp/tensor.hpp"

using tvgp::KroneckerMatrix;
using tvgp::Tensor;

TEST_CASE("vec of a 2x2 matrix is row-by-row") {
  // [[a,b],[c,d]] -> (a,b,c,d): the Kronecker unit-vector placement puts
  // (1,2) at flat position 2.
  Tensor t({2, 2}, Eigen::Vector4d(1.0, 2.0, 3.0, 4.0));
  CHECK(t.at({0, 0}) == 1.0);
  CHECK(t.at({0, 1}) == 2.0);
  CHECK(t.at({1, 0}) == 3.0);
  CHECK(t.at({1, 1}) == 4.0);
  CHECK(t.vec()[1] == 2.0);
}

TEST_CASE("vec matches the brute-force Kronecker unit-vector construction") {
  std::mt19937_64 rng(7);
  for (auto dims : std::vector<std::vector<int>>{{2, 3}, {3, 4, 2}, {2, 2, 2, 2}, {5}}) {
    Tensor t = oracle::random_tensor(dims, rng);
    Eigen::VectorXd ref = oracle::kron_unit_vec(t);
    CHECK((t.vec() - ref).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("unvec inverts vec for random extents") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> order_dist(1, 4), extent_dist(1, 10);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> dims(order_dist(rng));
    long total = 1;
    for (auto& d : dims) {
      d = extent_dist(rng);
      total *= d;
    }
    if (total > 10000) continue;
    Tensor t = oracle::random_tensor(dims, rng);
    Tensor back = Tensor::unvec(dims, t.vec());
    CHECK(back.dims() == t.dims());
    CHECK((back.vec() - t.vec()).norm() == 0.0);
  }
}

TEST_CASE("mode product with the identity is a no-op") {
  std::mt19937_64 rng(3);
  Tensor t = oracle::random_tensor({3, 4, 2}, rng);
  for (int mode = 0; mode < 3; ++mode) {
    Tensor r = mode_product(t, Eigen::MatrixXd::Identity(t.extent(mode), t.extent(mode)), mode);
    CHECK((r.vec() - t.vec()).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("mode product against the literal summation") {
  std::mt19937_64 rng(5);

  SUBCASE("leading-mode contraction with a row vector") {
    Tensor t = oracle::random_tensor({2, 3}, rng);
    Eigen::MatrixXd w = oracle::random_matrix(1, 2, rng);
    Tensor got = mode_product(t, w, 0);
    Tensor ref = oracle::mode_product(t, w, 0);
    CHECK(got.dims() == std::vector<int>{1, 3});
    CHECK((got.vec() - ref.vec()).lpNorm<Eigen::Infinity>() < 1e-14);
  }

  SUBCASE("middle mode, rectangular matrix") {
    Tensor t = oracle::random_tensor({3, 2, 4}, rng);
    Eigen::MatrixXd m = oracle::random_matrix(5, 2, rng);
    Tensor got = mode_product(t, m, 1);
    Tensor ref = oracle::mode_product(t, m, 1);
    CHECK(got.dims() == std::vector<int>{3, 5, 4});
    CHECK((got.vec() - ref.vec()).lpNorm<Eigen::Infinity>() < 1e-12);
  }

  SUBCASE("all tensors up to order 4, extents up to 5") {
    std::uniform_int_distribution<int> extent_dist(1, 5), rows_dist(1, 5);
    for (int rep = 0; rep < 30; ++rep) {
      std::uniform_int_distribution<int> order_dist(1, 4);
      std::vector<int> dims(order_dist(rng));
      for (auto& d : dims) d = extent_dist(rng);
      Tensor t = oracle::random_tensor(dims, rng);
      std::uniform_int_distribution<int> mode_dist(0, t.order() - 1);
      const int mode = mode_dist(rng);
      Eigen::MatrixXd m = oracle::random_matrix(rows_dist(rng), t.extent(mode), rng);
      Tensor got = mode_product(t, m, mode);
      Tensor ref = oracle::mode_product(t, m, mode);
      CHECK((got.vec() - ref.vec()).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
}

TEST_CASE("mode product dimension mismatch names the mode") {
  Tensor t({3, 4});
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
  CHECK_THROWS_WITH_AS(mode_product(t, m, 1), doctest::Contains("mode 1"),
                       std::invalid_argument);
}

TEST_CASE("kron_matvec identities and scalars") {
  KroneckerMatrix ident({Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(4, 4)});
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(12, 0.0, 11.0);
  CHECK((ident.apply(v) - v).lpNorm<Eigen::Infinity>() == 0.0);

  KroneckerMatrix scalars({Eigen::MatrixXd::Constant(1, 1, 2.0),
                           Eigen::MatrixXd::Constant(1, 1, 3.0)});
  Eigen::VectorXd one(1);
  one << 5.0;
  CHECK(scalars.apply(one)[0] == doctest::Approx(30.0));
}

TEST_CASE("kron_matvec against the dense materialization") {
  std::mt19937_64 rng(13);
  Eigen::MatrixXd a = oracle::random_matrix(2, 2, rng);
  Eigen::MatrixXd b = oracle::random_matrix(3, 3, rng);
  KroneckerMatrix k({a, b});
  Eigen::MatrixXd dense = oracle::dense_kron({a, b});
  Eigen::VectorXd v = oracle::random_matrix(6, 1, rng);
  CHECK((k.apply(v) - dense * v).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("(A (x) B) vec(X) equals the mode-product formulation") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd a = oracle::random_matrix(3, 3, rng);
    Eigen::MatrixXd b = oracle::random_matrix(4, 4, rng);
    Tensor x = oracle::random_tensor({3, 4}, rng);
    Eigen::VectorXd via_kron = KroneckerMatrix({a, b}).apply(x.vec());
    Tensor via_modes = mode_product(mode_product(x, a, 0), b, 1);
    const double rel = (via_kron - via_modes.vec()).norm() / via_kron.norm();
    CHECK(rel < 1e-12);
  }
}

TEST_CASE("kron_solve") {
  std::mt19937_64 rng(19);

  SUBCASE("identity factors return the input") {
    KroneckerMatrix k({Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)});
    Eigen::VectorXd v = oracle::random_matrix(6, 1, rng);
    CHECK((k.solve(v) - v).lpNorm<Eigen::Infinity>() < 1e-14);
  }

  SUBCASE("single factor reduces to a dense SPD solve") {
    Eigen::MatrixXd a = oracle::random_spd(4, rng);
    KroneckerMatrix k({a});
    Eigen::VectorXd v = oracle::random_matrix(4, 1, rng);
    Eigen::VectorXd ref = a.ldlt().solve(v);
    CHECK((k.solve(v) - ref).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  SUBCASE("random SPD factors match the dense solve") {
    Eigen::MatrixXd a = oracle::random_spd(3, rng);
    Eigen::MatrixXd b = oracle::random_spd(2, rng);
    KroneckerMatrix k({a, b});
    Eigen::MatrixXd dense = oracle::dense_kron({a, b});
    Eigen::VectorXd v = oracle::random_matrix(6, 1, rng);
    Eigen::VectorXd ref = dense.ldlt().solve(v);
    CHECK((k.solve(v) - ref).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  SUBCASE("solve inverts apply") {
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::MatrixXd a = oracle::random_spd(3, rng);
      Eigen::MatrixXd b = oracle::random_spd(4, rng);
      KroneckerMatrix k({a, b});
      Eigen::VectorXd v = oracle::random_matrix(12, 1, rng);
      Eigen::VectorXd back = k.solve(k.apply(v));
      CHECK((back - v).norm() / v.norm() < 1e-8);
    }
  }

  SUBCASE("non-SPD factor is reported with its index") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
    KroneckerMatrix k({Eigen::MatrixXd::Identity(2, 2), bad});
    Eigen::VectorXd v = Eigen::VectorXd::Ones(4);
    CHECK_THROWS_WITH_AS(k.solve(v), doctest::Contains("factor 1"), std::runtime_error);
  }
}

TEST_CASE("dense materialization is size guarded") {
  Eigen::MatrixXd big = Eigen::MatrixXd::Identity(70, 70);
  KroneckerMatrix k({big, big});  // 4900^2 dense entries
  CHECK_THROWS_AS(k.dense(), std::runtime_error);
  CHECK_NOTHROW(k.dense(true));
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor(std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({2, 3}, Eigen::VectorXd::Zero(5)), std::invalid_argument);

  std::mt19937_64 rng(23);
  Tensor t = oracle::random_tensor({4, 3, 2}, rng);
  Tensor s = t.slice_leading(2);
  CHECK(s.dims() == std::vector<int>{3, 2});
  CHECK(s.at({1, 1}) == t.at({2, 1, 1}));
}
