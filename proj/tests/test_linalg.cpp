#include <doctest.h>

#include "lipm/linalg.hpp"
#include "support.hpp"

using namespace lipm;
using namespace lipm::testing;

TEST_SUITE("linalg") {

TEST_CASE("least squares with the identity returns the right-hand side") {
  Vector b(2);
  b << 1.0, 2.0;
  const Vector y = qr_least_squares(Matrix::Identity(2, 2), b);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(2.0));
}

TEST_CASE("least squares on a repeated column gives the mean") {
  const Matrix A = Matrix::Ones(2, 1);
  Vector b(2);
  b << 0.0, 2.0;
  CHECK(qr_least_squares(A, b)[0] == doctest::Approx(1.0));
}

TEST_CASE("least squares agrees with the normal equations on full-rank systems") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix A = normal_matrix(rng, 8, 5);
    const Vector b = normal_vector(rng, 8);
    const Vector y = qr_least_squares(A, b);
    const Vector oracle = (A.transpose() * A).ldlt().solve(A.transpose() * b);
    CHECK((y - oracle).norm() <= 1e-8 * oracle.norm());
    const double stat = (A.transpose() * (A * y - b)).lpNorm<Eigen::Infinity>();
    CHECK(stat <= 1e-8 * A.lpNorm<Eigen::Infinity>() * b.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("least squares tolerates rank deficiency") {
  Matrix A(3, 2);
  A << 1, 2, 2, 4, 3, 6;
  Vector b(3);
  b << 1, 2, 3;
  const Vector y = qr_least_squares(A, b);
  CHECK(y.allFinite());
  CHECK((A * y - b).norm() <= 1e-10);
  CHECK((y.array() == 0.0).count() >= 1);
}

TEST_CASE("least squares rejects non-finite input") {
  Matrix A = Matrix::Identity(2, 2);
  A(0, 1) = kNaN;
  CHECK_THROWS_AS(qr_least_squares(A, Vector::Ones(2)), NonFiniteError);
  CHECK_THROWS_AS(qr_least_squares(Matrix::Identity(2, 2), Vector::Constant(2, kInf)), NonFiniteError);
}

TEST_CASE("LU solve on simple systems") {
  CHECK(lu_solve(Matrix::Identity(3, 3), Vector::Ones(3)) == Vector::Ones(3));
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 2.0;
  A(1, 1) = 4.0;
  Vector b(2);
  b << 2.0, 8.0;
  const Vector y = lu_solve(A, b);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(2.0));
}

TEST_CASE("LU solve residual on random systems") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix A = normal_matrix(rng, 10, 10);
    const Vector b = normal_vector(rng, 10);
    const Vector y = lu_solve(A, b);
    CHECK((A * y - b).lpNorm<Eigen::Infinity>() <= 1e-9 * b.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("LU solve reports singular matrices") {
  Matrix A(2, 2);
  A << 1, 2, 2, 4;
  CHECK_THROWS_AS(lu_solve(A, Vector::Ones(2)), SingularMatrixError);
  CHECK_THROWS_AS(lu_solve(Matrix::Zero(3, 3), Vector::Ones(3)), SingularMatrixError);
}

TEST_CASE("Ruiz on a diagonal matrix equilibrates in one sweep") {
  Matrix H = Matrix::Zero(2, 2);
  H(0, 0) = 4.0;
  H(1, 1) = 1.0;
  const ScalingDiag D = ruiz_equilibrate(H);
  CHECK(D.d[0] == doctest::Approx(0.5));
  CHECK(D.d[1] == doctest::Approx(1.0));
  CHECK((apply_scaling(H, D) - Matrix::Identity(2, 2)).norm() <= 1e-15);
}

TEST_CASE("Ruiz leaves the identity unchanged") {
  const ScalingDiag D = ruiz_equilibrate(Matrix::Identity(4, 4));
  CHECK(D.d == Vector::Ones(4));
}

TEST_CASE("Ruiz keeps zero rows at unit scale") {
  Matrix H = Matrix::Zero(3, 3);
  H(0, 0) = 9.0;
  H(2, 2) = 0.25;
  const ScalingDiag D = ruiz_equilibrate(H);
  CHECK(D.d[1] == 1.0);
  CHECK(D.d[0] == doctest::Approx(1.0 / 3.0));
  CHECK(D.d[2] == doctest::Approx(2.0));
}

TEST_CASE("Ruiz output is positive, equilibrated and preserves symmetry") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix G = normal_matrix(rng, 15, 15);
    G.col(0) *= 100.0;
    G.col(3) *= 1e-2;
    const Matrix H = G.transpose() * G;
    const ScalingDiag D = ruiz_equilibrate(H, 50, 0.05);
    CHECK((D.d.array() > 0.0).all());
    const Matrix S = apply_scaling(H, D);
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * S.cwiseAbs().maxCoeff());
    const Vector rows = S.cwiseAbs().rowwise().maxCoeff();
    CHECK(rows.minCoeff() >= 0.95 - 1e-12);
    CHECK(rows.maxCoeff() <= 1.05 + 1e-12);
  }
}

TEST_CASE("Ruiz does not worsen conditioning of random SPD matrices") {
  Rng rng(6);
  int improved = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Matrix G = normal_matrix(rng, 20, 20);
    const Vector col_scale = (uniform_vector(rng, 20, -2.0, 2.0).array() * std::log(10.0)).exp().matrix();
    G = G * col_scale.asDiagonal();
    const Matrix H = G.transpose() * G + 1e-3 * Matrix::Identity(20, 20);
    const ScalingDiag D = ruiz_equilibrate(H);
    if (cond_estimate(apply_scaling(H, D)) <= cond_estimate(H)) ++improved;
  }
  CHECK(improved >= 90);
}

TEST_CASE("condition estimate on diagonal and identity matrices") {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 10.0;
  A(1, 1) = 1.0;
  CHECK(std::abs(cond_estimate(A) - 10.0) <= 1e-4);
  CHECK(cond_estimate(Matrix::Identity(5, 5)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("condition estimate matches the SVD oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix A = normal_matrix(rng, 12, 12);
    const double oracle = svd_condition(A);
    CHECK(std::abs(cond_estimate(A) - oracle) <= 0.01 * oracle);
  }
}

TEST_CASE("condition estimate of rectangular matrices") {
  Rng rng(9);
  const Matrix A = normal_matrix(rng, 15, 6);
  const double oracle = svd_condition(A);
  CHECK(std::abs(cond_estimate(A) - oracle) <= 0.01 * oracle);
}

TEST_CASE("condition estimate is scale invariant") {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = normal_matrix(rng, 9, 9);
    const double base = cond_estimate(A);
    for (double c : {1e-3, 1e3}) CHECK(std::abs(cond_estimate(c * A) - base) <= 1e-6 * base);
  }
}

TEST_CASE("condition estimate of a singular matrix is infinite") {
  Matrix A(3, 3);
  A << 1, 2, 3, 2, 4, 6, 0, 1, 1;
  CHECK(cond_estimate(A) == kInf);
  CHECK(cond_estimate(Matrix::Zero(2, 2)) == kInf);
}

}
