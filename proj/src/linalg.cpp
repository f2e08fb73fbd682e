#include "lipm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/LU>
#include <Eigen/QR>

namespace lipm {

namespace {

constexpr int kPowerIters = 200;
constexpr double kPowerStagnation = 1e-6;
constexpr double kRankCutoff = 1e-14;

void require_finite(const Matrix& A, const char* who) {
  if (!A.allFinite()) throw NonFiniteError(std::string(who) + ": non-finite input");
}

/// Fixed pseudo-random unit start vector; avoids landing orthogonal to the
/// dominant direction on structured inputs such as diagonals.
Vector start_vector(Index k) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Vector v(k);
  for (Index i = 0; i < k; ++i) v[i] = dist(rng);
  return v.normalized();
}

}  // namespace

Vector qr_least_squares(const Matrix& A, const Vector& b) {
  if (A.rows() < 1 || A.cols() < 1) throw std::invalid_argument("qr_least_squares: empty matrix");
  if (b.size() != A.rows()) throw std::invalid_argument("qr_least_squares: dimension mismatch");
  require_finite(A, "qr_least_squares");
  if (!b.allFinite()) throw NonFiniteError("qr_least_squares: non-finite right-hand side");
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  return qr.solve(b);
}

Vector lu_solve(const Matrix& A, const Vector& b) {
  if (A.rows() != A.cols()) throw std::invalid_argument("lu_solve: matrix must be square");
  if (b.size() != A.rows()) throw std::invalid_argument("lu_solve: dimension mismatch");
  require_finite(A, "lu_solve");
  const double norm_inf = A.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::PartialPivLU<Matrix> lu(A);
  const auto& LU = lu.matrixLU();
  for (Index i = 0; i < LU.rows(); ++i) {
    if (std::abs(LU(i, i)) <= kRankCutoff * norm_inf)
      throw SingularMatrixError("lu_solve: matrix is singular to working precision");
  }
  return lu.solve(b);
}

ScalingDiag ruiz_equilibrate(const Matrix& H, int max_sweeps, double tol) {
  if (H.rows() != H.cols()) throw std::invalid_argument("ruiz_equilibrate: matrix must be square");
  require_finite(H, "ruiz_equilibrate");
  const Index n = H.rows();
  ScalingDiag D = ScalingDiag::identity(n);
  Vector row_norm(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (Index i = 0; i < n; ++i) {
      double m = 0.0;
      for (Index j = 0; j < n; ++j) m = std::max(m, std::abs(D.d[i] * H(i, j) * D.d[j]));
      row_norm[i] = m;
    }
    bool balanced = true;
    for (Index i = 0; i < n; ++i) {
      if (row_norm[i] > 0.0 && std::abs(row_norm[i] - 1.0) > tol) balanced = false;
    }
    if (balanced) break;
    for (Index i = 0; i < n; ++i) {
      if (row_norm[i] > 0.0) D.d[i] /= std::sqrt(row_norm[i]);
    }
  }
  return D;
}

Matrix apply_scaling(const Matrix& H, const ScalingDiag& D) {
  return D.d.asDiagonal() * H * D.d.asDiagonal();
}

double cond_estimate(const Matrix& A) {
  if (A.rows() < 1 || A.cols() < 1) throw std::invalid_argument("cond_estimate: empty matrix");
  require_finite(A, "cond_estimate");
  const Index k = A.cols();
  if (A.rows() < k) return kInf;

  // λ_max(AᵀA) by power iteration with Rayleigh quotients.
  Vector v = start_vector(k);
  double lambda_max = 0.0;
  for (int it = 0; it < kPowerIters; ++it) {
    Vector w = A.transpose() * (A * v);
    const double est = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return kInf;
    v = w / norm;
    const bool stagnated = it > 0 && std::abs(est - lambda_max) <= kPowerStagnation * std::abs(est);
    lambda_max = est;
    if (stagnated) break;
  }
  const double sigma_max = std::sqrt(std::max(lambda_max, 0.0));
  if (sigma_max == 0.0) return kInf;

  // λ_min(AᵀA) by inverse iteration: with AP = QR, (AᵀA)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ.
  Eigen::ColPivHouseholderQR<Matrix> cqr(A);
  const Matrix R = cqr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const double r_max = R.diagonal().cwiseAbs().maxCoeff();
  if (R.diagonal().cwiseAbs().minCoeff() <= kRankCutoff * r_max) return kInf;
  const auto perm = cqr.colsPermutation();
  const auto Rt = R.template triangularView<Eigen::Upper>();

  v = start_vector(k);
  double mu_est = 0.0;  // estimate of 1/λ_min
  for (int it = 0; it < kPowerIters; ++it) {
    Vector z = perm.transpose() * v;
    z = Rt.transpose().solve(z);
    z = Rt.solve(z);
    Vector w = perm * z;
    const double est = v.dot(w);
    const double norm = w.norm();
    if (!std::isfinite(norm)) return kInf;
    v = w / norm;
    const bool stagnated = it > 0 && std::abs(est - mu_est) <= kPowerStagnation * std::abs(est);
    mu_est = est;
    if (stagnated) break;
  }
  if (!(mu_est > 0.0)) return kInf;
  const double sigma_min = std::sqrt(1.0 / mu_est);
  if (sigma_min < kRankCutoff * sigma_max) return kInf;
  return sigma_max / sigma_min;
}

}  // namespace lipm
