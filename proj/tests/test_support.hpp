#pragma once

#include <Eigen/Dense>

#include "ofulq/lqmodel.hpp"
#include "ofulq/riccati.hpp"
#include "ofulq/rng.hpp"

namespace ofulq::fixtures {

inline MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) {
      M(i, k) = rng.normal();
    }
  }
  return M;
}

/// Random matrix rescaled to spectral radius `rho`.
inline MatrixXd random_stable(int p, double rho, Rng& rng) {
  MatrixXd M = random_matrix(p, p, rng);
  const double s = spectral_radius(M);
  return s > 0.0 ? M * (rho / s) : M;
}

inline MatrixXd random_pd(int n, Rng& rng, double floor = 0.1) {
  const MatrixXd M = random_matrix(n, n, rng);
  return M * M.transpose() / n + floor * MatrixXd::Identity(n, n);
}

/// Random stabilizable system built from a stable closed loop D and a gain L:
/// A = D - B L.
inline DynamicsParameter random_stabilizable(int p, int r, Rng& rng) {
  const MatrixXd D = random_stable(p, 0.2 + 0.75 * rng.uniform(), rng);
  const MatrixXd B = random_matrix(p, r, rng);
  const MatrixXd L = random_matrix(r, p, rng);
  return DynamicsParameter(D - B * L, B);
}

/// A pair theta1 != theta0 with theta1 [I; L1] = theta0 [I; L1] for the optimal
/// gain L1 of theta1, and J*(theta1) = J*(theta0) by construction.
///
/// theta1 is built backwards from K, R, B and a singular stable D: L1 = -R^{-1}
/// B'K D and Q = K - D'K D - L1'R L1 (resampled until PD), so K solves the DARE
/// of theta1 = (D - B L1, B). theta0 moves B by v w' with v'K D = 0 and A by
/// -v w' L1, which keeps the closed loop and the first-order condition intact.
struct MatchedPair {
  DynamicsParameter theta0;
  DynamicsParameter theta1;
  CostPair cost;
  MatrixXd L1;
};

inline MatchedPair matched_pair(int p, int r, Rng& rng) {
  for (;;) {
    MatrixXd D = random_matrix(p, p, rng);
    Eigen::JacobiSVD<MatrixXd> svd(D, Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd sv = svd.singularValues();
    sv(p - 1) = 0.0;  // rank p - 1
    D = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
    D *= (0.1 + 0.3 * rng.uniform()) / std::max(operator_norm(D), 1e-12);
    const MatrixXd K = random_pd(p, rng, 0.5);
    const MatrixXd R = random_pd(r, rng, 0.5);
    const MatrixXd B = random_matrix(p, r, rng);
    const MatrixXd L1 = -R.llt().solve(B.transpose() * K * D);
    MatrixXd Q = K - D.transpose() * K * D - L1.transpose() * R * L1;
    Q = 0.5 * (Q + Q.transpose());
    if (Eigen::SelfAdjointEigenSolver<MatrixXd>(Q).eigenvalues().minCoeff() < 1e-3) {
      continue;
    }
    // v spans the left null space of K D.
    Eigen::JacobiSVD<MatrixXd> left(K * D, Eigen::ComputeFullU);
    const VectorXd v = left.matrixU().col(p - 1);
    VectorXd w = random_matrix(r, 1, rng);
    w /= w.norm();
    const MatrixXd dB = (0.2 + rng.uniform()) * v * w.transpose();
    DynamicsParameter theta1(D - B * L1, B);
    DynamicsParameter theta0(D - B * L1 - dB * L1, B + dB);
    return {std::move(theta0), std::move(theta1), CostPair(Q, R), L1};
  }
}

}  // namespace ofulq::fixtures
