#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace ofulq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Dynamics parameter theta = [A, B] with A p x p and B p x r.
class DynamicsParameter {
 public:
  DynamicsParameter(MatrixXd A, MatrixXd B);

  /// Splits a p x (p + r) matrix [A, B].
  static DynamicsParameter from_stacked(const MatrixXd& theta, int p);

  const MatrixXd& A() const { return A_; }
  const MatrixXd& B() const { return B_; }
  int p() const { return static_cast<int>(A_.rows()); }
  int r() const { return static_cast<int>(B_.cols()); }
  int q() const { return p() + r(); }

  /// [A, B] as a p x q matrix.
  MatrixXd stacked() const;
  /// A + B L.
  MatrixXd closed_loop(const MatrixXd& L) const;

 private:
  MatrixXd A_;
  MatrixXd B_;
};

/// Quadratic stage cost x'Qx + u'Ru. Both blocks are symmetrized on
/// construction and must be positive definite.
class CostPair {
 public:
  CostPair(MatrixXd Q, MatrixXd R);

  const MatrixXd& Q() const { return Q_; }
  const MatrixXd& R() const { return R_; }
  double stage_cost(const VectorXd& x, const VectorXd& u) const;

 private:
  MatrixXd Q_;
  MatrixXd R_;
};

/// [I_p; L] for a gain L of shape r x p, so that theta * extended = A + B L.
MatrixXd extended_feedback(const MatrixXd& L);

/// Max |lambda| over the eigenvalues of a square matrix.
double spectral_radius(const MatrixXd& M);

bool is_stabilizer(const DynamicsParameter& theta, const MatrixXd& L, double tol = 1e-9);

struct JordanBlock {
  std::complex<double> eigenvalue;
  int size = 1;
};

/// Output of jordan_constant.
///
/// `similarity` is P in D = P^{-1} Lambda P. When the block structure cannot
/// be resolved reliably, `fallback` is set, `similarity` holds the unitary
/// Schur basis, every eigenvalue is reported as a 1 x 1 block, and `zeta` is
/// the non-normality bound described in jordan.cpp. Either way `zeta` bounds
/// sum_t ||D^t||_{inf->2}.
struct JordanData {
  Eigen::MatrixXcd similarity;
  std::vector<JordanBlock> blocks;
  double zeta = 1.0;
  double inverse_inf_to_two = 1.0;  // ||P^{-1}||_{inf->2} (certified upper bound)
  double similarity_inf = 1.0;      // ||P||_inf
  double series_sum = 1.0;          // sum_t zeta_t(Lambda)
  int series_terms = 1;
  bool fallback = false;
};

/// Transient-amplification constant of a stable matrix D.
/// Throws InstabilityError when spectral_radius(D) >= 1.
JordanData jordan_constant(const MatrixXd& D);

/// zeta_t(Lambda_i) for one block: inf over rho >= |lambda| of
/// t^{m-1} rho^t sum_{j<m} rho^{-j}/j!. Exposed for tests.
double jordan_block_term(double modulus, int size, int t);

/// Certified upper bound on the (complex) inf->2 operator norm:
/// min(sqrt(n) ||M||_2, sum_j ||M e_j||_2). Exact for scaled unitaries.
double inf_to_two_norm_bound(const Eigen::MatrixXcd& M);

/// Max absolute row sum (the inf->inf operator norm).
double inf_norm(const Eigen::MatrixXcd& M);

/// Spectral norm (largest singular value).
double operator_norm(const MatrixXd& M);

void require_finite(const MatrixXd& M, const char* what);

}  // namespace ofulq
