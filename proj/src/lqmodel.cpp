#include "ofulq/lqmodel.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ofulq/errors.hpp"

namespace ofulq {

void require_finite(const MatrixXd& M, const char* what) {
  if (!M.allFinite()) {
    throw DomainError(std::string(what) + " has non-finite entries");
  }
}

DynamicsParameter::DynamicsParameter(MatrixXd A, MatrixXd B) : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() == 0 || A_.rows() != A_.cols()) {
    throw DimensionError("A must be square and non-empty");
  }
  if (B_.rows() != A_.rows() || B_.cols() == 0) {
    throw DimensionError("B must have p rows and at least one column");
  }
  require_finite(A_, "A");
  require_finite(B_, "B");
}

DynamicsParameter DynamicsParameter::from_stacked(const MatrixXd& theta, int p) {
  if (p <= 0 || theta.rows() != p || theta.cols() <= p) {
    throw DimensionError("stacked parameter must be p x (p + r) with r >= 1");
  }
  return {theta.leftCols(p), theta.rightCols(theta.cols() - p)};
}

MatrixXd DynamicsParameter::stacked() const {
  MatrixXd theta(p(), q());
  theta << A_, B_;
  return theta;
}

MatrixXd DynamicsParameter::closed_loop(const MatrixXd& L) const {
  if (L.rows() != r() || L.cols() != p()) {
    throw DimensionError("feedback gain must be r x p");
  }
  return A_ + B_ * L;
}

namespace {

MatrixXd symmetrized_positive_definite(MatrixXd M, const char* name) {
  if (M.rows() == 0 || M.rows() != M.cols()) {
    throw DimensionError(std::string(name) + " must be square and non-empty");
  }
  require_finite(M, name);
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) <= 0.0) {
    throw DomainError(std::string(name) + " must be positive definite");
  }
  return M;
}

}  // namespace

CostPair::CostPair(MatrixXd Q, MatrixXd R)
    : Q_(symmetrized_positive_definite(std::move(Q), "Q")),
      R_(symmetrized_positive_definite(std::move(R), "R")) {}

double CostPair::stage_cost(const VectorXd& x, const VectorXd& u) const {
  return x.dot(Q_ * x) + u.dot(R_ * u);
}

MatrixXd extended_feedback(const MatrixXd& L) {
  const auto p = L.cols();
  MatrixXd ext(p + L.rows(), p);
  ext << MatrixXd::Identity(p, p), L;
  return ext;
}

double spectral_radius(const MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw DimensionError("spectral_radius needs a square matrix");
  }
  require_finite(M, "matrix");
  if (M.rows() == 0) {
    return 0.0;
  }
  if (M.rows() == 1) {
    return std::abs(M(0, 0));
  }
  Eigen::EigenSolver<MatrixXd> eig(M, false);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigenvalue computation did not converge");
  }
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stabilizer(const DynamicsParameter& theta, const MatrixXd& L, double tol) {
  return spectral_radius(theta.closed_loop(L)) < 1.0 - tol;
}

double operator_norm(const MatrixXd& M) {
  if (M.size() == 0) {
    return 0.0;
  }
  if (M.rows() == 1 || M.cols() == 1) {
    return M.norm();
  }
  if (M.rows() == 2 || M.cols() == 2) {
    // Largest eigenvalue of the 2 x 2 Gram matrix in closed form.
    const Eigen::Matrix2d G = M.rows() == 2 ? Eigen::Matrix2d(M * M.transpose()) : Eigen::Matrix2d(M.transpose() * M);
    const double half_trace = 0.5 * (G(0, 0) + G(1, 1));
    const double half_gap = 0.5 * (G(0, 0) - G(1, 1));
    return std::sqrt(half_trace + std::hypot(half_gap, G(0, 1)));
  }
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

double inf_norm(const Eigen::MatrixXcd& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); }

double inf_to_two_norm_bound(const Eigen::MatrixXcd& M) {
  const double n = static_cast<double>(M.cols());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const double spectral_bound = std::sqrt(n) * svd.singularValues()(0);
  const double column_bound = M.colwise().norm().sum();
  return std::min(spectral_bound, column_bound);
}

}  // namespace ofulq
