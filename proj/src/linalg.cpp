#include "thermotop/linalg.hpp"

#include <utility>

#include "thermotop/errors.hpp"

namespace thermotop {

SpdSolver::SpdSolver(SpMat A) : A_(std::move(A)) {
  if (A_.rows() == 0) return;
  ldlt_.compute(A_);
  if (ldlt_.info() != Eigen::Success) throw SingularSystem("sparse LDLT factorization failed");
  const Eigen::VectorXd d = ldlt_.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(dmax > 0.0) || !(d.minCoeff() > dmax * 1e-18)) {
    throw SingularSystem("matrix is not positive definite (non-positive pivot)");
  }
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b) const {
  if (A_.rows() == 0) return Eigen::VectorXd();
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd x = ldlt_.solve(b);
  Eigen::VectorXd r = b - A_ * x;
  double rel = r.norm() / bnorm;
  if (rel > 1e-13) {
    x += ldlt_.solve(r);
    r = b - A_ * x;
    rel = r.norm() / bnorm;
  }
  if (!(rel < kResidualTolerance)) {
    throw LinearSolverError("linear solve residual " + std::to_string(rel) + " above tolerance", rel);
  }
  return x;
}

}  // namespace thermotop
