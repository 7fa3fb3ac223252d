#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace thermotop {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Sparse symmetric positive-definite direct solver. Every solve is checked
/// against a relative residual bound of 1e-10 (after one step of iterative
/// refinement when needed) and throws LinearSolverError otherwise.
class SpdSolver {
 public:
  /// Throws SingularSystem when the factorization hits a non-positive pivot.
  explicit SpdSolver(SpMat A);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::Index size() const { return A_.rows(); }
  const SpMat& matrix() const { return A_; }

  static constexpr double kResidualTolerance = 1e-10;

 private:
  SpMat A_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

}  // namespace thermotop
