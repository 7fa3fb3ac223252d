#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "thermotop/grid.hpp"

namespace thermotop {

struct OptimizerSettings {
  double r_min = 2.5;  // in element widths
  double move = 0.2;
  double eta = 0.5;
  int max_iters = 200;
  double tol_change = 0.01;
  double volume_tol = 1e-4;

  void validate() const;
};

/// Linear cone filter rho~_e = sum_j w_ej rho_j / sum_j w_ej with
/// w_ej = max(0, r_min - dist(e, j)), distances measured between element
/// centers in element units. With periodic=true distances wrap around the
/// grid, which is what a unit cell needs.
class DensityFilter {
 public:
  DensityFilter(const Grid& grid, double r_min, bool periodic = false);

  std::vector<double> apply(std::span<const double> x) const;
  /// Chain rule for sensitivities: d/dx = H^T d/drho~.
  std::vector<double> apply_transpose(std::span<const double> g) const;

  const Eigen::SparseMatrix<double, Eigen::RowMajor>& weights() const { return H_; }
  bool identity() const { return identity_; }

 private:
  Eigen::SparseMatrix<double, Eigen::RowMajor> H_;
  bool identity_ = false;
};

std::vector<double> density_filter(std::span<const double> field, const Grid& grid, double r_min,
                                   bool periodic = false);

/// Volume seen by the constraint, evaluated on a candidate design.
using VolumeFn = std::function<double(std::span<const double>)>;

struct OcResult {
  std::vector<double> rho;
  double lambda = 0.0;  // 0 when the constraint is inactive
  double volume = 0.0;
  bool constraint_active = true;
};

/// Optimality-criteria step. sens is the gradient of the objective being
/// minimized (pass -du_out/drho to maximize u_out); the element with the most
/// negative entry gains the most material.
///
/// Sensitivities are shifted so the largest becomes zero, normalized by their
/// largest magnitude and lowered by 1e-9, which leaves every effective
/// gradient strictly negative and makes the step independent of the scale of
/// sens. The multiplier is bisected in log space; without a volume function
/// the plain mean of the design is used.
OcResult oc_update(std::span<const double> rho, std::span<const double> sens, std::span<const double> dV,
                   double v_target, const OptimizerSettings& settings, double rho_min,
                   const VolumeFn& volume = {});

enum class StopTrigger { none, change, budget };

struct ConvergenceDecision {
  bool done = false;
  StopTrigger trigger = StopTrigger::none;
  double max_change = 0.0;
};

ConvergenceDecision converged(std::span<const double> rho_prev, std::span<const double> rho_new, int iter,
                              const OptimizerSettings& settings);

double max_abs_change(std::span<const double> a, std::span<const double> b);

}  // namespace thermotop
