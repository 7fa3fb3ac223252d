#pragma once

#include <optional>
#include <vector>

#include "thermotop/adjoint.hpp"
#include "thermotop/config.hpp"

namespace thermotop {

struct GradientComparison {
  std::vector<double> adjoint;
  std::vector<double> finite_difference;
  /// max_e |adj_e - fd_e| / max(|fd_e|, floor * max|fd|)
  double max_relative_error = 0.0;
};

double max_relative_error(const std::vector<double>& adjoint, const std::vector<double>& fd, double floor = 1e-3);

/// Central differences of u_out in every macro density, exposure weights
/// frozen at the unperturbed design.
GradientComparison check_macro_gradient(const MacroModel& model, const std::vector<double>& rho,
                                        const HomogenizedProps& props, double step = 1e-5);

/// Central differences through re-homogenization of the cell.
GradientComparison check_micro_gradient(const MacroModel& model, const std::vector<double>& rho_macro,
                                        const MicroCell& cell, double step = 1e-5);

struct ValidationReport {
  GradientComparison macro;
  std::optional<GradientComparison> micro;
};

/// Gradient check on a reduced n x n mesh (n x n cell) with the physics of cfg
/// and a reproducible random design.
ValidationReport validate_gradients(const RunConfig& cfg, int n = 8, unsigned seed = 7);

}  // namespace thermotop
