#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "thermotop/grid.hpp"
#include "thermotop/linalg.hpp"
#include "thermotop/material.hpp"

namespace thermotop {

enum class HeatMode {
  dirichlet_parabolic,  // parabolic temperature profile on the left edge
  laser_flat,
  laser_gaussian,
  dirichlet_nodes,  // explicit node/value list (analytic test problems)
};

struct HeatInput {
  HeatMode mode = HeatMode::dirichlet_parabolic;
  double T_min = 323.15;  // K, at the left-edge corners
  double T_max = 373.15;  // K, at the left-edge midpoint
  double I0 = 1.0;
  double Rs = 10.0;  // effective beam radius (um)
  double Av = 1.0;
  std::optional<std::array<double, 2>> center;  // defaults to the left-edge midpoint
  std::vector<std::pair<int, double>> fixed_nodes;  // used by HeatMode::dirichlet_nodes

  void validate() const;
};

enum class RadiationScope { outer_boundary_only, all_exposed_faces };

struct DissipationParams {
  double h = 0.0;
  double T_s = 283.15;
  double eps = 1.0;
  double q_exposure = 1.0;
  bool radiation = false;
  RadiationScope scope = RadiationScope::outer_boundary_only;

  static constexpr double sigma = 5.67e-8;

  void validate() const;
};

struct ThermalState {
  Eigen::VectorXd T;
  double residual_norm = 0.0;  // relative, see solve_thermal
  int newton_iters = 0;
  bool tangent_available = false;
};

double flat_intensity(double r, double I0, double Rs);
double gaussian_intensity(double r, double I0, double Rs);

/// T(y) = T_max - (T_max - T_min) (2y/H - 1)^2 on 0 <= y <= H.
double parabolic_edge_temperature(double y, double H, double T_min, double T_max);

/// w = rho_e^q (1 - rho_n^q). Pass rho_n = 0 for faces on the domain boundary.
double exposure_weight(double rho_e, double rho_n, double q);

double convection_flux(double T, double T_s, double h, double A);
double radiation_flux(double T, double T_s, double eps, double sigma, double A);

/// Exposure weight of every face returned by faces(grid), in that order.
std::vector<double> exposure_weights(const Grid& grid, std::span<const double> rho, double q);

/// Steady heat balance R(T) = K_cond T + C_conv (T - T_s) + R_rad(T) - Q = 0
/// with lumped face terms on the face end nodes.
class ThermalSystem {
 public:
  const Grid& grid() const { return grid_; }
  double T_s() const { return T_s_; }

  /// Full-length residual; Dirichlet rows carry the boundary reaction.
  Eigen::VectorXd residual(const Eigen::VectorXd& T) const;
  /// Newton tangent restricted to free nodes.
  SpMat tangent_free(const Eigen::VectorXd& T) const;
  /// Ambient temperature everywhere with Dirichlet values imposed.
  Eigen::VectorXd initial_guess() const;

  const std::vector<int>& free_nodes() const { return free_nodes_; }
  const std::vector<int>& free_index() const { return free_index_; }
  const std::vector<int>& dirichlet_nodes() const { return dirichlet_nodes_; }
  const Eigen::VectorXd& dirichlet_values() const { return dirichlet_values_; }
  const SpMat& conduction() const { return K_cond_; }
  const Eigen::VectorXd& convection_coefficients() const { return conv_; }
  const Eigen::VectorXd& radiation_coefficients() const { return rad_; }
  const Eigen::VectorXd& source() const { return source_; }
  const std::vector<double>& face_weights() const { return face_weights_; }
  /// Scale used to normalize the Newton residual.
  double reference_load() const { return reference_load_; }

 private:
  friend ThermalSystem assemble_thermal_system(const Grid&, std::span<const double>,
                                               const Eigen::Matrix2d&, const SimpParams&,
                                               const BaseMaterial&, const HeatInput&,
                                               const DissipationParams&,
                                               std::optional<std::span<const double>>,
                                               std::span<const int>);
  explicit ThermalSystem(const Grid& grid) : grid_(grid) {}

  Grid grid_;
  SpMat K_cond_;
  SpMat K_ff_;
  Eigen::VectorXd conv_;
  Eigen::VectorXd rad_;
  Eigen::VectorXd source_;
  double T_s_ = 0.0;
  std::vector<int> dirichlet_nodes_;
  Eigen::VectorXd dirichlet_values_;  // full length, meaningful on Dirichlet nodes
  std::vector<int> free_nodes_;
  std::vector<int> free_index_;  // node -> free row, or -1
  std::vector<double> face_weights_;
  double reference_load_ = 1.0;
};

/// Element conduction scales as rho^p_k * kappa_eff. `frozen_weights`, when
/// given, replaces the density-derived exposure weights. `element_order`
/// permutes assembly order (must be a permutation of all elements if given).
ThermalSystem assemble_thermal_system(const Grid& grid, std::span<const double> rho,
                                      const Eigen::Matrix2d& kappa_eff, const SimpParams& simp,
                                      const BaseMaterial& base, const HeatInput& heat,
                                      const DissipationParams& diss,
                                      std::optional<std::span<const double>> frozen_weights = {},
                                      std::span<const int> element_order = {});

/// Damped Newton iteration. Converged when
/// ||R_free|| / max(1, ||reference load||) < 1e-10.
ThermalState solve_thermal(const ThermalSystem& system, Eigen::VectorXd T_init);
ThermalState solve_thermal(const ThermalSystem& system);

struct EnergyBalance {
  double source = 0.0;
  double dirichlet_inflow = 0.0;
  double convective_loss = 0.0;
  double radiative_loss = 0.0;
  double relative_error = 0.0;
};

EnergyBalance energy_balance(const ThermalSystem& system, const Eigen::VectorXd& T);

}  // namespace thermotop
