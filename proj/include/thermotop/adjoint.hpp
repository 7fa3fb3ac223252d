#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thermotop/elastic.hpp"
#include "thermotop/grid.hpp"
#include "thermotop/material.hpp"
#include "thermotop/rve.hpp"
#include "thermotop/thermal.hpp"

namespace thermotop {

/// Everything about the macro problem except the design.
struct MacroModel {
  Grid grid{1, 1, 1.0, 1.0};
  BaseMaterial base;
  SimpParams simp;
  HeatInput heat;
  DissipationParams diss;
  MechanicalBC bc;
};

/// One-way coupled analysis: thermal solve, then thermoelastic solve with the
/// stress-free reference at the ambient temperature.
struct ForwardState {
  std::vector<double> rho;
  HomogenizedProps props;
  ThermalSystem thermal;
  ThermalState ts;
  ElasticSystem es;
  ElasticState el;

  double u_out() const { return el.u_out; }
};

ForwardState analyze(const MacroModel& model, std::span<const double> rho, const HomogenizedProps& props,
                     std::optional<std::span<const double>> frozen_weights = {});

struct AdjointPair {
  Eigen::VectorXd lambda_u;  // full-length elastic adjoint
  Eigen::VectorXd lambda_t;  // full-length thermal adjoint (zero on Dirichlet nodes)
};

/// lambda_u solves K lambda_u = L; lambda_t solves K_T(T*)^T lambda_t =
/// (dF_th/dT)^T lambda_u. Exposure weights are treated as constants.
AdjointPair solve_adjoints(const MacroModel& model, const ForwardState& fwd, const Eigen::VectorXd& L);
AdjointPair solve_adjoints(const MacroModel& model, const ForwardState& fwd);

/// (dF_th/dT)^T v over all nodes.
Eigen::VectorXd thermal_load_temperature_transpose(const MacroModel& model, const ForwardState& fwd,
                                                   const Eigen::VectorXd& v);

/// du_out / drho_e for every macro element (physical densities).
std::vector<double> macro_sensitivity(const MacroModel& model, const ForwardState& fwd,
                                      const AdjointPair& adj);

/// Macro-field contractions the micro chain needs; each term of the micro
/// sensitivity is linear in one homogenized quantity.
struct MicroChainAggregates {
  Eigen::Matrix3d stiffness = Eigen::Matrix3d::Zero();  // sum rho^p int (B lambda)(B U)^T
  Eigen::Vector3d load = Eigen::Vector3d::Zero();       // sum rho^p dT int B lambda
  Eigen::Matrix2d conduction = Eigen::Matrix2d::Zero(); // sum rho^pk int grad(lambda_t) grad(T)^T
};

MicroChainAggregates micro_chain_aggregates(const MacroModel& model, const ForwardState& fwd,
                                            const AdjointPair& adj);

struct MicroChainOptions {
  bool stiffness_term = true;
  bool expansion_modulus_term = true;  // dE_H alpha_H part of dF_th
  bool expansion_alpha_term = true;    // E_H dalpha_H part of dF_th
  bool conduction_term = true;
};

/// du_out / drho_m for every micro element, summed over all macro elements.
std::vector<double> micro_sensitivity(const MacroModel& model, const ForwardState& fwd,
                                      const AdjointPair& adj, const RveDerivatives& rve,
                                      const MicroChainOptions& options = {});

}  // namespace thermotop
