#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thermotop/grid.hpp"
#include "thermotop/linalg.hpp"
#include "thermotop/material.hpp"
#include "thermotop/q4.hpp"

namespace thermotop {

struct FixedNode {
  int node = 0;
  bool fix_x = true;
  bool fix_y = true;
};

/// Output port: displacement measured along `direction` at `node`, loaded by
/// an artificial spring of stiffness k_out.
struct OutputSpec {
  int node = 0;
  std::array<double, 2> direction{1.0, 0.0};
  double k_out = 0.01;
};

struct MechanicalBC {
  std::vector<FixedNode> fixed;
  OutputSpec output;

  void validate(const Grid& grid) const;
};

/// Both DOFs fixed at the left-bottom and left-top corners; output at the
/// right-edge midpoint pointing in +x.
MechanicalBC default_mechanical_bc(const Grid& grid, double k_out = 0.01);

struct ElasticSystem {
  SpMat K_free;              // stiffness on free DOFs, output spring included
  Eigen::VectorXd F_th;      // full-length thermal load
  std::vector<int> free_index;  // dof -> free row, or -1
  std::vector<int> free_dofs;
  Eigen::Matrix<double, 8, 8> K0;    // unit-density element stiffness
  Eigen::Matrix<double, 8, 1> f0;    // unit-density, unit-dT element load
  std::vector<double> dT_elem;       // nodal-mean temperature rise per element
};

struct ElasticState {
  Eigen::VectorXd U;
  Eigen::VectorXd F_th;
  double u_out = 0.0;
  double relative_residual = 0.0;
  std::shared_ptr<const SpdSolver> solver;  // factorization, reused by the adjoint
};

/// Element stiffness rho^p K0(E_eff) and element thermal load
/// rho^p dT_e integral(B^T E_eff alpha_eff). Fixed DOFs are eliminated.
ElasticSystem assemble_elastic(const Grid& grid, std::span<const double> rho,
                               const Eigen::Matrix3d& E_eff, const Eigen::Vector3d& alpha_eff,
                               const Eigen::VectorXd& T, double T_ref, const SimpParams& simp,
                               const BaseMaterial& base, const MechanicalBC& bcs);

ElasticState solve_elastic(const ElasticSystem& system, const OutputSpec& output);

double output_displacement(const Eigen::VectorXd& U, const OutputSpec& output);

/// Full-length load vector selecting the output displacement.
Eigen::VectorXd output_selector(const Grid& grid, const OutputSpec& output);

/// Per-element nodal mean of (T - T_ref).
std::vector<double> element_temperature_rise(const Grid& grid, const Eigen::VectorXd& T, double T_ref);

}  // namespace thermotop
