#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thermotop/grid.hpp"
#include "thermotop/linalg.hpp"
#include "thermotop/material.hpp"

namespace thermotop {

/// Master-slave identification of a periodic cell. Right-edge nodes map to the
/// left edge, top to bottom (corners collapse onto node 0). Master node 0 is
/// pinned in every field to remove the constant / rigid-translation nullspace.
struct PeriodicDofMap {
  std::vector<int> master;     // node -> master node
  std::vector<int> scalar_eq;  // node -> scalar equation, -1 when pinned
  int scalar_free = 0;
  std::vector<int> vector_eq;  // 2*node + c -> vector equation, -1 when pinned
  int vector_free = 0;
  int independent_nodes = 0;
};

PeriodicDofMap periodic_dof_map(const Grid& grid);

/// Periodic unit cell normalized to unit area.
struct MicroCell {
  Grid grid;
  std::vector<double> rho;
  SimpParams simp;
  BaseMaterial base;

  /// nx x ny cell with element size 1/nx by 1/ny.
  static MicroCell unit(int nx, int ny, std::vector<double> rho, const SimpParams& simp = {},
                        const BaseMaterial& base = {});
  double area() const { return grid.width() * grid.height(); }
};

/// Characteristic (fluctuation) fields, expanded to full node-length vectors.
/// chi[k] answers unit test strain k (11, 22, 12); chi_th the unit eigenstrain
/// alpha0 (1, 1, 0); psi[i] the unit temperature gradient along axis i.
struct CharStrainFields {
  std::array<Eigen::VectorXd, 3> chi;
  Eigen::VectorXd chi_th;
  std::array<Eigen::VectorXd, 2> psi;
  std::shared_ptr<const SpdSolver> elastic_solver;
  PeriodicDofMap dofs;
};

struct Homogenization {
  HomogenizedProps props;
  CharStrainFields fields;
};

/// Solves the three unit-strain cell problems and returns E_H.
/// Throws DegenerateCell for an all-void cell.
Eigen::Matrix3d homogenize_elastic(const MicroCell& cell, CharStrainFields& fields);

Eigen::Matrix2d homogenize_conductivity(const MicroCell& cell, CharStrainFields& fields);

struct ThermalHomogenization {
  Eigen::Vector3d beta;
  Eigen::Vector3d alpha;
};

/// Requires homogenize_elastic on the same fields (reuses its factorization).
ThermalHomogenization homogenize_thermal(const MicroCell& cell, CharStrainFields& fields,
                                         const Eigen::Matrix3d& E_H);

Homogenization homogenize(const MicroCell& cell);

std::vector<Eigen::Matrix3d> d_EH_d_rhom(const MicroCell& cell, const CharStrainFields& fields);

struct ThermalDerivatives {
  std::vector<Eigen::Vector3d> dbeta;
  std::vector<Eigen::Vector3d> dalpha;
};

/// dbeta from the eigenstrain and thermal-fluctuation terms; dalpha from
/// E_H^{-1} (dbeta - dE_H alpha_H).
ThermalDerivatives d_betaH_d_rhom(const MicroCell& cell, const CharStrainFields& fields,
                                  const HomogenizedProps& props,
                                  const std::vector<Eigen::Matrix3d>& dE);

std::vector<Eigen::Matrix2d> d_kappaH_d_rhom(const MicroCell& cell, const CharStrainFields& fields);

struct RveDerivatives {
  std::vector<Eigen::Matrix3d> dE;
  std::vector<Eigen::Vector3d> dbeta;
  std::vector<Eigen::Vector3d> dalpha;
  std::vector<Eigen::Matrix2d> dkappa;
};

RveDerivatives rve_derivatives(const MicroCell& cell, const Homogenization& hom);

}  // namespace thermotop
