#pragma once

#include <array>

#include <Eigen/Dense>

namespace thermotop {

using Matrix8d = Eigen::Matrix<double, 8, 8>;
using Vector8d = Eigen::Matrix<double, 8, 1>;
using StrainMatrix = Eigen::Matrix<double, 3, 8>;
using GradMatrix = Eigen::Matrix<double, 2, 4>;

/// Rectangular bilinear quad with 2x2 Gauss quadrature. Local nodes run
/// counterclockwise from the lower-left corner; displacement DOFs are
/// interleaved (ux0, uy0, ux1, ...). Strains use engineering shear.
struct Q4Rect {
  double dx = 1.0;
  double dy = 1.0;
  std::array<StrainMatrix, 4> B;  // strain-displacement per Gauss point
  std::array<GradMatrix, 4> G;    // shape-function gradients per Gauss point
  double weight = 0.0;            // Gauss weight times Jacobian determinant

  static Q4Rect make(double dx, double dy);
};

Matrix8d element_stiffness_q4(const Eigen::Matrix3d& E_voigt, double dx, double dy, double thickness);

/// Equivalent nodal forces of the eigenstrain alpha_vec * dT.
Vector8d element_thermal_load(const Eigen::Matrix3d& E_voigt, const Eigen::Vector3d& alpha_vec,
                              double dT, double dx, double dy, double thickness);

Eigen::Matrix4d element_conduction_q4(const Eigen::Matrix2d& kappa, double dx, double dy,
                                      double thickness);

/// Integral of B^T over the element (8x3); the thermal load is this times the
/// thermal stress vector.
Eigen::Matrix<double, 8, 3> integrated_bt(const Q4Rect& q, double thickness);

}  // namespace thermotop
