#include "thermotop/q4.hpp"

#include <cmath>

namespace thermotop {

Q4Rect Q4Rect::make(double dx, double dy) {
  Q4Rect q;
  q.dx = dx;
  q.dy = dy;
  const double g = 1.0 / std::sqrt(3.0);
  const double xi_n[4] = {-1.0, 1.0, 1.0, -1.0};
  const double eta_n[4] = {-1.0, -1.0, 1.0, 1.0};
  const double gp[4][2] = {{-g, -g}, {g, -g}, {g, g}, {-g, g}};
  for (int k = 0; k < 4; ++k) {
    const double xi = gp[k][0];
    const double eta = gp[k][1];
    GradMatrix grad;
    for (int a = 0; a < 4; ++a) {
      grad(0, a) = 0.25 * xi_n[a] * (1.0 + eta_n[a] * eta) * 2.0 / dx;
      grad(1, a) = 0.25 * eta_n[a] * (1.0 + xi_n[a] * xi) * 2.0 / dy;
    }
    StrainMatrix b = StrainMatrix::Zero();
    for (int a = 0; a < 4; ++a) {
      b(0, 2 * a) = grad(0, a);
      b(1, 2 * a + 1) = grad(1, a);
      b(2, 2 * a) = grad(1, a);
      b(2, 2 * a + 1) = grad(0, a);
    }
    q.G[k] = grad;
    q.B[k] = b;
  }
  q.weight = dx * dy / 4.0;
  return q;
}

Matrix8d element_stiffness_q4(const Eigen::Matrix3d& E_voigt, double dx, double dy, double thickness) {
  const Q4Rect q = Q4Rect::make(dx, dy);
  Matrix8d K = Matrix8d::Zero();
  for (int k = 0; k < 4; ++k) K += q.B[k].transpose() * E_voigt * q.B[k];
  K *= q.weight * thickness;
  return 0.5 * (K + K.transpose());
}

Eigen::Matrix<double, 8, 3> integrated_bt(const Q4Rect& q, double thickness) {
  Eigen::Matrix<double, 8, 3> bt = Eigen::Matrix<double, 8, 3>::Zero();
  for (int k = 0; k < 4; ++k) bt += q.B[k].transpose();
  return bt * (q.weight * thickness);
}

Vector8d element_thermal_load(const Eigen::Matrix3d& E_voigt, const Eigen::Vector3d& alpha_vec,
                              double dT, double dx, double dy, double thickness) {
  const Q4Rect q = Q4Rect::make(dx, dy);
  return integrated_bt(q, thickness) * (E_voigt * alpha_vec) * dT;
}

Eigen::Matrix4d element_conduction_q4(const Eigen::Matrix2d& kappa, double dx, double dy,
                                      double thickness) {
  const Q4Rect q = Q4Rect::make(dx, dy);
  Eigen::Matrix4d K = Eigen::Matrix4d::Zero();
  for (int k = 0; k < 4; ++k) K += q.G[k].transpose() * kappa * q.G[k];
  K *= q.weight * thickness;
  return 0.5 * (K + K.transpose());
}

}  // namespace thermotop
