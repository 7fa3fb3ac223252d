#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace thermotop {

/// Dimensionless base material; every constant defaults to unity except the
/// Poisson ratio.
struct BaseMaterial {
  double E0 = 1.0;
  double nu = 0.3;
  double k0 = 1.0;
  double alpha0 = 1.0;
  double thickness = 1.0;

  void validate() const;
};

struct SimpParams {
  double p = 3.0;    // stiffness and thermal-stress exponent
  double p_k = 3.0;  // conductivity exponent
  double rho_min = 1e-3;

  void validate() const;
};

/// Per-element relative densities of one scale together with the volume
/// target they are optimized against.
struct DensityField {
  std::vector<double> values;
  double rho_min = 1e-3;
  double target = 1.0;

  double mean() const;
  /// Throws InvalidArgument if any value lies outside [rho_min, 1].
  void check_bounds() const;
};

/// Effective material seen by the macro model: elastic tensor (Voigt, 3x3),
/// conductivity (2x2), thermal stress per kelvin and expansion vector.
struct HomogenizedProps {
  Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
  Eigen::Matrix2d kappa = Eigen::Matrix2d::Zero();
  Eigen::Vector3d beta = Eigen::Vector3d::Zero();
  Eigen::Vector3d alpha = Eigen::Vector3d::Zero();
};

double simp_stiffness_scale(double rho, const SimpParams& params);
double simp_stiffness_derivative(double rho, const SimpParams& params);
double simp_conductivity_scale(double rho, const SimpParams& params);
double simp_conductivity_derivative(double rho, const SimpParams& params);

Eigen::Matrix3d plane_stress_tensor(const BaseMaterial& mat);

/// Isotropic expansion vector (alpha0, alpha0, 0).
Eigen::Vector3d isotropic_expansion(const BaseMaterial& mat);

/// Properties of the solid base material expressed as HomogenizedProps, used by
/// the single-scale workflow.
HomogenizedProps base_props(const BaseMaterial& mat);

double mean(std::span<const double> values);

}  // namespace thermotop
