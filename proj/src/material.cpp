#include "thermotop/material.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "thermotop/errors.hpp"

namespace thermotop {

namespace {

// Filtered densities may land a few ulps outside the box.
constexpr double kBoundSlack = 1e-12;

void check_rho(double rho, const SimpParams& params) {
  if (!(rho >= params.rho_min - kBoundSlack && rho <= 1.0 + kBoundSlack)) {
    throw InvalidArgument("density " + std::to_string(rho) + " outside [" +
                          std::to_string(params.rho_min) + ", 1]");
  }
}

}  // namespace

void BaseMaterial::validate() const {
  if (!(E0 > 0.0)) throw InvalidArgument("E0 must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw InvalidArgument("nu must lie in [0, 0.5)");
  if (!(k0 > 0.0)) throw InvalidArgument("k0 must be positive");
  if (!(alpha0 >= 0.0)) throw InvalidArgument("alpha0 must be non-negative");
  if (!(thickness > 0.0)) throw InvalidArgument("thickness must be positive");
}

void SimpParams::validate() const {
  if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
  if (!(p_k >= 1.0)) throw InvalidArgument("p_k must be >= 1");
  if (!(rho_min > 0.0 && rho_min < 1.0)) throw InvalidArgument("rho_min must lie in (0, 1)");
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double DensityField::mean() const { return thermotop::mean(values); }

void DensityField::check_bounds() const {
  for (size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= rho_min - kBoundSlack && values[i] <= 1.0 + kBoundSlack)) {
      throw InvalidArgument("density[" + std::to_string(i) + "] = " + std::to_string(values[i]) +
                            " outside bounds");
    }
  }
}

double simp_stiffness_scale(double rho, const SimpParams& params) {
  check_rho(rho, params);
  return std::pow(rho, params.p);
}

double simp_stiffness_derivative(double rho, const SimpParams& params) {
  check_rho(rho, params);
  return params.p * std::pow(rho, params.p - 1.0);
}

double simp_conductivity_scale(double rho, const SimpParams& params) {
  check_rho(rho, params);
  return std::pow(rho, params.p_k);
}

double simp_conductivity_derivative(double rho, const SimpParams& params) {
  check_rho(rho, params);
  return params.p_k * std::pow(rho, params.p_k - 1.0);
}

Eigen::Matrix3d plane_stress_tensor(const BaseMaterial& mat) {
  const double c = mat.E0 / (1.0 - mat.nu * mat.nu);
  Eigen::Matrix3d D;
  D << c, c * mat.nu, 0.0,  //
      c * mat.nu, c, 0.0,   //
      0.0, 0.0, c * (1.0 - mat.nu) / 2.0;
  return D;
}

Eigen::Vector3d isotropic_expansion(const BaseMaterial& mat) {
  return {mat.alpha0, mat.alpha0, 0.0};
}

HomogenizedProps base_props(const BaseMaterial& mat) {
  HomogenizedProps props;
  props.E = plane_stress_tensor(mat);
  props.kappa = mat.k0 * Eigen::Matrix2d::Identity();
  props.alpha = isotropic_expansion(mat);
  props.beta = props.E * props.alpha;
  return props;
}

}  // namespace thermotop
