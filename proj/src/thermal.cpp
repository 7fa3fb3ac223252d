#include "thermotop/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thermotop/errors.hpp"
#include "thermotop/q4.hpp"

namespace thermotop {

void HeatInput::validate() const {
  if (!(T_min > 0.0) || !(T_max >= T_min)) throw InvalidArgument("heat input requires T_max >= T_min > 0");
  if ((mode == HeatMode::laser_flat || mode == HeatMode::laser_gaussian) && !(Rs > 0.0)) {
    throw InvalidArgument("laser beam radius Rs must be positive");
  }
}

void DissipationParams::validate() const {
  if (!(h >= 0.0)) throw InvalidArgument("convection coefficient h must be >= 0");
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidArgument("emissivity must lie in [0, 1]");
  if (!(T_s > 0.0)) throw InvalidArgument("ambient temperature must be positive");
  if (!(q_exposure > 0.0)) throw InvalidArgument("exposure exponent must be positive");
}

double flat_intensity(double r, double I0, double Rs) { return r <= Rs ? I0 : 0.0; }

double gaussian_intensity(double r, double I0, double Rs) { return I0 * std::exp(-(r * r) / (Rs * Rs)); }

double parabolic_edge_temperature(double y, double H, double T_min, double T_max) {
  if (!(y >= 0.0 && y <= H)) {
    throw InvalidArgument("edge coordinate " + std::to_string(y) + " outside [0, H]");
  }
  const double s = 2.0 * y / H - 1.0;
  return T_max - (T_max - T_min) * s * s;
}

double exposure_weight(double rho_e, double rho_n, double q) {
  return std::pow(rho_e, q) * (1.0 - std::pow(rho_n, q));
}

double convection_flux(double T, double T_s, double h, double A) { return h * A * (T - T_s); }

double radiation_flux(double T, double T_s, double eps, double sigma, double A) {
  if (!(T > 0.0) || !(T_s > 0.0)) throw InvalidArgument("radiation needs positive absolute temperatures");
  return eps * sigma * A * (std::pow(T, 4) - std::pow(T_s, 4));
}

std::vector<double> exposure_weights(const Grid& grid, std::span<const double> rho, double q) {
  const auto fs = faces(grid);
  std::vector<double> w(fs.size());
  for (size_t f = 0; f < fs.size(); ++f) {
    const double rn = fs[f].neighbor == kDomainBoundary ? 0.0 : rho[fs[f].neighbor];
    w[f] = exposure_weight(rho[fs[f].elem], rn, q);
  }
  return w;
}

ThermalSystem assemble_thermal_system(const Grid& grid, std::span<const double> rho,
                                      const Eigen::Matrix2d& kappa_eff, const SimpParams& simp,
                                      const BaseMaterial& base, const HeatInput& heat,
                                      const DissipationParams& diss,
                                      std::optional<std::span<const double>> frozen_weights,
                                      std::span<const int> element_order) {
  heat.validate();
  diss.validate();
  const int ne = grid.elem_count();
  const int nn = grid.node_count();
  if (static_cast<int>(rho.size()) != ne) throw InvalidArgument("density field size does not match grid");
  if ((kappa_eff - kappa_eff.transpose()).norm() > 1e-12 * kappa_eff.norm() ||
      Eigen::LLT<Eigen::Matrix2d>(kappa_eff).info() != Eigen::Success) {
    throw InvalidArgument("effective conductivity must be symmetric positive-definite");
  }
  if (!element_order.empty() && static_cast<int>(element_order.size()) != ne) {
    throw InvalidArgument("element order must list every element");
  }

  ThermalSystem sys(grid);
  sys.T_s_ = diss.T_s;

  const double t = base.thickness;
  const Eigen::Matrix4d Kc0 = element_conduction_q4(kappa_eff, grid.dx(), grid.dy(), t);
  std::vector<Triplet> trips;
  trips.reserve(16 * static_cast<size_t>(ne));
  for (int k = 0; k < ne; ++k) {
    const int e = element_order.empty() ? k : element_order[k];
    const double s = std::pow(rho[e], simp.p_k);
    const auto& n = grid.elem_nodes(e);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) trips.emplace_back(n[a], n[b], s * Kc0(a, b));
  }
  sys.K_cond_.resize(nn, nn);
  sys.K_cond_.setFromTriplets(trips.begin(), trips.end());

  // Face terms, lumped half-and-half on the face's end nodes.
  const auto fs = faces(grid);
  if (frozen_weights) {
    if (frozen_weights->size() != fs.size()) throw InvalidArgument("frozen weights must cover every face");
    sys.face_weights_.assign(frozen_weights->begin(), frozen_weights->end());
  } else {
    sys.face_weights_ = exposure_weights(grid, rho, diss.q_exposure);
  }
  sys.conv_ = Eigen::VectorXd::Zero(nn);
  sys.rad_ = Eigen::VectorXd::Zero(nn);
  const bool radiate = diss.radiation && diss.eps > 0.0;
  for (size_t f = 0; f < fs.size(); ++f) {
    const double A = sys.face_weights_[f] * fs[f].length * t;
    if (A == 0.0) continue;
    const bool on_boundary = fs[f].neighbor == kDomainBoundary;
    for (int node : fs[f].nodes) {
      sys.conv_[node] += 0.5 * diss.h * A;
      if (radiate && (on_boundary || diss.scope == RadiationScope::all_exposed_faces)) {
        sys.rad_[node] += 0.5 * diss.eps * DissipationParams::sigma * A;
      }
    }
  }

  sys.source_ = Eigen::VectorXd::Zero(nn);
  if (heat.mode == HeatMode::laser_flat || heat.mode == HeatMode::laser_gaussian) {
    const std::array<double, 2> c = heat.center.value_or(std::array<double, 2>{0.0, grid.height() / 2.0});
    for (int e = 0; e < ne; ++e) {
      const auto x = grid.centroid(e);
      const double r = std::hypot(x[0] - c[0], x[1] - c[1]);
      const double I = heat.mode == HeatMode::laser_flat ? flat_intensity(r, heat.I0, heat.Rs)
                                                         : gaussian_intensity(r, heat.I0, heat.Rs);
      const double Q = heat.Av * I * grid.elem_area() * t;
      for (int node : grid.elem_nodes(e)) sys.source_[node] += 0.25 * Q;
    }
  }

  sys.dirichlet_values_ = Eigen::VectorXd::Zero(nn);
  std::vector<char> fixed(nn, 0);
  if (heat.mode == HeatMode::dirichlet_parabolic) {
    for (int j = 0; j <= grid.ny(); ++j) {
      const int node = grid.node(0, j);
      fixed[node] = 1;
      sys.dirichlet_values_[node] =
          parabolic_edge_temperature(std::min(j * grid.dy(), grid.height()), grid.height(), heat.T_min, heat.T_max);
    }
  } else if (heat.mode == HeatMode::dirichlet_nodes) {
    for (auto [node, value] : heat.fixed_nodes) {
      if (node < 0 || node >= nn) throw InvalidArgument("Dirichlet node out of range");
      if (!(value > 0.0)) throw InvalidArgument("Dirichlet temperatures must be positive");
      fixed[node] = 1;
      sys.dirichlet_values_[node] = value;
    }
  }
  sys.free_index_.assign(nn, -1);
  for (int n = 0; n < nn; ++n) {
    if (fixed[n]) {
      sys.dirichlet_nodes_.push_back(n);
    } else {
      sys.free_index_[n] = static_cast<int>(sys.free_nodes_.size());
      sys.free_nodes_.push_back(n);
    }
  }
  if (sys.dirichlet_nodes_.empty() && diss.h == 0.0 && !radiate) {
    throw IllPosedSystem("thermal problem has no Dirichlet nodes, convection or radiation");
  }
  if (sys.dirichlet_nodes_.empty() && sys.conv_.sum() == 0.0 && sys.rad_.sum() == 0.0) {
    throw IllPosedSystem("thermal problem has no exposed surface to dissipate heat");
  }

  const int nf = static_cast<int>(sys.free_nodes_.size());
  std::vector<Triplet> ff;
  ff.reserve(sys.K_cond_.nonZeros());
  for (int col = 0; col < sys.K_cond_.outerSize(); ++col) {
    for (SpMat::InnerIterator it(sys.K_cond_, col); it; ++it) {
      const int r = sys.free_index_[it.row()];
      const int c = sys.free_index_[it.col()];
      if (r >= 0 && c >= 0) ff.emplace_back(r, c, it.value());
    }
  }
  sys.K_ff_.resize(nf, nf);
  sys.K_ff_.setFromTriplets(ff.begin(), ff.end());

  // Reference load: source + Dirichlet lifting + ambient terms on free rows.
  Eigen::VectorXd Td = Eigen::VectorXd::Zero(nn);
  for (int n : sys.dirichlet_nodes_) Td[n] = sys.dirichlet_values_[n];
  const Eigen::VectorXd lift = sys.K_cond_ * Td;
  const double Ts4 = std::pow(diss.T_s, 4);
  Eigen::VectorXd ref(nf);
  for (int k = 0; k < nf; ++k) {
    const int n = sys.free_nodes_[k];
    ref[k] = sys.source_[n] - lift[n] + sys.conv_[n] * diss.T_s + sys.rad_[n] * Ts4;
  }
  sys.reference_load_ = std::max(1.0, ref.norm());
  return sys;
}

Eigen::VectorXd ThermalSystem::residual(const Eigen::VectorXd& T) const {
  const double Ts4 = T_s_ * T_s_ * T_s_ * T_s_;
  Eigen::VectorXd R = K_cond_ * T - source_;
  for (Eigen::Index n = 0; n < T.size(); ++n) {
    const double Tn = T[n];
    R[n] += conv_[n] * (Tn - T_s_) + rad_[n] * (Tn * Tn * Tn * Tn - Ts4);
  }
  return R;
}

SpMat ThermalSystem::tangent_free(const Eigen::VectorXd& T) const {
  SpMat Kt = K_ff_;
  for (size_t k = 0; k < free_nodes_.size(); ++k) {
    const int n = free_nodes_[k];
    const double d = conv_[n] + 4.0 * rad_[n] * T[n] * T[n] * T[n];
    if (d != 0.0) Kt.coeffRef(static_cast<int>(k), static_cast<int>(k)) += d;
  }
  return Kt;
}

Eigen::VectorXd ThermalSystem::initial_guess() const {
  Eigen::VectorXd T = Eigen::VectorXd::Constant(grid_.node_count(), T_s_);
  for (int n : dirichlet_nodes_) T[n] = dirichlet_values_[n];
  return T;
}

namespace {

Eigen::VectorXd restrict_free(const ThermalSystem& sys, const Eigen::VectorXd& full) {
  Eigen::VectorXd r(sys.free_nodes().size());
  for (size_t k = 0; k < sys.free_nodes().size(); ++k) r[k] = full[sys.free_nodes()[k]];
  return r;
}

}  // namespace

ThermalState solve_thermal(const ThermalSystem& sys) { return solve_thermal(sys, sys.initial_guess()); }

ThermalState solve_thermal(const ThermalSystem& sys, Eigen::VectorXd T) {
  constexpr int kMaxIters = 50;
  constexpr int kMaxHalvings = 10;
  constexpr double kTol = 1e-10;

  if (T.size() != sys.grid().node_count()) throw InvalidArgument("initial temperature has wrong length");
  for (int n : sys.dirichlet_nodes()) T[n] = sys.dirichlet_values()[n];

  ThermalState state;
  const double ref = sys.reference_load();
  Eigen::VectorXd r = restrict_free(sys, sys.residual(T));
  double rnorm = r.norm();

  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analyzed = false;
  int iters = 0;
  while (rnorm / ref >= kTol) {
    if (iters == kMaxIters) {
      throw NonConvergence("thermal Newton did not converge in 50 iterations", rnorm / ref);
    }
    const SpMat Kt = sys.tangent_free(T);
    if (!analyzed) {
      ldlt.analyzePattern(Kt);
      analyzed = true;
    }
    ldlt.factorize(Kt);
    if (ldlt.info() != Eigen::Success) throw IllPosedSystem("thermal tangent factorization failed");
    const Eigen::VectorXd dT = ldlt.solve(-r);

    double step = 1.0;
    Eigen::VectorXd trial = T;
    Eigen::VectorXd r_trial;
    double trial_norm = 0.0;
    bool have_trial = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, step *= 0.5) {
      trial = T;
      bool positive = true;
      for (size_t k = 0; k < sys.free_nodes().size(); ++k) {
        const int n = sys.free_nodes()[k];
        trial[n] += step * dT[k];
        if (!(trial[n] > 0.0)) positive = false;
      }
      if (!positive) continue;
      r_trial = restrict_free(sys, sys.residual(trial));
      trial_norm = r_trial.norm();
      have_trial = true;
      if (trial_norm < rnorm) break;
    }
    if (!have_trial) throw DivergedState("Newton step produced non-positive absolute temperatures");
    T = trial;
    r = r_trial;
    rnorm = trial_norm;
    ++iters;
    if (!T.allFinite()) throw DivergedState("non-finite temperature in Newton iteration");
  }

  state.T = std::move(T);
  state.residual_norm = rnorm / ref;
  state.newton_iters = iters;
  state.tangent_available = true;
  return state;
}

EnergyBalance energy_balance(const ThermalSystem& sys, const Eigen::VectorXd& T) {
  EnergyBalance b;
  const Eigen::VectorXd R = sys.residual(T);
  const double Ts = sys.T_s();
  const double Ts4 = Ts * Ts * Ts * Ts;
  double dirichlet_abs = 0.0;
  for (int n : sys.dirichlet_nodes()) {
    b.dirichlet_inflow += R[n];
    dirichlet_abs += std::abs(R[n]);
  }
  b.source = sys.source().sum();
  for (Eigen::Index n = 0; n < T.size(); ++n) {
    b.convective_loss += sys.convection_coefficients()[n] * (T[n] - Ts);
    b.radiative_loss += sys.radiation_coefficients()[n] * (std::pow(T[n], 4) - Ts4);
  }
  const double imbalance = b.source + b.dirichlet_inflow - b.convective_loss - b.radiative_loss;
  const double scale = std::abs(b.source) + dirichlet_abs + std::abs(b.convective_loss) +
                       std::abs(b.radiative_loss);
  b.relative_error = scale > 0.0 ? std::abs(imbalance) / scale : std::abs(imbalance);
  return b;
}

}  // namespace thermotop
