#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "thermotop/errors.hpp"
#include "thermotop/thermal.hpp"

using namespace thermotop;

namespace {

constexpr double kSigma = 5.67e-8;

struct Problem {
  Grid grid{1, 1, 1.0, 1.0};
  std::vector<double> rho;
  HeatInput heat;
  DissipationParams diss;
};

ThermalSystem assemble(const Problem& p) {
  return assemble_thermal_system(p.grid, p.rho, Eigen::Matrix2d::Identity(), SimpParams{}, BaseMaterial{}, p.heat,
                                 p.diss);
}

// Bisection on a monotone scalar function, in long double.
long double bisect(const std::function<long double(long double)>& f, long double lo, long double hi) {
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (f(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5L * (lo + hi);
}

}  // namespace

TEST_CASE("flat beam profile") {
  CHECK(flat_intensity(0.0, 2.0, 10.0) == 2.0);
  CHECK(flat_intensity(10.0, 2.0, 10.0) == 2.0);
  CHECK(flat_intensity(20.0, 2.0, 10.0) == 0.0);
}

TEST_CASE("gaussian beam profile") {
  CHECK(gaussian_intensity(0.0, 3.0, 5.0) == 3.0);
  CHECK(gaussian_intensity(5.0, 1.0, 5.0) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(gaussian_intensity(15.0, 1.0, 5.0) < 1.3e-4);
}

TEST_CASE("parabolic edge temperature") {
  CHECK(parabolic_edge_temperature(0.0, 100.0, 323.15, 373.15) == doctest::Approx(323.15));
  CHECK(parabolic_edge_temperature(50.0, 100.0, 323.15, 373.15) == doctest::Approx(373.15));
  CHECK(parabolic_edge_temperature(25.0, 100.0, 323.15, 373.15) == doctest::Approx(360.65));
  CHECK(parabolic_edge_temperature(100.0, 100.0, 323.15, 373.15) == doctest::Approx(323.15));
  CHECK_THROWS_AS(parabolic_edge_temperature(-0.1, 100.0, 323.15, 373.15), InvalidArgument);
  CHECK_THROWS_AS(parabolic_edge_temperature(100.1, 100.0, 323.15, 373.15), InvalidArgument);
}

TEST_CASE("exposure weight") {
  CHECK(exposure_weight(1.0, 0.0, 1.0) == 1.0);
  CHECK(exposure_weight(1.0, 1.0, 1.0) == 0.0);
  CHECK(exposure_weight(0.5, 0.5, 1.0) == doctest::Approx(0.25));
}

TEST_CASE("convection and radiation fluxes") {
  CHECK(convection_flux(283.15, 283.15, 1.0, 1.0) == 0.0);
  CHECK(convection_flux(373.15, 283.15, 3e-7, 1.0) == doctest::Approx(2.7e-5).epsilon(1e-12));
  CHECK(convection_flux(500.0, 283.15, 0.0, 1.0) == 0.0);
  CHECK(radiation_flux(283.15, 283.15, 1.0, kSigma, 1.0) == 0.0);
  CHECK(radiation_flux(400.0, 283.15, 0.0, kSigma, 1.0) == 0.0);
  // Independent evaluation with long double powers.
  const long double T = 373.15L, Ts = 283.15L;
  const long double ref = 5.67e-8L * (T * T * T * T - Ts * Ts * Ts * Ts);
  CHECK(radiation_flux(373.15, 283.15, 1.0, kSigma, 1.0) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
  CHECK(radiation_flux(373.15, 283.15, 1.0, kSigma, 1.0) == doctest::Approx(734.8).epsilon(1e-3));
  CHECK_THROWS_AS(radiation_flux(0.0, 283.15, 1.0, kSigma, 1.0), InvalidArgument);
  CHECK_THROWS_AS(radiation_flux(-5.0, 283.15, 1.0, kSigma, 1.0), InvalidArgument);
}

TEST_CASE("constant Dirichlet field is an equilibrium") {
  Problem p;
  p.grid = build_grid(4, 3, 1.0, 1.0);
  p.rho.assign(12, 0.7);
  p.heat.mode = HeatMode::dirichlet_nodes;
  for (const auto& f : faces(p.grid)) {
    if (f.neighbor != kDomainBoundary) continue;
    for (int n : f.nodes) p.heat.fixed_nodes.emplace_back(n, 350.0);
  }
  const ThermalSystem sys = assemble(p);
  const Eigen::VectorXd T = Eigen::VectorXd::Constant(p.grid.node_count(), 350.0);
  CHECK(sys.residual(T).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("conduction rod has a linear profile and converges in one Newton step") {
  Problem p;
  const int n = 10;
  p.grid = build_grid(n, 1, 1.0, 1.0);
  p.rho.assign(n, 1.0);
  p.heat.mode = HeatMode::dirichlet_nodes;
  p.heat.fixed_nodes = {{p.grid.node(0, 0), 300.0}, {p.grid.node(0, 1), 300.0},
                        {p.grid.node(n, 0), 400.0}, {p.grid.node(n, 1), 400.0}};
  const ThermalState st = solve_thermal(assemble(p));
  CHECK(st.newton_iters == 1);
  for (int node = 0; node < p.grid.node_count(); ++node) {
    const double x = p.grid.node_position(node)[0];
    CHECK(std::abs(st.T[node] - (300.0 + 10.0 * x)) < 1e-10);
  }
}

TEST_CASE("single radiating element matches a scalar root finder") {
  Problem p;
  p.rho = {1.0};
  p.heat.mode = HeatMode::laser_flat;
  p.heat.I0 = 500.0;
  p.diss.radiation = true;
  p.diss.eps = 1.0;
  const ThermalSystem sys = assemble(p);
  const ThermalState st = solve_thermal(sys);
  // Four exposed unit faces emit; the whole beam lands on the element.
  const long double Q = 500.0L, Ts = 283.15L;
  const long double T_ref = bisect(
      [&](long double T) { return 1.0L * 5.67e-8L * 4.0L * (T * T * T * T - Ts * Ts * Ts * Ts) - Q; }, Ts, 5000.0L);
  for (int node = 0; node < 4; ++node) CHECK(std::abs(st.T[node] - static_cast<double>(T_ref)) < 1e-8);
  CHECK(energy_balance(sys, st.T).relative_error < 1e-8);
}

TEST_CASE("linear problems converge in one step, radiation needs more") {
  Problem p;
  p.grid = build_grid(6, 6, 1.0, 1.0);
  p.rho.assign(36, 0.8);
  p.diss.h = 0.01;
  CHECK(solve_thermal(assemble(p)).newton_iters == 1);
  p.diss.radiation = true;
  const ThermalState st = solve_thermal(assemble(p));
  CHECK(st.newton_iters > 1);
  CHECK(st.residual_norm < 1e-10);
}

TEST_CASE("raising convection never raises the peak interior temperature") {
  Problem p;
  p.grid = build_grid(20, 20, 1.0, 1.0);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  p.rho.resize(400);
  for (double& r : p.rho) r = u(rng);
  const auto peak = [&](double h) {
    p.diss.h = h;
    const ThermalState st = solve_thermal(assemble(p));
    double m = 0.0;
    for (int j = 1; j < 20; ++j)
      for (int i = 1; i < 20; ++i) m = std::max(m, st.T[p.grid.node(i, j)]);
    return m;
  };
  const double t0 = peak(0.0);
  const double t1 = peak(3e-7);
  const double t2 = peak(0.05);
  CHECK(t1 <= t0);
  CHECK(t2 < t1);
}

TEST_CASE("energy balance closes for every heating mode") {
  Problem p;
  p.grid = build_grid(12, 8, 1.0, 1.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  p.rho.resize(96);
  for (double& r : p.rho) r = u(rng);
  p.diss.h = 0.02;
  p.diss.radiation = true;
  for (auto mode : {HeatMode::dirichlet_parabolic, HeatMode::laser_flat, HeatMode::laser_gaussian}) {
    for (auto scope : {RadiationScope::outer_boundary_only, RadiationScope::all_exposed_faces}) {
      p.heat.mode = mode;
      p.heat.Rs = 4.0;
      p.heat.I0 = 20.0;
      p.diss.scope = scope;
      const ThermalSystem sys = assemble(p);
      const ThermalState st = solve_thermal(sys);
      const EnergyBalance b = energy_balance(sys, st.T);
      CHECK(b.relative_error < 1e-8);
      CHECK(b.convective_loss > 0.0);
    }
  }
}

TEST_CASE("tangent is symmetric and matches finite differences of the residual") {
  Problem p;
  p.grid = build_grid(5, 4, 1.0, 1.0);
  p.rho.assign(20, 0.6);
  p.rho[7] = 1.0;
  p.diss.h = 0.1;
  p.diss.radiation = true;
  p.diss.scope = RadiationScope::all_exposed_faces;
  const ThermalSystem sys = assemble(p);
  Eigen::VectorXd T = sys.initial_guess();
  for (int n : sys.free_nodes()) T[n] += 10.0 + n;
  const Eigen::MatrixXd K = Eigen::MatrixXd(sys.tangent_free(T));
  CHECK((K - K.transpose()).norm() < 1e-12 * K.norm());
  const double h = 1e-4;
  for (size_t c = 0; c < sys.free_nodes().size(); ++c) {
    Eigen::VectorXd Tp = T, Tm = T;
    Tp[sys.free_nodes()[c]] += h;
    Tm[sys.free_nodes()[c]] -= h;
    const Eigen::VectorXd d = (sys.residual(Tp) - sys.residual(Tm)) / (2 * h);
    for (size_t r = 0; r < sys.free_nodes().size(); ++r) {
      CHECK(d[sys.free_nodes()[r]] == doctest::Approx(K(r, c)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("assembly order does not change the solution") {
  Problem p;
  p.grid = build_grid(10, 10, 1.0, 1.0);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  p.rho.resize(100);
  for (double& r : p.rho) r = u(rng);
  p.diss.h = 0.01;
  p.diss.radiation = true;
  const ThermalState a = solve_thermal(assemble(p));
  std::vector<int> order(100);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const ThermalSystem sys = assemble_thermal_system(p.grid, p.rho, Eigen::Matrix2d::Identity(), SimpParams{},
                                                    BaseMaterial{}, p.heat, p.diss, std::nullopt, order);
  const ThermalState b = solve_thermal(sys);
  CHECK((a.T - b.T).cwiseAbs().maxCoeff() < 1e-12 * a.T.cwiseAbs().maxCoeff() + 1e-12);
}

TEST_CASE("discrete maximum principle on a solid plate") {
  Problem p;
  p.grid = build_grid(16, 16, 1.0, 1.0);
  p.rho.assign(256, 1.0);
  const ThermalState st = solve_thermal(assemble(p));
  CHECK(st.T.minCoeff() >= 323.15 - 1e-9);
  CHECK(st.T.maxCoeff() <= 373.15 + 1e-9);
}

TEST_CASE("problems without a heat sink are ill posed") {
  Problem p;
  p.rho = {1.0};
  p.heat.mode = HeatMode::laser_gaussian;
  CHECK_THROWS_AS(assemble(p), IllPosedSystem);
}
