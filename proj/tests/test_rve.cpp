#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "thermotop/errors.hpp"
#include "thermotop/rve.hpp"

using namespace thermotop;

namespace {

std::vector<double> random_field(int n, unsigned seed, double lo = 0.1, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> r(n);
  for (double& v : r) v = u(rng);
  return r;
}

// Horizontal layers: lower half density a, upper half density b.
std::vector<double> laminate(int n, double a, double b) {
  std::vector<double> r(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) r[j * n + i] = j < n / 2 ? a : b;
  return r;
}

// Exact plane laminate with layer normal along y and equal volume fractions.
// Continuous: strain eps11 and tractions (sig22, sig12). Derived from the
// partition sigma_n = C_nt eps_t + C_nn eps_n per phase.
Eigen::Matrix3d laminate_oracle(const Eigen::Matrix3d& Ca, const Eigen::Matrix3d& Cb) {
  auto part = [](const Eigen::Matrix3d& C, double& ctt, Eigen::Vector2d& ctn, Eigen::Matrix2d& cnn) {
    ctt = C(0, 0);
    ctn << C(0, 1), C(0, 2);
    cnn << C(1, 1), C(1, 2), C(2, 1), C(2, 2);
  };
  double tta, ttb;
  Eigen::Vector2d tna, tnb;
  Eigen::Matrix2d nna, nnb;
  part(Ca, tta, tna, nna);
  part(Cb, ttb, tnb, nnb);
  const Eigen::Matrix2d Sa = nna.inverse(), Sb = nnb.inverse();
  const Eigen::Matrix2d S = 0.5 * (Sa + Sb);                   // <C_nn^-1>
  const Eigen::Vector2d M = 0.5 * (Sa * tna + Sb * tnb);       // <C_nn^-1 C_nt>
  const Eigen::Matrix2d Cnn = S.inverse();
  // sigma_n = Cnn (<eps_n> + M eps_t)
  const Eigen::Vector2d Cnt = Cnn * M;
  // <sigma_t> = <ctt - ctn C_nn^-1 cnt> eps_t + <ctn C_nn^-1> sigma_n
  const double A = 0.5 * ((tta - tna.dot(Sa * tna)) + (ttb - tnb.dot(Sb * tnb)));
  const Eigen::RowVector2d Bv = 0.5 * (tna.transpose() * Sa + tnb.transpose() * Sb);
  Eigen::Matrix3d E;
  E(0, 0) = A + Bv * Cnt;
  const Eigen::RowVector2d row = Bv * Cnn;
  E(0, 1) = row(0);
  E(0, 2) = row(1);
  E(1, 0) = Cnt(0);
  E(2, 0) = Cnt(1);
  E.block<2, 2>(1, 1) = Cnn;
  return E;
}

template <class F>
double fd(F&& f, std::vector<double> rho, int e, double h = 1e-5) {
  rho[e] += h;
  const double up = f(rho);
  rho[e] -= 2 * h;
  return (up - f(rho)) / (2 * h);
}

}  // namespace

TEST_CASE("periodic dof map counts") {
  const PeriodicDofMap m2 = periodic_dof_map(build_grid(2, 2, 0.5, 0.5));
  CHECK(m2.independent_nodes == 4);
  CHECK(m2.scalar_free == 3);
  CHECK(m2.vector_free == 6);
  CHECK(m2.master[2] == 0);  // node (2,0) -> (0,0)
  CHECK(m2.master[8] == 0);  // corner (2,2)
  CHECK(m2.master[5] == 3);  // (2,1) -> (0,1)
  const PeriodicDofMap m1 = periodic_dof_map(build_grid(1, 1, 1.0, 1.0));
  CHECK(m1.independent_nodes == 1);
  CHECK(m1.scalar_free == 0);
  CHECK(m1.vector_free == 0);
}

TEST_CASE("characteristic fields are periodic") {
  const MicroCell cell = MicroCell::unit(6, 6, random_field(36, 4));
  const Homogenization h = homogenize(cell);
  const auto& m = h.fields.dofs.master;
  for (int n = 0; n < cell.grid.node_count(); ++n) {
    for (int k = 0; k < 3; ++k) {
      CHECK(h.fields.chi[k][2 * n] == h.fields.chi[k][2 * m[n]]);
      CHECK(h.fields.chi[k][2 * n + 1] == h.fields.chi[k][2 * m[n] + 1]);
    }
    CHECK(h.fields.psi[0][n] == h.fields.psi[0][m[n]]);
  }
}

TEST_CASE("solid cell reproduces the base material") {
  const BaseMaterial base;
  const MicroCell cell = MicroCell::unit(5, 5, std::vector<double>(25, 1.0));
  const Homogenization h = homogenize(cell);
  CHECK((h.props.E - plane_stress_tensor(base)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((h.props.kappa - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((h.props.alpha - Eigen::Vector3d(1, 1, 0)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("uniform half-density cell") {
  const BaseMaterial base;
  const MicroCell cell = MicroCell::unit(6, 6, std::vector<double>(36, 0.5));
  const Homogenization h = homogenize(cell);
  CHECK((h.props.E - 0.125 * plane_stress_tensor(base)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((h.props.alpha - Eigen::Vector3d(1, 1, 0)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((h.props.beta - 0.125 * plane_stress_tensor(base) * Eigen::Vector3d(1, 1, 0)).norm() < 1e-10);
}

TEST_CASE("laminate elasticity against the exact layered oracle") {
  SimpParams p1;
  p1.p = p1.p_k = 1.0;
  for (double nu : {0.0, 0.3}) {
    BaseMaterial base;
    base.nu = nu;
    const double a = 1.0, b = 0.2;
    const MicroCell cell = MicroCell::unit(8, 8, laminate(8, a, b), p1, base);
    const Eigen::Matrix3d EH = homogenize(cell).props.E;
    const Eigen::Matrix3d D = plane_stress_tensor(base);
    const Eigen::Matrix3d ref = laminate_oracle(a * D, b * D);
    CHECK((EH - ref).cwiseAbs().maxCoeff() < 1e-6);
    if (nu == 0.0) {
      CHECK(EH(0, 0) == doctest::Approx(0.5 * (a + b)).epsilon(1e-10));      // Voigt along the layers
      CHECK(EH(1, 1) == doctest::Approx(2 * a * b / (a + b)).epsilon(1e-10));  // Reuss across
    }
  }
}

TEST_CASE("laminate conductivity: parallel and series") {
  SimpParams p1;
  p1.p = p1.p_k = 1.0;
  const double a = 1.0, b = p1.rho_min;
  const Eigen::Matrix2d K = homogenize(MicroCell::unit(8, 8, laminate(8, a, b), p1)).props.kappa;
  CHECK(K(0, 0) == doctest::Approx((a + b) / 2).epsilon(1e-8));
  CHECK(K(1, 1) == doctest::Approx(2 * a * b / (a + b)).epsilon(1e-8));
  CHECK(std::abs(K(0, 1)) < 1e-12);
}

TEST_CASE("rotating the cell by 90 degrees swaps the conductivity diagonal") {
  const int n = 6;
  const std::vector<double> r = random_field(n * n, 9);
  std::vector<double> rot(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) rot[(n - 1 - i) * n + j] = r[j * n + i];
  const Eigen::Matrix2d K = homogenize(MicroCell::unit(n, n, r)).props.kappa;
  const Eigen::Matrix2d Kr = homogenize(MicroCell::unit(n, n, rot)).props.kappa;
  CHECK(Kr(0, 0) == doctest::Approx(K(1, 1)).epsilon(1e-10));
  CHECK(Kr(1, 1) == doctest::Approx(K(0, 0)).epsilon(1e-10));
}

TEST_CASE("square-symmetric cells expand isotropically") {
  const int n = 8;
  std::vector<double> r(n * n, 1.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = i + 0.5 - n / 2.0, y = j + 0.5 - n / 2.0;
      if (x * x + y * y < 6.0) r[j * n + i] = 0.01;
    }
  const HomogenizedProps p = homogenize(MicroCell::unit(n, n, r)).props;
  CHECK(std::abs(p.alpha[0] - p.alpha[1]) < 1e-8);
  CHECK(std::abs(p.alpha[2]) < 1e-8);
}

TEST_CASE("homogenized tensors are symmetric and within Voigt/Reuss bounds") {
  SimpParams p1;
  p1.p = p1.p_k = 1.0;
  const std::vector<double> r = random_field(64, 21);
  const HomogenizedProps p = homogenize(MicroCell::unit(8, 8, r, p1)).props;
  CHECK((p.E - p.E.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((p.kappa - p.kappa.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  double mean = 0.0, harm = 0.0;
  for (double v : r) {
    mean += v / r.size();
    harm += 1.0 / v / r.size();
  }
  const Eigen::Matrix3d D = plane_stress_tensor(BaseMaterial{});
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> upper(mean * D - p.E);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> lower(p.E - D / harm);
  CHECK(upper.eigenvalues().minCoeff() > -1e-12);
  CHECK(lower.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("all-void cell is degenerate") {
  CHECK_THROWS_AS(homogenize(MicroCell::unit(4, 4, std::vector<double>(16, 1e-3))), DegenerateCell);
}

TEST_CASE("density derivatives match central differences on a random cell") {
  const int n = 8;
  const std::vector<double> r = random_field(n * n, 33, 0.2, 1.0);
  const MicroCell cell = MicroCell::unit(n, n, r);
  const Homogenization h = homogenize(cell);
  const RveDerivatives d = rve_derivatives(cell, h);
  CHECK((h.props.alpha - Eigen::Vector3d(1.0, 1.0, 0.0)).cwiseAbs().maxCoeff() < 1e-10);
  const auto props_of = [&](const std::vector<double>& x) { return homogenize(MicroCell::unit(n, n, x)).props; };

  double worst = 0.0;
  // Scale each quantity by its largest derivative to avoid dividing by zeros.
  const auto rel = [](double a, double b, double scale) { return std::abs(a - b) / std::max(std::abs(b), scale); };
  double sE = 0.0, sB = 0.0, sK = 0.0;
  for (int e = 0; e < n * n; ++e) {
    sE = std::max(sE, d.dE[e].cwiseAbs().maxCoeff());
    sB = std::max(sB, d.dbeta[e].cwiseAbs().maxCoeff());
    sK = std::max(sK, d.dkappa[e].cwiseAbs().maxCoeff());
  }
  for (int e : {0, 5, 17, 30, 46, 63}) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const double f = fd([&](const std::vector<double>& x) { return props_of(x).E(a, b); }, r, e);
        worst = std::max(worst, rel(d.dE[e](a, b), f, 1e-3 * sE));
      }
      const double fb = fd([&](const std::vector<double>& x) { return props_of(x).beta[a]; }, r, e);
      worst = std::max(worst, rel(d.dbeta[e][a], fb, 1e-3 * sB));
      // alpha_H stays at alpha0 for every layout, so both sides must vanish.
      const double fa = fd([&](const std::vector<double>& x) { return props_of(x).alpha[a]; }, r, e);
      CHECK(std::abs(d.dalpha[e][a]) < 1e-12);
      CHECK(std::abs(fa) < 1e-7);
    }
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double f = fd([&](const std::vector<double>& x) { return props_of(x).kappa(a, b); }, r, e);
        worst = std::max(worst, rel(d.dkappa[e](a, b), f, 1e-3 * sK));
      }
    CHECK((d.dE[e] - d.dE[e].transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("uniform cell derivatives") {
  const int n = 6;
  const double rho = 0.6;
  for (double p : {3.0, 4.0}) {
    SimpParams s;
    s.p = p;
    const MicroCell cell = MicroCell::unit(n, n, std::vector<double>(n * n, rho), s);
    const RveDerivatives d = rve_derivatives(cell, homogenize(cell));
    const double area = 1.0 / (n * n);
    const Eigen::Matrix3d D = plane_stress_tensor(BaseMaterial{});
    for (int e = 0; e < n * n; ++e) {
      CHECK((d.dE[e] - d.dE[0]).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(d.dalpha[e].cwiseAbs().maxCoeff() < 1e-10);
      CHECK((d.dkappa[e] - d.dkappa[0]).cwiseAbs().maxCoeff() < 1e-10);
      // Closed form for a uniform cell: p rho^(p-1) D alpha0 times the element area.
      const Eigen::Vector3d dbeta = p * std::pow(rho, p - 1) * area * D * Eigen::Vector3d(1, 1, 0);
      CHECK((d.dbeta[e] - dbeta).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}
