#include "thermotop/rve.hpp"

#include <algorithm>
#include <cmath>

#include "thermotop/errors.hpp"
#include "thermotop/q4.hpp"

namespace thermotop {

namespace {

using Matrix83 = Eigen::Matrix<double, 8, 3>;

// Unit test strains in Voigt notation with engineering shear.
const std::array<Eigen::Vector3d, 3> kTestStrain = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
                                                    Eigen::Vector3d(0, 0, 1)};

void check_cell(const MicroCell& cell) {
  if (static_cast<int>(cell.rho.size()) != cell.grid.elem_count()) {
    throw InvalidArgument("micro density field size does not match cell grid");
  }
  const double rmax = *std::max_element(cell.rho.begin(), cell.rho.end());
  if (rmax <= cell.simp.rho_min * (1.0 + 1e-9)) throw DegenerateCell("micro cell is entirely void");
}

Vector8d gather_vector(const Grid& g, int e, const Eigen::VectorXd& full) {
  Vector8d u;
  const auto& n = g.elem_nodes(e);
  for (int a = 0; a < 4; ++a) {
    u[2 * a] = full[2 * n[a]];
    u[2 * a + 1] = full[2 * n[a] + 1];
  }
  return u;
}

Eigen::Vector4d gather_scalar(const Grid& g, int e, const Eigen::VectorXd& full) {
  const auto& n = g.elem_nodes(e);
  return {full[n[0]], full[n[1]], full[n[2]], full[n[3]]};
}

Eigen::VectorXd expand(const Eigen::VectorXd& sol, const std::vector<int>& eq) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(eq.size()));
  for (size_t i = 0; i < eq.size(); ++i)
    if (eq[i] >= 0) full[i] = sol[eq[i]];
  return full;
}

std::shared_ptr<const SpdSolver> factorize(SpMat K) {
  try {
    return std::make_shared<SpdSolver>(std::move(K));
  } catch (const SingularSystem& e) {
    throw DegenerateCell(std::string("periodic cell system is singular: ") + e.what());
  }
}

// Columns are (eps0(k) - B chi_k) at Gauss point gp of element e.
std::array<Eigen::Matrix3d, 4> fluctuation_strains(const MicroCell& cell, const Q4Rect& q,
                                                   const CharStrainFields& f, int e) {
  std::array<Vector8d, 3> u;
  for (int k = 0; k < 3; ++k) u[k] = gather_vector(cell.grid, e, f.chi[k]);
  std::array<Eigen::Matrix3d, 4> M;
  for (int gp = 0; gp < 4; ++gp)
    for (int k = 0; k < 3; ++k) M[gp].col(k) = kTestStrain[k] - q.B[gp] * u[k];
  return M;
}

}  // namespace

PeriodicDofMap periodic_dof_map(const Grid& grid) {
  PeriodicDofMap m;
  const int nn = grid.node_count();
  m.master.resize(nn);
  for (int n = 0; n < nn; ++n) {
    auto [i, j] = grid.node_coords(n);
    m.master[n] = grid.node(i % grid.nx(), j % grid.ny());
  }
  std::vector<int> master_eq(nn, -1);
  int next = 0;
  for (int n = 0; n < nn; ++n) {
    if (m.master[n] != n) continue;
    ++m.independent_nodes;
    if (n == 0) continue;  // pinned
    master_eq[n] = next++;
  }
  m.scalar_free = next;
  m.vector_free = 2 * next;
  m.scalar_eq.resize(nn);
  m.vector_eq.resize(2 * static_cast<size_t>(nn));
  for (int n = 0; n < nn; ++n) {
    const int eq = master_eq[m.master[n]];
    m.scalar_eq[n] = eq;
    m.vector_eq[2 * n] = eq < 0 ? -1 : 2 * eq;
    m.vector_eq[2 * n + 1] = eq < 0 ? -1 : 2 * eq + 1;
  }
  return m;
}

MicroCell MicroCell::unit(int nx, int ny, std::vector<double> rho, const SimpParams& simp,
                          const BaseMaterial& base) {
  MicroCell cell{Grid(nx, ny, 1.0 / nx, 1.0 / ny), std::move(rho), simp, base};
  cell.base.thickness = 1.0;
  return cell;
}

Eigen::Matrix3d homogenize_elastic(const MicroCell& cell, CharStrainFields& fields) {
  check_cell(cell);
  const Grid& g = cell.grid;
  fields.dofs = periodic_dof_map(g);
  const auto& eq = fields.dofs.vector_eq;
  const int nfree = fields.dofs.vector_free;
  const Q4Rect q = Q4Rect::make(g.dx(), g.dy());
  const Eigen::Matrix3d E0 = plane_stress_tensor(cell.base);
  const Matrix8d K0 = element_stiffness_q4(E0, g.dx(), g.dy(), 1.0);
  const Matrix83 bt = integrated_bt(q, 1.0);
  const Eigen::Vector3d alpha0 = isotropic_expansion(cell.base);

  // Load columns: three unit strains and the unit eigenstrain.
  Eigen::Matrix<double, 8, 4> f0;
  for (int k = 0; k < 3; ++k) f0.col(k) = bt * (E0 * kTestStrain[k]);
  f0.col(3) = bt * (E0 * alpha0);

  std::vector<Triplet> trips;
  trips.reserve(64 * static_cast<size_t>(g.elem_count()));
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(nfree, 4);
  for (int e = 0; e < g.elem_count(); ++e) {
    const double s = std::pow(cell.rho[e], cell.simp.p);
    const auto& n = g.elem_nodes(e);
    int dof[8];
    for (int a = 0; a < 4; ++a) {
      dof[2 * a] = eq[2 * n[a]];
      dof[2 * a + 1] = eq[2 * n[a] + 1];
    }
    for (int a = 0; a < 8; ++a) {
      if (dof[a] < 0) continue;
      F.row(dof[a]) += s * f0.row(a);
      for (int b = 0; b < 8; ++b)
        if (dof[b] >= 0) trips.emplace_back(dof[a], dof[b], s * K0(a, b));
    }
  }
  SpMat K(nfree, nfree);
  K.setFromTriplets(trips.begin(), trips.end());
  fields.elastic_solver = factorize(std::move(K));
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd sol = nfree > 0 ? fields.elastic_solver->solve(F.col(k)) : Eigen::VectorXd();
    fields.chi[k] = expand(sol, eq);
  }
  const Eigen::VectorXd sol_th = nfree > 0 ? fields.elastic_solver->solve(F.col(3)) : Eigen::VectorXd();
  fields.chi_th = expand(sol_th, eq);

  Eigen::Matrix3d EH = Eigen::Matrix3d::Zero();
  for (int e = 0; e < g.elem_count(); ++e) {
    const double s = std::pow(cell.rho[e], cell.simp.p);
    const auto M = fluctuation_strains(cell, q, fields, e);
    Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
    for (int gp = 0; gp < 4; ++gp) acc += M[gp].transpose() * E0 * M[gp];
    EH += s * q.weight * acc;
  }
  EH /= cell.area();
  return 0.5 * (EH + EH.transpose());
}

ThermalHomogenization homogenize_thermal(const MicroCell& cell, CharStrainFields& fields,
                                         const Eigen::Matrix3d& E_H) {
  if (fields.chi_th.size() != 2 * cell.grid.node_count()) {
    throw InvalidArgument("homogenize_elastic must run before homogenize_thermal");
  }
  const Grid& g = cell.grid;
  const Q4Rect q = Q4Rect::make(g.dx(), g.dy());
  const Eigen::Matrix3d E0 = plane_stress_tensor(cell.base);
  const Eigen::Vector3d alpha0 = isotropic_expansion(cell.base);
  Eigen::Vector3d beta = Eigen::Vector3d::Zero();
  for (int e = 0; e < g.elem_count(); ++e) {
    const double s = std::pow(cell.rho[e], cell.simp.p);
    const auto M = fluctuation_strains(cell, q, fields, e);
    const Vector8d uth = gather_vector(g, e, fields.chi_th);
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int gp = 0; gp < 4; ++gp) acc += M[gp].transpose() * E0 * (alpha0 - q.B[gp] * uth);
    beta += s * q.weight * acc;
  }
  beta /= cell.area();
  Eigen::LLT<Eigen::Matrix3d> llt(E_H);
  if (llt.info() != Eigen::Success) throw DegenerateCell("homogenized elastic tensor is not positive definite");
  return {beta, llt.solve(beta)};
}

Eigen::Matrix2d homogenize_conductivity(const MicroCell& cell, CharStrainFields& fields) {
  check_cell(cell);
  const Grid& g = cell.grid;
  if (fields.dofs.master.empty()) fields.dofs = periodic_dof_map(g);
  const auto& eq = fields.dofs.scalar_eq;
  const int nfree = fields.dofs.scalar_free;
  const Q4Rect q = Q4Rect::make(g.dx(), g.dy());
  const double k0 = cell.base.k0;
  const Eigen::Matrix4d Kc0 = element_conduction_q4(k0 * Eigen::Matrix2d::Identity(), g.dx(), g.dy(), 1.0);
  Eigen::Matrix<double, 4, 2> f0 = Eigen::Matrix<double, 4, 2>::Zero();
  for (int gp = 0; gp < 4; ++gp) f0 += q.weight * k0 * q.G[gp].transpose();

  std::vector<Triplet> trips;
  trips.reserve(16 * static_cast<size_t>(g.elem_count()));
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(nfree, 2);
  for (int e = 0; e < g.elem_count(); ++e) {
    const double s = std::pow(cell.rho[e], cell.simp.p_k);
    const auto& n = g.elem_nodes(e);
    for (int a = 0; a < 4; ++a) {
      const int ra = eq[n[a]];
      if (ra < 0) continue;
      F.row(ra) += s * f0.row(a);
      for (int b = 0; b < 4; ++b)
        if (eq[n[b]] >= 0) trips.emplace_back(ra, eq[n[b]], s * Kc0(a, b));
    }
  }
  SpMat K(nfree, nfree);
  K.setFromTriplets(trips.begin(), trips.end());
  const auto solver = factorize(std::move(K));
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXd sol = nfree > 0 ? solver->solve(F.col(i)) : Eigen::VectorXd();
    fields.psi[i] = expand(sol, eq);
  }

  Eigen::Matrix2d KH = Eigen::Matrix2d::Zero();
  for (int e = 0; e < g.elem_count(); ++e) {
    const double s = std::pow(cell.rho[e], cell.simp.p_k);
    const Eigen::Vector4d t0 = gather_scalar(g, e, fields.psi[0]);
    const Eigen::Vector4d t1 = gather_scalar(g, e, fields.psi[1]);
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    for (int gp = 0; gp < 4; ++gp) {
      Eigen::Matrix2d Gm;
      Gm.col(0) = Eigen::Vector2d(1, 0) - q.G[gp] * t0;
      Gm.col(1) = Eigen::Vector2d(0, 1) - q.G[gp] * t1;
      acc += Gm.transpose() * Gm;
    }
    KH += s * k0 * q.weight * acc;
  }
  KH /= cell.area();
  return 0.5 * (KH + KH.transpose());
}

Homogenization homogenize(const MicroCell& cell) {
  Homogenization h;
  h.props.E = homogenize_elastic(cell, h.fields);
  h.props.kappa = homogenize_conductivity(cell, h.fields);
  const auto th = homogenize_thermal(cell, h.fields, h.props.E);
  h.props.beta = th.beta;
  h.props.alpha = th.alpha;
  return h;
}

std::vector<Eigen::Matrix3d> d_EH_d_rhom(const MicroCell& cell, const CharStrainFields& fields) {
  const Grid& g = cell.grid;
  const Q4Rect q = Q4Rect::make(g.dx(), g.dy());
  const Eigen::Matrix3d E0 = plane_stress_tensor(cell.base);
  std::vector<Eigen::Matrix3d> out(g.elem_count());
  for (int e = 0; e < g.elem_count(); ++e) {
    const double ds = cell.simp.p * std::pow(cell.rho[e], cell.simp.p - 1.0);
    const auto M = fluctuation_strains(cell, q, fields, e);
    Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
    for (int gp = 0; gp < 4; ++gp) acc += M[gp].transpose() * E0 * M[gp];
    acc = ds * q.weight * acc / cell.area();
    out[e] = 0.5 * (acc + acc.transpose());
  }
  return out;
}

ThermalDerivatives d_betaH_d_rhom(const MicroCell& cell, const CharStrainFields& fields,
                                  const HomogenizedProps& props,
                                  const std::vector<Eigen::Matrix3d>& dE) {
  const Grid& g = cell.grid;
  const Q4Rect q = Q4Rect::make(g.dx(), g.dy());
  const Eigen::Matrix3d E0 = plane_stress_tensor(cell.base);
  const Eigen::Vector3d alpha0 = isotropic_expansion(cell.base);
  const Eigen::LLT<Eigen::Matrix3d> llt(props.E);
  ThermalDerivatives d;
  d.dbeta.resize(g.elem_count());
  d.dalpha.resize(g.elem_count());
  for (int e = 0; e < g.elem_count(); ++e) {
    const double ds = cell.simp.p * std::pow(cell.rho[e], cell.simp.p - 1.0);
    const auto M = fluctuation_strains(cell, q, fields, e);
    const Vector8d uth = gather_vector(g, e, fields.chi_th);
    Eigen::Vector3d eigenstrain_term = Eigen::Vector3d::Zero();
    Eigen::Vector3d fluctuation_term = Eigen::Vector3d::Zero();
    for (int gp = 0; gp < 4; ++gp) {
      eigenstrain_term += M[gp].transpose() * E0 * alpha0;
      fluctuation_term += M[gp].transpose() * E0 * (q.B[gp] * uth);
    }
    d.dbeta[e] = ds * q.weight * (eigenstrain_term - fluctuation_term) / cell.area();
    d.dalpha[e] = llt.solve(d.dbeta[e] - dE[e] * props.alpha);
  }
  return d;
}

std::vector<Eigen::Matrix2d> d_kappaH_d_rhom(const MicroCell& cell, const CharStrainFields& fields) {
  const Grid& g = cell.grid;
  const Q4Rect q = Q4Rect::make(g.dx(), g.dy());
  const double k0 = cell.base.k0;
  std::vector<Eigen::Matrix2d> out(g.elem_count());
  for (int e = 0; e < g.elem_count(); ++e) {
    const double ds = cell.simp.p_k * std::pow(cell.rho[e], cell.simp.p_k - 1.0);
    const Eigen::Vector4d t0 = gather_scalar(g, e, fields.psi[0]);
    const Eigen::Vector4d t1 = gather_scalar(g, e, fields.psi[1]);
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    for (int gp = 0; gp < 4; ++gp) {
      Eigen::Matrix2d Gm;
      Gm.col(0) = Eigen::Vector2d(1, 0) - q.G[gp] * t0;
      Gm.col(1) = Eigen::Vector2d(0, 1) - q.G[gp] * t1;
      acc += Gm.transpose() * Gm;
    }
    acc = ds * k0 * q.weight * acc / cell.area();
    out[e] = 0.5 * (acc + acc.transpose());
  }
  return out;
}

RveDerivatives rve_derivatives(const MicroCell& cell, const Homogenization& hom) {
  RveDerivatives d;
  d.dE = d_EH_d_rhom(cell, hom.fields);
  auto th = d_betaH_d_rhom(cell, hom.fields, hom.props, d.dE);
  d.dbeta = std::move(th.dbeta);
  d.dalpha = std::move(th.dalpha);
  d.dkappa = d_kappaH_d_rhom(cell, hom.fields);
  return d;
}

}  // namespace thermotop
