#include "thermotop/elastic.hpp"

#include <cmath>
#include <string>

#include "thermotop/errors.hpp"

namespace thermotop {

void MechanicalBC::validate(const Grid& grid) const {
  int constrained = 0;
  for (const auto& f : fixed) {
    if (f.node < 0 || f.node >= grid.node_count()) throw InvalidArgument("fixed node out of range");
    constrained += (f.fix_x ? 1 : 0) + (f.fix_y ? 1 : 0);
  }
  if (constrained < 3) {
    throw SingularSystem("mechanical supports leave rigid-body modes (" + std::to_string(constrained) +
                         " constrained DOFs)");
  }
  if (output.node < 0 || output.node >= grid.node_count()) throw InvalidArgument("output node out of range");
  const double dn = std::hypot(output.direction[0], output.direction[1]);
  if (std::abs(dn - 1.0) > 1e-12) throw InvalidArgument("output direction must be a unit vector");
  if (!(output.k_out >= 0.0)) throw InvalidArgument("output spring stiffness must be >= 0");
  for (const auto& f : fixed) {
    if (f.node != output.node) continue;
    if ((f.fix_x && output.direction[0] != 0.0) || (f.fix_y && output.direction[1] != 0.0)) {
      throw InvalidArgument("output node is constrained in the output direction");
    }
  }
}

MechanicalBC default_mechanical_bc(const Grid& grid, double k_out) {
  MechanicalBC bc;
  bc.fixed.push_back({grid.node(0, 0), true, true});
  bc.fixed.push_back({grid.node(0, grid.ny()), true, true});
  bc.output.node = grid.node(grid.nx(), grid.ny() / 2);
  bc.output.direction = {1.0, 0.0};
  bc.output.k_out = k_out;
  return bc;
}

std::vector<double> element_temperature_rise(const Grid& grid, const Eigen::VectorXd& T, double T_ref) {
  std::vector<double> dT(grid.elem_count());
  for (int e = 0; e < grid.elem_count(); ++e) {
    const auto& n = grid.elem_nodes(e);
    dT[e] = 0.25 * (T[n[0]] + T[n[1]] + T[n[2]] + T[n[3]]) - T_ref;
  }
  return dT;
}

Eigen::VectorXd output_selector(const Grid& grid, const OutputSpec& output) {
  Eigen::VectorXd L = Eigen::VectorXd::Zero(2 * grid.node_count());
  const auto d = vector_dofs(grid, output.node);
  L[d[0]] = output.direction[0];
  L[d[1]] = output.direction[1];
  return L;
}

ElasticSystem assemble_elastic(const Grid& grid, std::span<const double> rho,
                               const Eigen::Matrix3d& E_eff, const Eigen::Vector3d& alpha_eff,
                               const Eigen::VectorXd& T, double T_ref, const SimpParams& simp,
                               const BaseMaterial& base, const MechanicalBC& bcs) {
  bcs.validate(grid);
  const int ne = grid.elem_count();
  const int ndof = 2 * grid.node_count();
  if (static_cast<int>(rho.size()) != ne) throw InvalidArgument("density field size does not match grid");
  if (T.size() != grid.node_count()) throw InvalidArgument("temperature field size does not match grid");

  ElasticSystem sys;
  const Q4Rect q = Q4Rect::make(grid.dx(), grid.dy());
  sys.K0 = element_stiffness_q4(E_eff, grid.dx(), grid.dy(), base.thickness);
  sys.f0 = integrated_bt(q, base.thickness) * (E_eff * alpha_eff);
  sys.dT_elem = element_temperature_rise(grid, T, T_ref);

  std::vector<char> fixed(ndof, 0);
  for (const auto& f : bcs.fixed) {
    const auto d = vector_dofs(grid, f.node);
    if (f.fix_x) fixed[d[0]] = 1;
    if (f.fix_y) fixed[d[1]] = 1;
  }
  sys.free_index.assign(ndof, -1);
  for (int d = 0; d < ndof; ++d) {
    if (!fixed[d]) {
      sys.free_index[d] = static_cast<int>(sys.free_dofs.size());
      sys.free_dofs.push_back(d);
    }
  }

  sys.F_th = Eigen::VectorXd::Zero(ndof);
  std::vector<Triplet> trips;
  trips.reserve(64 * static_cast<size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    const double s = std::pow(rho[e], simp.p);
    const auto& n = grid.elem_nodes(e);
    int dofs[8];
    for (int a = 0; a < 4; ++a) {
      dofs[2 * a] = 2 * n[a];
      dofs[2 * a + 1] = 2 * n[a] + 1;
    }
    const double load = s * sys.dT_elem[e];
    for (int a = 0; a < 8; ++a) {
      sys.F_th[dofs[a]] += load * sys.f0[a];
      const int ra = sys.free_index[dofs[a]];
      if (ra < 0) continue;
      for (int b = 0; b < 8; ++b) {
        const int cb = sys.free_index[dofs[b]];
        if (cb >= 0) trips.emplace_back(ra, cb, s * sys.K0(a, b));
      }
    }
  }
  // Output spring k_out d d^T.
  const auto od = vector_dofs(grid, bcs.output.node);
  const auto& dir = bcs.output.direction;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const int ra = sys.free_index[od[a]];
      const int cb = sys.free_index[od[b]];
      const double v = bcs.output.k_out * dir[a] * dir[b];
      if (ra >= 0 && cb >= 0 && v != 0.0) trips.emplace_back(ra, cb, v);
    }
  }
  const int nf = static_cast<int>(sys.free_dofs.size());
  sys.K_free.resize(nf, nf);
  sys.K_free.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

double output_displacement(const Eigen::VectorXd& U, const OutputSpec& output) {
  return output.direction[0] * U[2 * output.node] + output.direction[1] * U[2 * output.node + 1];
}

ElasticState solve_elastic(const ElasticSystem& sys, const OutputSpec& output) {
  ElasticState st;
  st.F_th = sys.F_th;
  st.solver = std::make_shared<SpdSolver>(sys.K_free);
  Eigen::VectorXd f(sys.free_dofs.size());
  for (size_t k = 0; k < sys.free_dofs.size(); ++k) f[k] = sys.F_th[sys.free_dofs[k]];
  const Eigen::VectorXd u = st.solver->solve(f);
  st.U = Eigen::VectorXd::Zero(sys.F_th.size());
  for (size_t k = 0; k < sys.free_dofs.size(); ++k) st.U[sys.free_dofs[k]] = u[k];
  const double fn = f.norm();
  st.relative_residual = fn > 0.0 ? (sys.K_free * u - f).norm() / fn : 0.0;
  st.u_out = output_displacement(st.U, output);
  return st;
}

}  // namespace thermotop
