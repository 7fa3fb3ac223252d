#include "thermotop/adjoint.hpp"

#include <cmath>

#include "thermotop/errors.hpp"
#include "thermotop/q4.hpp"

namespace thermotop {

namespace {

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

}  // namespace

ForwardState analyze(const MacroModel& model, std::span<const double> rho, const HomogenizedProps& props,
                     std::optional<std::span<const double>> frozen_weights) {
  ThermalSystem thermal = assemble_thermal_system(model.grid, rho, props.kappa, model.simp, model.base,
                                                  model.heat, model.diss, frozen_weights);
  ThermalState ts = solve_thermal(thermal);
  ElasticSystem es = assemble_elastic(model.grid, rho, props.E, props.alpha, ts.T, model.diss.T_s,
                                      model.simp, model.base, model.bc);
  ElasticState el = solve_elastic(es, model.bc.output);
  return ForwardState{std::vector<double>(rho.begin(), rho.end()), props, std::move(thermal),
                      std::move(ts), std::move(es), std::move(el)};
}

Eigen::VectorXd thermal_load_temperature_transpose(const MacroModel& model, const ForwardState& fwd,
                                                   const Eigen::VectorXd& v) {
  const Grid& g = model.grid;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.node_count());
  for (int e = 0; e < g.elem_count(); ++e) {
    const double s = std::pow(fwd.rho[e], model.simp.p);
    const double c = 0.25 * s * fwd.es.f0.dot(gather_vector(g, e, v));
    for (int n : g.elem_nodes(e)) out[n] += c;
  }
  return out;
}

AdjointPair solve_adjoints(const MacroModel& model, const ForwardState& fwd, const Eigen::VectorXd& L) {
  AdjointPair adj;
  const auto& es = fwd.es;
  Eigen::VectorXd l(es.free_dofs.size());
  for (size_t k = 0; k < es.free_dofs.size(); ++k) l[k] = L[es.free_dofs[k]];
  const Eigen::VectorXd lu = fwd.el.solver->solve(l);
  adj.lambda_u = Eigen::VectorXd::Zero(L.size());
  for (size_t k = 0; k < es.free_dofs.size(); ++k) adj.lambda_u[es.free_dofs[k]] = lu[k];

  const Eigen::VectorXd coupling = thermal_load_temperature_transpose(model, fwd, adj.lambda_u);
  const auto& free_nodes = fwd.thermal.free_nodes();
  Eigen::VectorXd rhs(free_nodes.size());
  for (size_t k = 0; k < free_nodes.size(); ++k) rhs[k] = coupling[free_nodes[k]];
  adj.lambda_t = Eigen::VectorXd::Zero(model.grid.node_count());
  if (rhs.size() > 0 && rhs.norm() > 0.0) {
    // The lumped scheme keeps the tangent symmetric, so K_T^T = K_T.
    SpMat Kt = fwd.thermal.tangent_free(fwd.ts.T);
    std::unique_ptr<SpdSolver> solver;
    try {
      solver = std::make_unique<SpdSolver>(std::move(Kt));
    } catch (const SingularSystem& e) {
      throw NonConvergence(std::string("thermal adjoint: ") + e.what(), 0.0);
    }
    const Eigen::VectorXd lt = solver->solve(rhs);
    for (size_t k = 0; k < free_nodes.size(); ++k) adj.lambda_t[free_nodes[k]] = lt[k];
  }
  return adj;
}

AdjointPair solve_adjoints(const MacroModel& model, const ForwardState& fwd) {
  return solve_adjoints(model, fwd, output_selector(model.grid, model.bc.output));
}

std::vector<double> macro_sensitivity(const MacroModel& model, const ForwardState& fwd,
                                      const AdjointPair& adj) {
  const Grid& g = model.grid;
  const auto& simp = model.simp;
  const Eigen::Matrix4d Kc0 = element_conduction_q4(fwd.props.kappa, g.dx(), g.dy(), model.base.thickness);
  std::vector<double> s(g.elem_count());
  for (int e = 0; e < g.elem_count(); ++e) {
    const double rho = fwd.rho[e];
    const double dE = simp.p * std::pow(rho, simp.p - 1.0);
    const double dK = simp.p_k * std::pow(rho, simp.p_k - 1.0);
    const Vector8d lam = gather_vector(g, e, adj.lambda_u);
    const Vector8d u = gather_vector(g, e, fwd.el.U);
    const Eigen::Vector4d lt = gather_scalar(g, e, adj.lambda_t);
    const Eigen::Vector4d T = gather_scalar(g, e, fwd.ts.T);
    const double stiffness = lam.dot(fwd.es.K0 * u);
    const double load = fwd.es.dT_elem[e] * fwd.es.f0.dot(lam);
    const double conduction = lt.dot(Kc0 * T);
    s[e] = dE * (load - stiffness) - dK * conduction;
  }
  return s;
}

MicroChainAggregates micro_chain_aggregates(const MacroModel& model, const ForwardState& fwd,
                                            const AdjointPair& adj) {
  const Grid& g = model.grid;
  const Q4Rect q = Q4Rect::make(g.dx(), g.dy());
  const double wt = q.weight * model.base.thickness;
  MicroChainAggregates agg;
  for (int e = 0; e < g.elem_count(); ++e) {
    const double se = std::pow(fwd.rho[e], model.simp.p);
    const double sk = std::pow(fwd.rho[e], model.simp.p_k);
    const Vector8d lam = gather_vector(g, e, adj.lambda_u);
    const Vector8d u = gather_vector(g, e, fwd.el.U);
    const Eigen::Vector4d lt = gather_scalar(g, e, adj.lambda_t);
    const Eigen::Vector4d T = gather_scalar(g, e, fwd.ts.T);
    Eigen::Matrix3d Ge = Eigen::Matrix3d::Zero();
    Eigen::Vector3d ge = Eigen::Vector3d::Zero();
    Eigen::Matrix2d He = Eigen::Matrix2d::Zero();
    for (int gp = 0; gp < 4; ++gp) {
      const Eigen::Vector3d bl = q.B[gp] * lam;
      Ge += bl * (q.B[gp] * u).transpose();
      ge += bl;
      He += (q.G[gp] * lt) * (q.G[gp] * T).transpose();
    }
    agg.stiffness += se * wt * Ge;
    agg.load += se * fwd.es.dT_elem[e] * wt * ge;
    agg.conduction += sk * wt * He;
  }
  return agg;
}

std::vector<double> micro_sensitivity(const MacroModel& model, const ForwardState& fwd,
                                      const AdjointPair& adj, const RveDerivatives& rve,
                                      const MicroChainOptions& options) {
  const MicroChainAggregates agg = micro_chain_aggregates(model, fwd, adj);
  const auto& props = fwd.props;
  std::vector<double> s(rve.dE.size(), 0.0);
  for (size_t j = 0; j < s.size(); ++j) {
    double v = 0.0;
    if (options.stiffness_term) v -= (rve.dE[j].cwiseProduct(agg.stiffness)).sum();
    if (options.expansion_modulus_term) v += agg.load.dot(rve.dE[j] * props.alpha);
    if (options.expansion_alpha_term) v += agg.load.dot(props.E * rve.dalpha[j]);
    if (options.conduction_term) v -= (rve.dkappa[j].cwiseProduct(agg.conduction)).sum();
    s[j] = v;
  }
  return s;
}

}  // namespace thermotop
