#include "thermotop/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "thermotop/driver.hpp"
#include "thermotop/errors.hpp"

namespace thermotop {

double max_relative_error(const std::vector<double>& adjoint, const std::vector<double>& fd, double floor) {
  if (adjoint.size() != fd.size()) throw InvalidArgument("gradient size mismatch");
  double scale = 0.0;
  for (double v : fd) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (size_t i = 0; i < fd.size(); ++i) {
    const double denom = std::max(std::abs(fd[i]), floor * scale);
    if (denom == 0.0) continue;
    worst = std::max(worst, std::abs(adjoint[i] - fd[i]) / denom);
  }
  return worst;
}

GradientComparison check_macro_gradient(const MacroModel& model, const std::vector<double>& rho,
                                        const HomogenizedProps& props, double step) {
  const ForwardState fwd = analyze(model, rho, props);
  const std::vector<double> w = fwd.thermal.face_weights();
  GradientComparison c;
  c.adjoint = macro_sensitivity(model, fwd, solve_adjoints(model, fwd));
  c.finite_difference.resize(rho.size());
  for (size_t e = 0; e < rho.size(); ++e) {
    std::vector<double> plus = rho;
    std::vector<double> minus = rho;
    plus[e] += step;
    minus[e] -= step;
    const double up = analyze(model, plus, props, std::span<const double>(w)).u_out();
    const double dn = analyze(model, minus, props, std::span<const double>(w)).u_out();
    c.finite_difference[e] = (up - dn) / (2.0 * step);
  }
  c.max_relative_error = max_relative_error(c.adjoint, c.finite_difference);
  return c;
}

GradientComparison check_micro_gradient(const MacroModel& model, const std::vector<double>& rho_macro,
                                        const MicroCell& cell, double step) {
  const Homogenization hom = homogenize(cell);
  const ForwardState fwd = analyze(model, rho_macro, hom.props);
  const std::vector<double> w = fwd.thermal.face_weights();
  GradientComparison c;
  c.adjoint = micro_sensitivity(model, fwd, solve_adjoints(model, fwd), rve_derivatives(cell, hom));
  c.finite_difference.resize(cell.rho.size());
  for (size_t j = 0; j < cell.rho.size(); ++j) {
    MicroCell plus = cell;
    MicroCell minus = cell;
    plus.rho[j] += step;
    minus.rho[j] -= step;
    const double up = analyze(model, rho_macro, homogenize(plus).props, std::span<const double>(w)).u_out();
    const double dn = analyze(model, rho_macro, homogenize(minus).props, std::span<const double>(w)).u_out();
    c.finite_difference[j] = (up - dn) / (2.0 * step);
  }
  c.max_relative_error = max_relative_error(c.adjoint, c.finite_difference);
  return c;
}

ValidationReport validate_gradients(const RunConfig& cfg, int n, unsigned seed) {
  if (n < 2) throw InvalidArgument("validation mesh must be at least 2 x 2");
  RunConfig small = cfg;
  small.macro = {n, n, cfg.macro.dx, cfg.macro.dy};
  small.micro = {n, n, 1.0, 1.0};
  const MacroModel model = macro_model(small);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(0.3, 1.0);
  std::vector<double> rho(model.grid.elem_count());
  for (double& r : rho) r = dist(rng);
  ValidationReport report;
  if (cfg.mode == RunMode::single) {
    report.macro = check_macro_gradient(model, rho, base_props(cfg.base));
    return report;
  }
  std::vector<double> rm(static_cast<size_t>(n) * n);
  for (double& r : rm) r = dist(rng);
  const MicroCell cell = MicroCell::unit(n, n, rm, cfg.simp, cfg.base);
  report.macro = check_macro_gradient(model, rho, homogenize(cell).props);
  report.micro = check_micro_gradient(model, rho, cell);
  return report;
}

}  // namespace thermotop
