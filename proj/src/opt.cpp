#include "thermotop/opt.hpp"

#include <algorithm>
#include <cmath>

#include "thermotop/errors.hpp"
#include "thermotop/material.hpp"

namespace thermotop {

void OptimizerSettings::validate() const {
  if (!(r_min >= 0.0)) throw InvalidArgument("r_min must be >= 0");
  if (!(move > 0.0 && move <= 1.0) && move != 0.0) throw InvalidArgument("move must lie in (0, 1]");
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
  if (max_iters < 0) throw InvalidArgument("max_iters must be >= 0");
  if (!(tol_change >= 0.0)) throw InvalidArgument("tol_change must be >= 0");
  if (!(volume_tol > 0.0)) throw InvalidArgument("volume_tol must be > 0");
}

DensityFilter::DensityFilter(const Grid& grid, double r_min, bool periodic) {
  if (!(r_min >= 0.0)) throw InvalidArgument("filter radius must be >= 0");
  const int nx = grid.nx();
  const int ny = grid.ny();
  const int ne = grid.elem_count();
  H_.resize(ne, ne);
  const int reach = static_cast<int>(std::ceil(r_min));
  identity_ = reach == 0 || r_min <= 1.0;  // no neighbor lies strictly inside the cone
  std::vector<Eigen::Triplet<double>> trips;
  if (identity_) {
    for (int e = 0; e < ne; ++e) trips.emplace_back(e, e, 1.0);
    H_.setFromTriplets(trips.begin(), trips.end());
    return;
  }
  trips.reserve(static_cast<size_t>(ne) * (2 * reach + 1) * (2 * reach + 1));
  std::vector<std::pair<int, double>> row;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      row.clear();
      double sum = 0.0;
      for (int dj = -reach; dj <= reach; ++dj) {
        for (int di = -reach; di <= reach; ++di) {
          int ii = i + di;
          int jj = j + dj;
          if (periodic) {
            ii = ((ii % nx) + nx) % nx;
            jj = ((jj % ny) + ny) % ny;
          } else if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) {
            continue;
          }
          const double w = r_min - std::sqrt(static_cast<double>(di * di + dj * dj));
          if (w <= 0.0) continue;
          row.emplace_back(grid.elem(ii, jj), w);
          sum += w;
        }
      }
      const int e = grid.elem(i, j);
      // Small periodic grids can reach the same element twice; setFromTriplets sums them.
      for (const auto& [col, w] : row) trips.emplace_back(e, col, w / sum);
    }
  }
  H_.setFromTriplets(trips.begin(), trips.end());
}

std::vector<double> DensityFilter::apply(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != H_.cols()) throw InvalidArgument("filter input size mismatch");
  if (identity_) return {x.begin(), x.end()};
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd y = H_ * xv;
  return {y.data(), y.data() + y.size()};
}

std::vector<double> DensityFilter::apply_transpose(std::span<const double> g) const {
  if (static_cast<Eigen::Index>(g.size()) != H_.rows()) throw InvalidArgument("filter input size mismatch");
  if (identity_) return {g.begin(), g.end()};
  const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
  const Eigen::VectorXd y = H_.transpose() * gv;
  return {y.data(), y.data() + y.size()};
}

std::vector<double> density_filter(std::span<const double> field, const Grid& grid, double r_min,
                                   bool periodic) {
  return DensityFilter(grid, r_min, periodic).apply(field);
}

OcResult oc_update(std::span<const double> rho, std::span<const double> sens, std::span<const double> dV,
                   double v_target, const OptimizerSettings& settings, double rho_min,
                   const VolumeFn& volume) {
  const size_t n = rho.size();
  if (sens.size() != n || dV.size() != n) throw InvalidArgument("oc_update: size mismatch");
  if (n == 0) throw InvalidArgument("oc_update: empty design");
  if (!(v_target > 0.0 && v_target <= 1.0)) throw InvalidArgument("oc_update: volume target outside (0, 1]");
  constexpr double kDelta = 1e-9;

  double smax = 0.0;
  for (size_t e = 0; e < n; ++e) {
    if (!std::isfinite(sens[e])) throw InvalidArgument("oc_update: non-finite sensitivity");
    if (!(dV[e] > 0.0)) throw InvalidArgument("oc_update: volume derivative must be positive");
    smax = std::max(smax, sens[e]);
  }
  std::vector<double> shifted(n);
  double scale = 0.0;
  for (size_t e = 0; e < n; ++e) {
    shifted[e] = sens[e] - smax;
    scale = std::max(scale, std::abs(shifted[e]));
  }
  std::vector<double> ratio(n);  // -s~ / dV, strictly positive
  for (size_t e = 0; e < n; ++e) {
    const double s = (scale > 0.0 ? shifted[e] / scale : 0.0) - kDelta;
    ratio[e] = -s / dV[e];
  }

  std::vector<double> lo_bound(n), hi_bound(n);
  for (size_t e = 0; e < n; ++e) {
    lo_bound[e] = std::max(rho_min, rho[e] - settings.move);
    hi_bound[e] = std::min(1.0, rho[e] + settings.move);
    if (lo_bound[e] > hi_bound[e]) lo_bound[e] = hi_bound[e];
  }
  const auto vol = [&](const std::vector<double>& x) { return volume ? volume(x) : mean(x); };
  std::vector<double> cand(n);
  const auto candidate = [&](double lambda) {
    for (size_t e = 0; e < n; ++e) {
      const double x = rho[e] * std::pow(ratio[e] / lambda, settings.eta);
      cand[e] = std::clamp(x, lo_bound[e], hi_bound[e]);
    }
    return vol(cand);
  };

  OcResult out;
  // Lambda -> 0 pushes every element to its upper bound.
  const double v_upper = vol(hi_bound);
  if (v_upper <= v_target) {
    out.rho = hi_bound;
    out.volume = v_upper;
    out.constraint_active = false;
    return out;
  }
  double lo = 1e-40;
  double hi = 1e40;
  if (candidate(hi) > v_target) {
    throw OptimizerStall("oc_update: volume target unreachable within the move limit");
  }
  for (int k = 0; k < 100 && hi / lo > 1.0 + 1e-13; ++k) {
    const double mid = std::sqrt(lo * hi);
    if (candidate(mid) > v_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.volume = candidate(hi);
  out.rho = cand;
  out.lambda = hi;
  if (std::abs(out.volume - v_target) > settings.volume_tol) {
    throw OptimizerStall("oc_update: bisection ended with volume " + std::to_string(out.volume) +
                         " for target " + std::to_string(v_target));
  }
  return out;
}

double max_abs_change(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("field size mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ConvergenceDecision converged(std::span<const double> rho_prev, std::span<const double> rho_new, int iter,
                              const OptimizerSettings& settings) {
  ConvergenceDecision d;
  d.max_change = max_abs_change(rho_prev, rho_new);
  if (d.max_change < settings.tol_change) {
    d.done = true;
    d.trigger = StopTrigger::change;
  } else if (iter >= settings.max_iters) {
    d.done = true;
    d.trigger = StopTrigger::budget;
  }
  return d;
}

}  // namespace thermotop
