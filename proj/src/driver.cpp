#include "thermotop/driver.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "thermotop/errors.hpp"

namespace thermotop {

namespace {

struct Feature {
  double cx;
  double cy;  // fractions of the cell size
};

std::vector<Feature> placements(SeedPlacement p) {
  switch (p) {
    case SeedPlacement::central: return {{0.5, 0.5}};
    case SeedPlacement::eccentric_top_left: return {{0.25, 0.75}};
    case SeedPlacement::three: return {{0.25, 0.25}, {0.75, 0.25}, {0.5, 0.75}};
    case SeedPlacement::four: return {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  }
  return {};
}

// Adds an iteration index to a library error without changing its type.
[[noreturn]] void rethrow_at(int iter) {
  const std::string at = "iteration " + std::to_string(iter) + ": ";
  try {
    throw;
  } catch (const NonConvergence& e) {
    throw NonConvergence(at + e.what(), e.last_residual());
  } catch (const LinearSolverError& e) {
    throw LinearSolverError(at + e.what(), e.residual());
  } catch (const DivergedState& e) {
    throw DivergedState(at + e.what());
  } catch (const SingularSystem& e) {
    throw SingularSystem(at + e.what());
  } catch (const IllPosedSystem& e) {
    throw IllPosedSystem(at + e.what());
  } catch (const DegenerateCell& e) {
    throw DegenerateCell(at + e.what());
  } catch (const OptimizerStall& e) {
    throw OptimizerStall(at + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(at + e.what());
  }
}

// How one density field takes part in the loop.
struct FieldPlan {
  bool present = false;
  bool optimize = false;
  bool filtered = true;
  double target = 1.0;
  OptimizerSettings settings;
  std::optional<DensityFilter> filter;

  std::vector<double> physical(const std::vector<double>& x) const {
    return filtered ? filter->apply(x) : x;
  }
};

struct LoopSetup {
  RunMode mode = RunMode::single;
  MacroModel model;
  Grid micro{1, 1, 1.0, 1.0};
  FieldPlan macro;
  FieldPlan micro_plan;
  std::optional<HomogenizedProps> fixed_props;
};

std::vector<double> uniform_gradient(const FieldPlan& plan, size_t n) {
  std::vector<double> d(n, 1.0 / static_cast<double>(n));
  return plan.filtered ? plan.filter->apply_transpose(d) : d;
}

// s_phys is du_out/drho; the OC step works on the gradient of -u_out.
OcResult update_field(const FieldPlan& plan, const std::vector<double>& x, std::vector<double> s_phys,
                      double rho_min) {
  for (double& v : s_phys) v = -v;
  const std::vector<double> sx = plan.filtered ? plan.filter->apply_transpose(s_phys) : s_phys;
  const std::vector<double> dV = uniform_gradient(plan, x.size());
  const VolumeFn vol = [&plan](std::span<const double> c) {
    return plan.filtered ? mean(plan.filter->apply(c)) : mean(c);
  };
  return oc_update(x, sx, dV, plan.target, plan.settings, rho_min, vol);
}

std::string checkpoint_path(const RunConfig& cfg, int iter) {
  char name[48];
  std::snprintf(name, sizeof name, "checkpoint_%04d.json", iter);
  return (std::filesystem::path(cfg.output_dir) / "checkpoints" / name).string();
}

double peak_interior(const Grid& g, const Eigen::VectorXd& T) {
  double peak = -std::numeric_limits<double>::infinity();
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) peak = std::max(peak, T[g.node(i, j)]);
  if (!std::isfinite(peak)) peak = T.maxCoeff();  // grids without interior nodes
  return peak;
}

RunResult optimize(const RunConfig& cfg, LoopSetup& setup, std::vector<double> x_macro,
                   std::vector<double> x_micro, std::vector<IterationRecord> history,
                   const RunOptions& options) {
  using clock = std::chrono::steady_clock;
  const double rho_min = cfg.simp.rho_min;
  RunResult result;
  result.mode = setup.mode;
  std::vector<double> rho_M;
  std::vector<double> rho_m;
  std::optional<ForwardState> last;
  StopTrigger trigger = StopTrigger::none;

  for (;;) {
    const int iter = static_cast<int>(history.size()) + 1;
    const auto t0 = clock::now();
    try {
      rho_M = setup.macro.physical(x_macro);
      HomogenizedProps props;
      std::optional<MicroCell> cell;
      std::optional<Homogenization> hom;
      if (setup.micro_plan.present) {
        rho_m = setup.micro_plan.physical(x_micro);
        cell = MicroCell{setup.micro, rho_m, cfg.simp, [&] {
                           BaseMaterial b = cfg.base;
                           b.thickness = 1.0;
                           return b;
                         }()};
        try {
          hom = homogenize(*cell);
        } catch (const DegenerateCell&) {
          if (!cfg.output_dir.empty()) {
            FieldSnapshot snap{iter, "micro", setup.micro.nx(), setup.micro.ny(), rho_m, 0.0, mean(rho_m)};
            write_snapshot(snap, (std::filesystem::path(cfg.output_dir) / "degenerate_cell.json").string());
          }
          throw;
        }
        props = hom->props;
      } else {
        props = setup.fixed_props.value_or(base_props(cfg.base));
      }
      last.emplace(analyze(setup.model, rho_M, props));
      const ForwardState& fwd = *last;

      IterationRecord rec;
      rec.iter = iter;
      rec.u_out = fwd.u_out();
      rec.vol_macro = mean(rho_M);
      rec.vol_micro = setup.micro_plan.present ? mean(rho_m) : 0.0;
      rec.newton_iters = fwd.ts.newton_iters;

      std::vector<double> next_macro = x_macro;
      std::vector<double> next_micro = x_micro;
      if (setup.macro.optimize || setup.micro_plan.optimize) {
        const AdjointPair adj = solve_adjoints(setup.model, fwd);
        if (setup.macro.optimize) {
          next_macro = update_field(setup.macro, x_macro, macro_sensitivity(setup.model, fwd, adj), rho_min).rho;
        }
        if (setup.micro_plan.optimize) {
          const RveDerivatives der = rve_derivatives(*cell, *hom);
          next_micro =
              update_field(setup.micro_plan, x_micro, micro_sensitivity(setup.model, fwd, adj, der), rho_min).rho;
        }
      }
      double change = 0.0;
      if (setup.macro.optimize) change = std::max(change, max_abs_change(x_macro, next_macro));
      if (setup.micro_plan.optimize) change = std::max(change, max_abs_change(x_micro, next_micro));
      rec.max_change = change;
      if (cfg.log_wall_time) {
        rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      }
      history.push_back(rec);
      if (options.on_iteration) options.on_iteration(rec);

      // Both fields share one budget: the smaller of the active settings.
      OptimizerSettings stop = setup.macro.settings;
      if (setup.micro_plan.optimize && !setup.macro.optimize) stop = setup.micro_plan.settings;
      if (setup.micro_plan.optimize && setup.macro.optimize) {
        stop.max_iters = std::min(stop.max_iters, setup.micro_plan.settings.max_iters);
        stop.tol_change = std::min(stop.tol_change, setup.micro_plan.settings.tol_change);
      }
      if (change < stop.tol_change) {
        trigger = StopTrigger::change;
      } else if (iter >= stop.max_iters) {
        trigger = StopTrigger::budget;
      }
      if (trigger != StopTrigger::none) break;

      x_macro = std::move(next_macro);
      x_micro = std::move(next_micro);
      if (options.write_checkpoints && cfg.checkpoint_interval > 0 && !cfg.output_dir.empty() &&
          iter % cfg.checkpoint_interval == 0) {
        Checkpoint cp;
        cp.mode = setup.mode;
        cp.iteration = iter;
        cp.x_macro = x_macro;
        cp.x_micro = x_micro;
        if (!setup.macro.filtered) cp.fixed_macro = x_macro;
        cp.history = history;
        write_checkpoint(cp, checkpoint_path(cfg, iter));
      }
    } catch (const IoError&) {
      throw;
    } catch (const Error&) {
      rethrow_at(iter);
    }
  }

  result.macro_rho = rho_M;
  result.micro_rho = rho_m;
  result.props = last->props;
  result.temperature = last->ts.T;
  result.history = std::move(history);
  result.iterations = static_cast<int>(result.history.size());
  result.termination = trigger;
  const auto w = exposure_weights(setup.model.grid, rho_M, cfg.diss.q_exposure);
  for (double v : w) result.exposure_sum += v;
  result.peak_interior_T = peak_interior(setup.model.grid, last->ts.T);
  return result;
}

FieldPlan make_plan(const Grid& grid, double target, const OptimizerSettings& s, bool periodic, bool optimize) {
  FieldPlan p;
  p.present = true;
  p.optimize = optimize && s.move > 0.0;
  p.target = target;
  p.settings = s;
  p.filter.emplace(grid, s.r_min, periodic);
  return p;
}

void check_size(const std::vector<double>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n) {
    throw InvalidArgument(std::string(what) + " has " + std::to_string(v.size()) + " values, expected " +
                          std::to_string(n));
  }
}

// Applies a checkpoint, if requested, and starts the loop.
RunResult start(const RunConfig& cfg, LoopSetup& setup, std::vector<double> x_macro,
                std::vector<double> x_micro, const RunOptions& options) {
  std::vector<IterationRecord> history;
  if (options.resume) {
    const Checkpoint cp = read_checkpoint(*options.resume);
    if (cp.mode != setup.mode) throw InvalidArgument("checkpoint was written by a " + mode_name(cp.mode) + " run");
    check_size(cp.x_macro, setup.model.grid.elem_count(), "checkpoint macro field");
    if (setup.micro_plan.present) check_size(cp.x_micro, setup.micro.elem_count(), "checkpoint micro field");
    x_macro = cp.x_macro;
    x_micro = cp.x_micro;
    history = cp.history;
  }
  return optimize(cfg, setup, std::move(x_macro), std::move(x_micro), std::move(history), options);
}

std::vector<double> initial_micro(const RunConfig& cfg, const Grid& grid, const RunOptions& options) {
  std::vector<double> seed;
  if (options.initial_micro) {
    seed = *options.initial_micro;
    check_size(seed, grid.elem_count(), "initial micro field");
  } else {
    seed = seed_micro(cfg.seed, grid, cfg.simp.rho_min);
  }
  return fit_volume(std::move(seed), cfg.v_micro, cfg.simp.rho_min);
}

std::vector<double> initial_macro(const RunConfig& cfg, const Grid& grid, const RunOptions& options) {
  if (options.initial_macro) {
    check_size(*options.initial_macro, grid.elem_count(), "initial macro field");
    return fit_volume(*options.initial_macro, cfg.v_macro, cfg.simp.rho_min);
  }
  return std::vector<double>(grid.elem_count(), cfg.v_macro);
}

}  // namespace

std::vector<double> seed_micro(const MicroSeed& spec, const Grid& grid, double rho_min) {
  std::vector<double> rho(grid.elem_count(), 1.0);
  if (spec.shape == SeedShape::none) return rho;
  if (!(spec.size >= 0.0)) throw InvalidArgument("seed size must be >= 0");
  const double w = grid.nx();
  const double h = grid.ny();
  const double size = spec.size > 0.0 ? spec.size : (spec.placement == SeedPlacement::central ? 0.5 : 0.3) * w;
  const double r = 0.5 * size;
  for (const auto& f : placements(spec.placement)) {
    const double cx = f.cx * w;
    const double cy = f.cy * h;
    if (cx - r < 0.0 || cx + r > w || cy - r < 0.0 || cy + r > h) {
      throw InvalidArgument("seed feature of size " + std::to_string(size) + " does not fit inside the cell");
    }
    for (int j = 0; j < grid.ny(); ++j) {
      for (int i = 0; i < grid.nx(); ++i) {
        const double dx = std::abs(i + 0.5 - cx);
        const double dy = std::abs(j + 0.5 - cy);
        bool inside = false;
        switch (spec.shape) {
          case SeedShape::circle: inside = dx * dx + dy * dy <= r * r; break;
          case SeedShape::square: inside = std::max(dx, dy) <= r; break;
          case SeedShape::diamond: inside = dx + dy <= r; break;
          case SeedShape::none: break;
        }
        if (inside) rho[grid.elem(i, j)] = rho_min;
      }
    }
  }
  return rho;
}

std::vector<double> fit_volume(std::vector<double> field, double target, double rho_min) {
  if (field.empty()) return field;
  if (!(target >= rho_min && target <= 1.0)) throw InvalidArgument("volume target outside [rho_min, 1]");
  for (double& v : field) v = std::clamp(v, rho_min, 1.0);
  const double m = mean(field);
  if (m > target) {
    const double c = (target - rho_min) / (m - rho_min);
    for (double& v : field) v = rho_min + (v - rho_min) * c;
  } else if (m < target) {
    const double c = (1.0 - target) / (1.0 - m);
    for (double& v : field) v = 1.0 - (1.0 - v) * c;
  }
  return field;
}

MacroModel macro_model(const RunConfig& cfg) {
  MacroModel m;
  m.grid = build_grid(cfg.macro.nx, cfg.macro.ny, cfg.macro.dx, cfg.macro.dy);
  m.base = cfg.base;
  m.simp = cfg.simp;
  m.heat = cfg.heat;
  m.diss = cfg.diss;
  m.bc = default_mechanical_bc(m.grid, cfg.k_out);
  return m;
}

Grid micro_grid(const RunConfig& cfg) {
  return build_grid(cfg.micro.nx, cfg.micro.ny, 1.0 / cfg.micro.nx, 1.0 / cfg.micro.ny);
}

std::vector<double> RunResult::u_out_history() const {
  std::vector<double> u;
  u.reserve(history.size());
  for (const auto& r : history) u.push_back(r.u_out);
  return u;
}

RunResult run_single_scale(const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  LoopSetup setup;
  setup.mode = RunMode::single;
  setup.model = macro_model(cfg);
  setup.macro = make_plan(setup.model.grid, cfg.v_macro, cfg.opt_macro, false, true);
  setup.fixed_props = options.props;
  return start(cfg, setup, initial_macro(cfg, setup.model.grid, options), {}, options);
}

RunResult run_concurrent(const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  LoopSetup setup;
  setup.mode = RunMode::concurrent;
  setup.model = macro_model(cfg);
  setup.micro = micro_grid(cfg);
  setup.macro = make_plan(setup.model.grid, cfg.v_macro, cfg.opt_macro, false, true);
  setup.micro_plan = make_plan(setup.micro, cfg.v_micro, cfg.opt_micro, true, true);
  return start(cfg, setup, initial_macro(cfg, setup.model.grid, options), initial_micro(cfg, setup.micro, options),
               options);
}

RunResult run_sequential(const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  LoopSetup setup;
  setup.mode = RunMode::sequential;
  setup.model = macro_model(cfg);
  setup.micro = micro_grid(cfg);
  const int ne = setup.model.grid.elem_count();

  std::vector<double> macro;
  if (options.resume) {
    macro = read_checkpoint(*options.resume).fixed_macro;
  } else if (!cfg.macro_input.empty()) {
    const FieldSnapshot snap = read_snapshot(cfg.macro_input);
    if (snap.nx != cfg.macro.nx || snap.ny != cfg.macro.ny) {
      throw InvalidArgument("macro input grid " + std::to_string(snap.nx) + "x" + std::to_string(snap.ny) +
                            " does not match the configured macro grid");
    }
    macro = snap.density;
  } else {
    RunConfig inline_cfg = cfg;
    inline_cfg.mode = RunMode::single;
    inline_cfg.output_dir.clear();
    RunOptions inline_opts;
    inline_opts.initial_macro = options.initial_macro;
    inline_opts.write_checkpoints = false;
    macro = run_single_scale(inline_cfg, inline_opts).macro_rho;
  }
  check_size(macro, ne, "macro design");
  for (double v : macro) {
    if (!(v >= cfg.simp.rho_min - 1e-12 && v <= 1.0 + 1e-12)) throw InvalidArgument("macro design outside [rho_min, 1]");
  }

  setup.macro.present = true;
  setup.macro.optimize = false;
  setup.macro.filtered = false;
  setup.macro.target = cfg.v_macro;
  setup.macro.settings = cfg.opt_macro;
  setup.micro_plan = make_plan(setup.micro, cfg.v_micro, cfg.opt_micro, true, true);
  // The micro field alone drives convergence here.
  setup.macro.settings.max_iters = cfg.opt_micro.max_iters;
  RunOptions opts = options;
  return start(cfg, setup, macro, initial_micro(cfg, setup.micro, options), opts);
}

RunResult run(const RunConfig& cfg, const RunOptions& options) {
  switch (cfg.mode) {
    case RunMode::single: return run_single_scale(cfg, options);
    case RunMode::concurrent: return run_concurrent(cfg, options);
    case RunMode::sequential: return run_sequential(cfg, options);
  }
  throw InvalidArgument("unknown run mode");
}

std::string trigger_name(StopTrigger t) {
  switch (t) {
    case StopTrigger::none: return "none";
    case StopTrigger::change: return "change";
    case StopTrigger::budget: return "budget";
  }
  return "none";
}

void write_run_outputs(const RunConfig& cfg, const RunResult& r) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir.empty() ? "." : cfg.output_dir);
  const MacroModel model = macro_model(cfg);
  const std::string csv = (dir / "history.csv").string();
  std::error_code ec;
  fs::remove(csv, ec);
  for (const auto& row : r.history) append_history_csv(row, csv);
  write_density_pgm(r.macro_rho, model.grid, (dir / "macro.pgm").string());
  write_vtk_legacy(model.grid, r.macro_rho, &r.temperature, (dir / "macro.vtk").string());
  write_snapshot({r.iterations, "macro", cfg.macro.nx, cfg.macro.ny, r.macro_rho, r.u_out(), mean(r.macro_rho)},
                 (dir / "macro.json").string());
  if (!r.micro_rho.empty()) {
    const Grid mg = micro_grid(cfg);
    write_density_pgm(r.micro_rho, mg, (dir / "micro.pgm").string());
    write_vtk_legacy(mg, r.micro_rho, nullptr, (dir / "micro.vtk").string());
    write_snapshot({r.iterations, "micro", cfg.micro.nx, cfg.micro.ny, r.micro_rho, r.u_out(), mean(r.micro_rho)},
                   (dir / "micro.json").string());
    write_homog_report(r.props, (dir / "homog.json").string());
  }
  nlohmann::json j;
  j["mode"] = mode_name(r.mode);
  j["iterations"] = r.iterations;
  j["termination"] = trigger_name(r.termination);
  j["u_out"] = r.u_out();
  j["vol_macro"] = mean(r.macro_rho);
  j["vol_micro"] = r.micro_rho.empty() ? 0.0 : mean(r.micro_rho);
  j["exposure_sum"] = r.exposure_sum;
  j["peak_interior_T"] = r.peak_interior_T;
  write_text_file((dir / "result.json").string(), j.dump(1) + "\n");
  write_text_file((dir / "config.toml").string(), dump_config(cfg));
}

}  // namespace thermotop
