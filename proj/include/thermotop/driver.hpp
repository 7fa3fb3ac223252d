#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "thermotop/adjoint.hpp"
#include "thermotop/config.hpp"
#include "thermotop/io.hpp"
#include "thermotop/opt.hpp"

namespace thermotop {

/// Solid cell (1.0) with void features at rho_min. Circle membership uses the
/// element centroid distance, square the max-norm and diamond the L1 norm.
std::vector<double> seed_micro(const MicroSeed& spec, const Grid& grid, double rho_min);

/// Affine remap of a seed so its mean equals `target` while keeping the
/// pattern: solid values are lowered when the seed is too heavy, void values
/// raised when it is too light. Values stay within [rho_min, 1].
std::vector<double> fit_volume(std::vector<double> field, double target, double rho_min);

MacroModel macro_model(const RunConfig& cfg);
Grid micro_grid(const RunConfig& cfg);

struct RunResult {
  RunMode mode = RunMode::single;
  std::vector<double> macro_rho;  // physical (filtered) densities of the last analyzed design
  std::vector<double> micro_rho;  // empty in single-scale runs
  HomogenizedProps props;
  Eigen::VectorXd temperature;
  std::vector<IterationRecord> history;
  int iterations = 0;
  StopTrigger termination = StopTrigger::none;
  double exposure_sum = 0.0;      // sum of face exposure weights of the final macro design
  double peak_interior_T = 0.0;   // max temperature over nodes off the domain boundary

  double u_out() const { return history.empty() ? 0.0 : history.back().u_out; }
  std::vector<double> u_out_history() const;
};

struct RunOptions {
  std::optional<std::string> resume;                 // checkpoint to continue from
  std::optional<std::vector<double>> initial_macro;  // design variables, before volume fitting
  std::optional<std::vector<double>> initial_micro;
  std::optional<HomogenizedProps> props;             // single-scale material override
  bool write_checkpoints = true;
  std::function<void(const IterationRecord&)> on_iteration;
};

RunResult run_single_scale(const RunConfig& cfg, const RunOptions& options = {});
RunResult run_concurrent(const RunConfig& cfg, const RunOptions& options = {});
/// Macro design from cfg.macro_input when set, otherwise from an inline
/// single-scale run at v_M.
RunResult run_sequential(const RunConfig& cfg, const RunOptions& options = {});

RunResult run(const RunConfig& cfg, const RunOptions& options = {});

/// PGM/VTK/CSV/JSON artifacts of a finished run in cfg.output_dir.
void write_run_outputs(const RunConfig& cfg, const RunResult& result);

std::string trigger_name(StopTrigger t);

}  // namespace thermotop
