#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermotop/config.hpp"
#include "thermotop/grid.hpp"
#include "thermotop/material.hpp"

namespace thermotop {

// ---- configuration -------------------------------------------------------

/// Parses the TOML subset described in the README. Unknown sections or keys,
/// duplicates and malformed values raise ConfigError with the line number;
/// the result is validated before it is returned.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical text: every section and key in a fixed order, shortest
/// round-trip number formatting.
std::string dump_config(const RunConfig& cfg);

/// Sets one key from its textual value, e.g. ("dissipation.h", "1e-7").
/// Short aliases h, eps, v_M and v_m are accepted. Call validate() once all
/// overrides are in.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// ---- fields ---------------------------------------------------------------

/// Binary P5, one byte per element, top row first, gray = round(255 (1 - rho)).
void write_density_pgm(std::span<const double> rho, const Grid& grid, const std::string& path);

struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first
};

PgmImage read_pgm(const std::string& path);
/// Element-ordered densities (bottom row first) clipped to [rho_min, 1].
std::vector<double> pgm_to_density(const PgmImage& img, double rho_min);

/// Legacy ASCII STRUCTURED_POINTS file with element density as CELL_DATA and,
/// when given, nodal temperature as POINT_DATA.
void write_vtk_legacy(const Grid& grid, std::span<const double> rho, const Eigen::VectorXd* temperature,
                      const std::string& path);

struct VtkFields {
  int nx = 0;
  int ny = 0;
  std::vector<double> density;
  std::vector<double> temperature;
};

VtkFields read_vtk_legacy(const std::string& path);

struct IterationRecord {
  int iter = 0;
  double u_out = 0.0;
  double vol_macro = 0.0;
  double vol_micro = 0.0;
  double max_change = 0.0;
  int newton_iters = 0;
  double wall_ms = 0.0;
};

/// Appends one row, writing the header first when the file is new or empty.
void append_history_csv(const IterationRecord& row, const std::string& path);

std::string homog_report_json(const HomogenizedProps& props);
void write_homog_report(const HomogenizedProps& props, const std::string& path);

struct FieldSnapshot {
  int iteration = 0;
  std::string scale = "macro";  // macro | micro
  int nx = 0;
  int ny = 0;
  std::vector<double> density;
  double u_out = 0.0;
  double volume = 0.0;
};

void write_snapshot(const FieldSnapshot& snap, const std::string& path);
FieldSnapshot read_snapshot(const std::string& path);

/// Optimizer state after `iteration` completed updates.
struct Checkpoint {
  RunMode mode = RunMode::single;
  int iteration = 0;
  std::vector<double> x_macro;
  std::vector<double> x_micro;
  std::vector<double> fixed_macro;  // sequential mode only
  std::vector<IterationRecord> history;
};

void write_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

std::string mode_name(RunMode mode);

/// Writes `text` to `path`, raising IoError on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace thermotop
