#pragma once

#include <optional>
#include <string>

#include "thermotop/elastic.hpp"
#include "thermotop/material.hpp"
#include "thermotop/opt.hpp"
#include "thermotop/thermal.hpp"

namespace thermotop {

enum class RunMode { single, concurrent, sequential };

struct GridSpec {
  int nx = 100;
  int ny = 100;
  double dx = 1.0;
  double dy = 1.0;
};

enum class SeedShape { none, circle, square, diamond };
enum class SeedPlacement { central, eccentric_top_left, three, four };

/// Void features punched into a solid cell. size is the feature diameter
/// (circle, diamond) or side (square) in elements; 0 selects the default,
/// half the cell width for a central feature and 0.3 of it otherwise.
struct MicroSeed {
  SeedShape shape = SeedShape::circle;
  SeedPlacement placement = SeedPlacement::central;
  double size = 0.0;
};

struct RunConfig {
  RunMode mode = RunMode::single;
  GridSpec macro;
  GridSpec micro;
  double v_macro = 0.5;
  double v_micro = 0.5;
  BaseMaterial base;
  SimpParams simp;
  HeatInput heat;
  DissipationParams diss;
  double k_out = 0.01;
  OptimizerSettings opt_macro;
  OptimizerSettings opt_micro;
  MicroSeed seed;
  std::string output_dir = "out";
  int checkpoint_interval = 10;
  bool log_wall_time = false;
  std::string macro_input;  // sequential mode: snapshot of a finished macro design

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

}  // namespace thermotop
