#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "thermotop/driver.hpp"
#include "thermotop/errors.hpp"
#include "thermotop/gradcheck.hpp"
#include "thermotop/io.hpp"
#include "thermotop/rve.hpp"

namespace fs = std::filesystem;
using namespace thermotop;

namespace {

enum Exit { kOk = 0, kFailed = 1, kConfig = 2, kSolver = 3, kNonConvergence = 4 };

int exit_code_for(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError&) {
    return kConfig;
  } catch (const InvalidArgument&) {
    return kConfig;
  } catch (const IoError&) {
    return kConfig;
  } catch (const NonConvergence&) {
    return kNonConvergence;
  } catch (const OptimizerStall&) {
    return kNonConvergence;
  } catch (const Error&) {
    return kSolver;
  } catch (...) {
    return kSolver;
  }
}

RunConfig load_with_out(const std::string& path, const std::string& out) {
  RunConfig cfg = load_config(path);
  if (!out.empty()) cfg.output_dir = out;
  return cfg;
}

void print_iteration(const IterationRecord& r) {
  std::printf("iter %4d  u_out %.6e  vol %.4f/%.4f  change %.4f  newton %d\n", r.iter, r.u_out, r.vol_macro,
              r.vol_micro, r.max_change, r.newton_iters);
  std::fflush(stdout);
}

void apply_seed_image(const RunConfig& cfg, const std::string& image, RunOptions& opts) {
  if (image.empty()) return;
  const PgmImage img = read_pgm(image);
  const std::vector<double> rho = pgm_to_density(img, cfg.simp.rho_min);
  // Single-scale runs seed the macro design; the multiscale modes seed the cell.
  if (cfg.mode == RunMode::single) {
    if (img.width != cfg.macro.nx || img.height != cfg.macro.ny)
      throw InvalidArgument("seed image size does not match the macro grid");
    opts.initial_macro = rho;
  } else {
    if (img.width != cfg.micro.nx || img.height != cfg.micro.ny)
      throw InvalidArgument("seed image size does not match the micro grid");
    opts.initial_micro = rho;
  }
}

int cmd_run(const std::string& config, const std::string& out, const std::string& resume,
            const std::string& seed_image, bool quiet) {
  const RunConfig cfg = load_with_out(config, out);
  RunOptions opts;
  if (!resume.empty()) opts.resume = resume;
  apply_seed_image(cfg, seed_image, opts);
  if (!quiet) opts.on_iteration = print_iteration;
  fs::create_directories(cfg.output_dir);
  const RunResult r = run(cfg, opts);
  write_run_outputs(cfg, r);
  std::printf("%s run finished after %d iterations (%s): u_out = %.10e\n", mode_name(r.mode).c_str(), r.iterations,
              trigger_name(r.termination).c_str(), r.u_out());
  return kOk;
}

struct Axis {
  std::string key;
  std::vector<std::string> values;
};

Axis parse_vary(const std::string& spec) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
    throw ConfigError("--vary expects key=v1,v2,...: " + spec);
  Axis a;
  a.key = spec.substr(0, eq);
  std::stringstream ss(spec.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw ConfigError("empty value in --vary " + spec);
    a.values.push_back(item);
  }
  return a;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+') ? c : '_';
  return out;
}

int cmd_sweep(const std::string& config, const std::string& out, const std::vector<std::string>& vary, int jobs,
              bool quiet) {
  const RunConfig base = load_with_out(config, out);
  std::vector<Axis> axes;
  for (const auto& v : vary) axes.push_back(parse_vary(v));
  if (axes.empty()) throw ConfigError("sweep needs at least one --vary");

  struct Case {
    RunConfig cfg;
    std::vector<std::string> values;
    std::string status = "ok";
    int code = kOk;
    RunResult result;
  };
  std::vector<Case> cases;
  size_t total = 1;
  for (const auto& a : axes) total *= a.values.size();
  for (size_t k = 0; k < total; ++k) {
    Case c;
    c.cfg = base;
    std::string name;
    // Mixed-radix decode with the last axis varying fastest.
    std::vector<size_t> idx(axes.size());
    size_t rest = k;
    for (size_t a = axes.size(); a-- > 0;) {
      idx[a] = rest % axes[a].values.size();
      rest /= axes[a].values.size();
    }
    for (size_t a = 0; a < axes.size(); ++a) {
      const std::string& v = axes[a].values[idx[a]];
      apply_override(c.cfg, axes[a].key, v);
      c.values.push_back(v);
      name += (name.empty() ? "" : "__") + sanitize(axes[a].key) + "=" + sanitize(v);
    }
    c.cfg.validate();
    c.cfg.output_dir = (fs::path(base.output_dir) / name).string();
    cases.push_back(std::move(c));
  }

  std::mutex io_mutex;
  const auto work = [&](Case& c) {
    try {
      fs::create_directories(c.cfg.output_dir);
      RunOptions opts;
      if (!quiet) {
        opts.on_iteration = [&](const IterationRecord& r) {
          std::lock_guard<std::mutex> lock(io_mutex);
          std::printf("[%s] ", c.cfg.output_dir.c_str());
          print_iteration(r);
        };
      }
      c.result = run(c.cfg, opts);
      write_run_outputs(c.cfg, c.result);
    } catch (const std::exception& e) {
      c.code = exit_code_for(std::current_exception());
      c.status = e.what();
    }
  };
  const size_t n_jobs = static_cast<size_t>(std::max(1, jobs));
  std::vector<std::thread> pool;
  size_t next = 0;
  std::mutex next_mutex;
  for (size_t t = 0; t < std::min(n_jobs, cases.size()); ++t) {
    pool.emplace_back([&] {
      for (;;) {
        size_t i;
        {
          std::lock_guard<std::mutex> lock(next_mutex);
          if (next >= cases.size()) return;
          i = next++;
        }
        work(cases[i]);
      }
    });
  }
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  for (const auto& a : axes) csv << a.key << ",";
  csv << "u_out,iterations,termination,vol_macro,vol_micro,exposure_sum,peak_interior_T,status\n";
  csv.precision(17);
  int code = kOk;
  for (const auto& c : cases) {
    for (const auto& v : c.values) csv << v << ",";
    const auto& r = c.result;
    const bool ok = c.code == kOk;
    csv << (ok ? r.u_out() : 0.0) << "," << r.iterations << "," << trigger_name(r.termination) << ","
        << (ok ? mean(r.macro_rho) : 0.0) << "," << (ok && !r.micro_rho.empty() ? mean(r.micro_rho) : 0.0) << ","
        << r.exposure_sum << "," << r.peak_interior_T << ",\"" << c.status << "\"\n";
    if (code == kOk && !ok) code = c.code;
  }
  write_text_file((fs::path(base.output_dir) / "summary.csv").string(), csv.str());
  std::printf("sweep of %zu runs written to %s\n", cases.size(), base.output_dir.c_str());
  return code;
}

int cmd_homog(const std::string& config, const std::string& out, const std::string& seed_image) {
  const RunConfig cfg = load_with_out(config, out);
  const Grid grid = micro_grid(cfg);
  std::vector<double> rho;
  if (!seed_image.empty()) {
    const PgmImage img = read_pgm(seed_image);
    if (img.width != cfg.micro.nx || img.height != cfg.micro.ny)
      throw InvalidArgument("seed image size does not match the micro grid");
    rho = pgm_to_density(img, cfg.simp.rho_min);
  } else {
    rho = seed_micro(cfg.seed, grid, cfg.simp.rho_min);
  }
  const Homogenization hom = homogenize(MicroCell::unit(cfg.micro.nx, cfg.micro.ny, rho, cfg.simp, cfg.base));
  fs::create_directories(cfg.output_dir);
  write_homog_report(hom.props, (fs::path(cfg.output_dir) / "homog.json").string());
  write_density_pgm(rho, grid, (fs::path(cfg.output_dir) / "cell.pgm").string());
  std::printf("cell volume %.6f\n%s", mean(rho), homog_report_json(hom.props).c_str());
  return kOk;
}

int cmd_validate(const std::string& config, int mesh, double tolerance) {
  const RunConfig cfg = load_config(config);
  const ValidationReport rep = validate_gradients(cfg, mesh);
  bool ok = rep.macro.max_relative_error < tolerance;
  std::printf("macro gradient: max relative error %.3e over %zu elements\n", rep.macro.max_relative_error,
              rep.macro.adjoint.size());
  if (rep.micro) {
    std::printf("micro gradient: max relative error %.3e over %zu elements\n", rep.micro->max_relative_error,
                rep.micro->adjoint.size());
    ok = ok && rep.micro->max_relative_error < tolerance;
  }
  std::printf("%s (tolerance %.1e)\n", ok ? "PASS" : "FAIL", tolerance);
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concurrent multiscale thermoelastic topology optimization"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string resume;
  std::string seed_image;
  std::vector<std::string> vary;
  int jobs = 1;
  int mesh = 8;
  double tolerance = 1e-3;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Optimize one configuration");
  run->add_option("config", config, "Configuration file")->required();
  run->add_option("--out", out, "Output directory (overrides run.output_dir)");
  run->add_option("--resume", resume, "Continue from a checkpoint");
  run->add_option("--seed-image", seed_image, "Initial density from a P5 PGM");
  run->add_flag("-q,--quiet", quiet, "No per-iteration output");

  auto* sweep = app.add_subcommand("sweep", "Run the Cartesian product of parameter lists");
  sweep->add_option("config", config, "Base configuration file")->required();
  sweep->add_option("--vary", vary, "key=v1,v2,... (repeatable)")->required();
  sweep->add_option("--out", out, "Root output directory");
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_flag("-q,--quiet", quiet, "No per-iteration output");

  auto* homog = app.add_subcommand("homog", "Homogenized tensors of the configured micro cell");
  homog->add_option("config", config, "Configuration file")->required();
  homog->add_option("--out", out, "Output directory");
  homog->add_option("--seed-image", seed_image, "Cell density from a P5 PGM");

  auto* validate = app.add_subcommand("validate", "Finite-difference check of the adjoint gradients");
  validate->add_option("config", config, "Configuration file")->required();
  validate->add_option("--mesh", mesh, "Reduced mesh size")->check(CLI::Range(2, 64));
  validate->add_option("--tol", tolerance, "Pass threshold on the max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }

  try {
    if (*run) return cmd_run(config, out, resume, seed_image, quiet);
    if (*sweep) return cmd_sweep(config, out, vary, jobs, quiet);
    if (*homog) return cmd_homog(config, out, seed_image);
    if (*validate) return cmd_validate(config, mesh, tolerance);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(std::current_exception());
  }
  return kOk;
}
