#include "thermotop/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "thermotop/errors.hpp"

namespace thermotop {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream f(path, mode);
  if (!f) throw IoError("cannot open " + path + " for writing");
  return f;
}

void finish(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw IoError("write to " + path + " failed");
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_json(const json& j, const std::string& path) {
  auto f = open_out(path);
  f << j.dump(1) << "\n";
  finish(f, path);
}

// Six significant digits, stored as a JSON number.
double sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

std::string next_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] != '#') return tok;
    std::string rest;
    std::getline(in, rest);
  }
  throw IoError("unexpected end of PGM header");
}

}  // namespace

void write_text_file(const std::string& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  finish(f, path);
}

void write_density_pgm(std::span<const double> rho, const Grid& grid, const std::string& path) {
  if (static_cast<int>(rho.size()) != grid.elem_count()) throw InvalidArgument("field size does not match grid");
  auto f = open_out(path, std::ios::out | std::ios::binary);
  f << "P5\n" << grid.nx() << " " << grid.ny() << "\n255\n";
  std::vector<char> row(grid.nx());
  for (int j = grid.ny() - 1; j >= 0; --j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const double r = std::clamp(rho[grid.elem(i, j)], 0.0, 1.0);
      row[i] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - r))));
    }
    f.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  finish(f, path);
}

PgmImage read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  PgmImage img;
  if (next_token(f) != "P5") throw IoError(path + ": not a binary PGM (P5)");
  try {
    img.width = std::stoi(next_token(f));
    img.height = std::stoi(next_token(f));
    if (std::stoi(next_token(f)) != 255) throw IoError(path + ": only 8-bit PGM is supported");
  } catch (const std::logic_error&) {
    throw IoError(path + ": malformed PGM header");
  }
  if (img.width <= 0 || img.height <= 0) throw IoError(path + ": bad PGM dimensions");
  f.get();  // single whitespace after maxval
  img.pixels.resize(static_cast<size_t>(img.width) * img.height);
  f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw IoError(path + ": truncated PGM");
  return img;
}

std::vector<double> pgm_to_density(const PgmImage& img, double rho_min) {
  std::vector<double> rho(img.pixels.size());
  for (int j = 0; j < img.height; ++j) {
    for (int i = 0; i < img.width; ++i) {
      const int src = (img.height - 1 - j) * img.width + i;
      rho[static_cast<size_t>(j) * img.width + i] = std::clamp(1.0 - img.pixels[src] / 255.0, rho_min, 1.0);
    }
  }
  return rho;
}

void write_vtk_legacy(const Grid& grid, std::span<const double> rho, const Eigen::VectorXd* temperature,
                      const std::string& path) {
  if (static_cast<int>(rho.size()) != grid.elem_count()) throw InvalidArgument("field size does not match grid");
  if (temperature && temperature->size() != grid.node_count()) {
    throw InvalidArgument("temperature size does not match grid");
  }
  auto f = open_out(path);
  f << std::setprecision(17);
  f << "# vtk DataFile Version 3.0\nthermotop design\nASCII\nDATASET STRUCTURED_POINTS\n"
    << "DIMENSIONS " << grid.nx() + 1 << " " << grid.ny() + 1 << " 1\n"
    << "ORIGIN 0 0 0\nSPACING " << grid.dx() << " " << grid.dy() << " 1\n"
    << "CELL_DATA " << grid.elem_count() << "\nSCALARS density double 1\nLOOKUP_TABLE default\n";
  for (double r : rho) f << r << "\n";
  if (temperature) {
    f << "POINT_DATA " << grid.node_count() << "\nSCALARS temperature double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < temperature->size(); ++i) f << (*temperature)[i] << "\n";
  }
  finish(f, path);
}

VtkFields read_vtk_legacy(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  VtkFields out;
  std::string tok;
  std::vector<double>* target = nullptr;
  size_t expected = 0;
  while (f >> tok) {
    if (tok == "DIMENSIONS") {
      int nz = 0;
      f >> out.nx >> out.ny >> nz;
      out.nx -= 1;
      out.ny -= 1;
    } else if (tok == "CELL_DATA" || tok == "POINT_DATA") {
      f >> expected;
      target = tok == "CELL_DATA" ? &out.density : &out.temperature;
    } else if (tok == "LOOKUP_TABLE") {
      f >> tok;
      if (!target) throw IoError(path + ": data block without a size");
      target->resize(expected);
      for (size_t i = 0; i < expected; ++i) {
        if (!(f >> (*target)[i])) throw IoError(path + ": truncated data block");
      }
    }
  }
  if (out.nx <= 0 || out.density.empty()) throw IoError(path + ": missing density data");
  return out;
}

void append_history_csv(const IterationRecord& row, const std::string& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  auto f = open_out(path, std::ios::out | std::ios::app);
  if (fresh) f << "iter,u_out,vol_macro,vol_micro,max_change,newton_iters,wall_ms\n";
  f << std::setprecision(17) << row.iter << "," << row.u_out << "," << row.vol_macro << "," << row.vol_micro
    << "," << row.max_change << "," << row.newton_iters << "," << row.wall_ms << "\n";
  finish(f, path);
}

std::string homog_report_json(const HomogenizedProps& props) {
  json j;
  json E = json::array();
  for (int r = 0; r < 3; ++r) E.push_back({sig6(props.E(r, 0)), sig6(props.E(r, 1)), sig6(props.E(r, 2))});
  json K = json::array();
  for (int r = 0; r < 2; ++r) K.push_back({sig6(props.kappa(r, 0)), sig6(props.kappa(r, 1))});
  j["elastic_tensor"] = E;
  j["conductivity"] = K;
  j["thermal_expansion"] = {sig6(props.alpha[0]), sig6(props.alpha[1]), sig6(props.alpha[2])};
  j["thermal_stress"] = {sig6(props.beta[0]), sig6(props.beta[1]), sig6(props.beta[2])};
  return j.dump(1) + "\n";
}

void write_homog_report(const HomogenizedProps& props, const std::string& path) {
  write_text_file(path, homog_report_json(props));
}

void write_snapshot(const FieldSnapshot& snap, const std::string& path) {
  json j;
  j["iteration"] = snap.iteration;
  j["scale"] = snap.scale;
  j["nx"] = snap.nx;
  j["ny"] = snap.ny;
  j["u_out"] = snap.u_out;
  j["volume"] = snap.volume;
  j["density"] = snap.density;
  write_json(j, path);
}

FieldSnapshot read_snapshot(const std::string& path) {
  const json j = read_json(path);
  FieldSnapshot s;
  try {
    s.iteration = j.at("iteration").get<int>();
    s.scale = j.at("scale").get<std::string>();
    s.nx = j.at("nx").get<int>();
    s.ny = j.at("ny").get<int>();
    s.u_out = j.at("u_out").get<double>();
    s.volume = j.at("volume").get<double>();
    s.density = j.at("density").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  if (s.scale != "macro" && s.scale != "micro") throw IoError(path + ": scale must be macro or micro");
  if (static_cast<int>(s.density.size()) != s.nx * s.ny) throw IoError(path + ": density length mismatch");
  return s;
}

void write_checkpoint(const Checkpoint& cp, const std::string& path) {
  json j;
  j["mode"] = mode_name(cp.mode);
  j["iteration"] = cp.iteration;
  j["x_macro"] = cp.x_macro;
  j["x_micro"] = cp.x_micro;
  j["fixed_macro"] = cp.fixed_macro;
  json h = json::array();
  for (const auto& r : cp.history) {
    h.push_back({r.iter, r.u_out, r.vol_macro, r.vol_micro, r.max_change, r.newton_iters, r.wall_ms});
  }
  j["history"] = h;
  // Write then rename so an interrupted run never leaves a torn checkpoint.
  const std::string tmp = path + ".tmp";
  write_json(j, tmp);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint read_checkpoint(const std::string& path) {
  const json j = read_json(path);
  Checkpoint cp;
  try {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "single") cp.mode = RunMode::single;
    else if (mode == "concurrent") cp.mode = RunMode::concurrent;
    else if (mode == "sequential") cp.mode = RunMode::sequential;
    else throw IoError(path + ": unknown mode " + mode);
    cp.iteration = j.at("iteration").get<int>();
    cp.x_macro = j.at("x_macro").get<std::vector<double>>();
    cp.x_micro = j.at("x_micro").get<std::vector<double>>();
    cp.fixed_macro = j.at("fixed_macro").get<std::vector<double>>();
    for (const auto& r : j.at("history")) {
      IterationRecord rec;
      rec.iter = r.at(0).get<int>();
      rec.u_out = r.at(1).get<double>();
      rec.vol_macro = r.at(2).get<double>();
      rec.vol_micro = r.at(3).get<double>();
      rec.max_change = r.at(4).get<double>();
      rec.newton_iters = r.at(5).get<int>();
      rec.wall_ms = r.at(6).get<double>();
      cp.history.push_back(rec);
    }
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return cp;
}

}  // namespace thermotop
