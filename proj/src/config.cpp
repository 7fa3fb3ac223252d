#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

#include "thermotop/errors.hpp"
#include "thermotop/io.hpp"

namespace thermotop {

namespace {

using Value = std::variant<double, bool, std::string, std::vector<double>>;

std::string trim(std::string_view s) {
  size_t a = 0;
  size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

Value parse_value(const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError("missing value", line);
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw ConfigError("unterminated string", line);
    const std::string body = s.substr(1, s.size() - 2);
    if (body.find('"') != std::string::npos) throw ConfigError("stray quote in string", line);
    return body;
  }
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError("unterminated array", line);
    std::vector<double> items;
    const std::string body = trim(std::string_view(s).substr(1, s.size() - 2));
    if (body.empty()) return items;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      double v = 0.0;
      if (!parse_number(trim(item), v)) throw ConfigError("array items must be numbers", line);
      items.push_back(v);
    }
    return items;
  }
  double v = 0.0;
  if (!parse_number(s, v)) throw ConfigError("cannot parse value '" + s + "'", line);
  return v;
}

double as_number(const Value& v, const std::string& key, int line) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw ConfigError(key + " expects a number", line);
}

int as_int(const Value& v, const std::string& key, int line) {
  const double d = as_number(v, key, line);
  if (d != static_cast<double>(static_cast<long long>(d)) || std::abs(d) > 1e9) {
    throw ConfigError(key + " expects an integer", line);
  }
  return static_cast<int>(d);
}

bool as_bool(const Value& v, const std::string& key, int line) {
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError(key + " expects true or false", line);
}

std::string as_string(const Value& v, const std::string& key, int line) {
  if (const std::string* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError(key + " expects a quoted string", line);
}

template <class Enum>
Enum as_enum(const Value& v, const std::string& key, int line,
             const std::vector<std::pair<const char*, Enum>>& names) {
  const std::string s = as_string(v, key, line);
  for (const auto& [name, e] : names)
    if (s == name) return e;
  std::string allowed;
  for (const auto& [name, e] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  throw ConfigError(key + " must be one of: " + allowed, line);
}

const std::vector<std::pair<const char*, RunMode>> kModes = {
    {"single", RunMode::single}, {"concurrent", RunMode::concurrent}, {"sequential", RunMode::sequential}};
const std::vector<std::pair<const char*, HeatMode>> kHeatModes = {
    {"parabolic", HeatMode::dirichlet_parabolic},
    {"laser_flat", HeatMode::laser_flat},
    {"laser_gaussian", HeatMode::laser_gaussian}};
const std::vector<std::pair<const char*, RadiationScope>> kScopes = {
    {"boundary", RadiationScope::outer_boundary_only}, {"exposed", RadiationScope::all_exposed_faces}};
const std::vector<std::pair<const char*, SeedShape>> kShapes = {
    {"none", SeedShape::none}, {"circle", SeedShape::circle}, {"square", SeedShape::square},
    {"diamond", SeedShape::diamond}};
const std::vector<std::pair<const char*, SeedPlacement>> kPlacements = {
    {"central", SeedPlacement::central},
    {"eccentric_top_left", SeedPlacement::eccentric_top_left},
    {"three", SeedPlacement::three},
    {"four", SeedPlacement::four}};

template <class Enum>
std::string enum_name(Enum e, const std::vector<std::pair<const char*, Enum>>& names) {
  for (const auto& [name, v] : names)
    if (v == e) return name;
  return "?";
}

using Setter = std::function<void(RunConfig&, const Value&, const std::string&, int)>;

void add_optimizer_keys(std::map<std::string, Setter>& t, const std::string& sec,
                        OptimizerSettings RunConfig::*member) {
  t[sec + ".r_min"] = [member](RunConfig& c, const Value& v, const std::string& k, int l) {
    (c.*member).r_min = as_number(v, k, l);
  };
  t[sec + ".move"] = [member](RunConfig& c, const Value& v, const std::string& k, int l) {
    (c.*member).move = as_number(v, k, l);
  };
  t[sec + ".eta"] = [member](RunConfig& c, const Value& v, const std::string& k, int l) {
    (c.*member).eta = as_number(v, k, l);
  };
  t[sec + ".max_iters"] = [member](RunConfig& c, const Value& v, const std::string& k, int l) {
    (c.*member).max_iters = as_int(v, k, l);
  };
  t[sec + ".tol_change"] = [member](RunConfig& c, const Value& v, const std::string& k, int l) {
    (c.*member).tol_change = as_number(v, k, l);
  };
  t[sec + ".volume_tol"] = [member](RunConfig& c, const Value& v, const std::string& k, int l) {
    (c.*member).volume_tol = as_number(v, k, l);
  };
}

#define NUM(key, field) t[key] = [](RunConfig& c, const Value& v, const std::string& k, int l) { c.field = as_number(v, k, l); }
#define INT(key, field) t[key] = [](RunConfig& c, const Value& v, const std::string& k, int l) { c.field = as_int(v, k, l); }
#define BOOL(key, field) t[key] = [](RunConfig& c, const Value& v, const std::string& k, int l) { c.field = as_bool(v, k, l); }
#define STR(key, field) t[key] = [](RunConfig& c, const Value& v, const std::string& k, int l) { c.field = as_string(v, k, l); }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["run.mode"] = [](RunConfig& c, const Value& v, const std::string& k, int l) {
      c.mode = as_enum(v, k, l, kModes);
    };
    STR("run.output_dir", output_dir);
    INT("run.checkpoint_interval", checkpoint_interval);
    BOOL("run.log_wall_time", log_wall_time);
    STR("run.macro_input", macro_input);
    INT("macro.nx", macro.nx);
    INT("macro.ny", macro.ny);
    NUM("macro.dx", macro.dx);
    NUM("macro.dy", macro.dy);
    NUM("macro.volume", v_macro);
    INT("micro.nx", micro.nx);
    INT("micro.ny", micro.ny);
    NUM("micro.volume", v_micro);
    NUM("material.E0", base.E0);
    NUM("material.nu", base.nu);
    NUM("material.k0", base.k0);
    NUM("material.alpha0", base.alpha0);
    NUM("material.thickness", base.thickness);
    NUM("simp.p", simp.p);
    NUM("simp.p_k", simp.p_k);
    NUM("simp.rho_min", simp.rho_min);
    t["heat.mode"] = [](RunConfig& c, const Value& v, const std::string& k, int l) {
      c.heat.mode = as_enum(v, k, l, kHeatModes);
    };
    NUM("heat.T_min", heat.T_min);
    NUM("heat.T_max", heat.T_max);
    NUM("heat.I0", heat.I0);
    NUM("heat.Rs", heat.Rs);
    NUM("heat.Av", heat.Av);
    t["heat.center"] = [](RunConfig& c, const Value& v, const std::string& k, int l) {
      const auto* a = std::get_if<std::vector<double>>(&v);
      if (!a || a->size() != 2) throw ConfigError(k + " expects [x, y]", l);
      c.heat.center = std::array<double, 2>{(*a)[0], (*a)[1]};
    };
    NUM("dissipation.h", diss.h);
    NUM("dissipation.T_s", diss.T_s);
    NUM("dissipation.eps", diss.eps);
    NUM("dissipation.q", diss.q_exposure);
    BOOL("dissipation.radiation", diss.radiation);
    t["dissipation.radiation_scope"] = [](RunConfig& c, const Value& v, const std::string& k, int l) {
      c.diss.scope = as_enum(v, k, l, kScopes);
    };
    NUM("mechanics.k_out", k_out);
    add_optimizer_keys(t, "optimizer.macro", &RunConfig::opt_macro);
    add_optimizer_keys(t, "optimizer.micro", &RunConfig::opt_micro);
    t["seed.shape"] = [](RunConfig& c, const Value& v, const std::string& k, int l) {
      c.seed.shape = as_enum(v, k, l, kShapes);
    };
    t["seed.placement"] = [](RunConfig& c, const Value& v, const std::string& k, int l) {
      c.seed.placement = as_enum(v, k, l, kPlacements);
    };
    NUM("seed.size", seed.size);
    return t;
  }();
  return table;
}

#undef NUM
#undef INT
#undef BOOL
#undef STR

const std::vector<std::string> kSections = {"run",  "macro", "micro",           "material",        "simp",
                                            "heat", "dissipation", "mechanics", "optimizer.macro",
                                            "optimizer.micro", "seed"};

std::string resolve_alias(const std::string& key) {
  if (key == "h") return "dissipation.h";
  if (key == "eps") return "dissipation.eps";
  if (key == "v_M") return "macro.volume";
  if (key == "v_m") return "micro.volume";
  return key;
}

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string boolean(bool b) { return b ? "true" : "false"; }

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void validate_optimizer(const OptimizerSettings& o, const std::string& sec) {
  check(o.r_min >= 0.0, sec + ".r_min must be >= 0");
  check(o.move >= 0.0 && o.move <= 1.0, sec + ".move must lie in [0, 1]");
  check(o.eta > 0.0 && o.eta <= 1.0, sec + ".eta must lie in (0, 1]");
  check(o.max_iters >= 1, sec + ".max_iters must be >= 1");
  check(o.tol_change >= 0.0, sec + ".tol_change must be >= 0");
  check(o.volume_tol > 0.0, sec + ".volume_tol must be > 0");
}

}  // namespace

void RunConfig::validate() const {
  check(macro.nx >= 1 && macro.ny >= 1, "macro.nx and macro.ny must be >= 1");
  check(macro.dx > 0.0 && macro.dy > 0.0, "macro.dx and macro.dy must be > 0");
  check(micro.nx >= 1 && micro.ny >= 1, "micro.nx and micro.ny must be >= 1");
  check(v_macro > 0.0 && v_macro <= 1.0, "macro.volume (v_M) must lie in (0, 1]");
  check(v_micro > 0.0 && v_micro <= 1.0, "micro.volume (v_m) must lie in (0, 1]");
  check(v_macro >= simp.rho_min && v_micro >= simp.rho_min, "volume targets must be >= simp.rho_min");
  check(base.E0 > 0.0, "material.E0 must be > 0");
  check(base.nu >= 0.0 && base.nu < 0.5, "material.nu must lie in [0, 0.5)");
  check(base.k0 > 0.0, "material.k0 must be > 0");
  check(std::isfinite(base.alpha0), "material.alpha0 must be finite");
  check(base.thickness > 0.0, "material.thickness must be > 0");
  check(simp.p >= 1.0, "simp.p must be >= 1");
  check(simp.p_k >= 1.0, "simp.p_k must be >= 1");
  check(simp.rho_min > 0.0 && simp.rho_min < 1.0, "simp.rho_min must lie in (0, 1)");
  check(heat.T_min > 0.0 && heat.T_max > 0.0, "heat.T_min and heat.T_max must be > 0");
  check(heat.Rs > 0.0, "heat.Rs must be > 0");
  check(heat.I0 >= 0.0 && heat.Av >= 0.0, "heat.I0 and heat.Av must be >= 0");
  check(diss.h >= 0.0, "dissipation.h must be >= 0");
  check(diss.T_s > 0.0, "dissipation.T_s must be > 0");
  check(diss.eps >= 0.0 && diss.eps <= 1.0, "dissipation.eps must lie in [0, 1]");
  check(diss.q_exposure > 0.0, "dissipation.q must be > 0");
  check(k_out >= 0.0, "mechanics.k_out must be >= 0");
  check(checkpoint_interval >= 0, "run.checkpoint_interval must be >= 0");
  check(seed.size >= 0.0, "seed.size must be >= 0");
  validate_optimizer(opt_macro, "optimizer.macro");
  validate_optimizer(opt_micro, "optimizer.micro");
  if (heat.mode != HeatMode::dirichlet_parabolic) {
    check(diss.h > 0.0 || (diss.radiation && diss.eps > 0.0),
          "laser heating needs a heat sink: set dissipation.h > 0 or enable radiation");
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::map<std::string, int> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // Strip comments outside quotes.
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        line.resize(i);
        break;
      }
    }
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", lineno);
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        throw ConfigError("unknown section [" + section + "]", lineno);
      }
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
    const std::string key = trim(std::string_view(s).substr(0, eq));
    if (section.empty()) throw ConfigError("key '" + key + "' outside of a section", lineno);
    const std::string full = section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError("unknown key '" + full + "'", lineno);
    if (seen.count(full)) throw ConfigError("duplicate key '" + full + "'", lineno);
    seen[full] = lineno;
    it->second(cfg, parse_value(s.substr(eq + 1), lineno), full, lineno);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  const std::string full = resolve_alias(key);
  const auto it = setters().find(full);
  if (it == setters().end()) throw ConfigError("unknown key '" + key + "'");
  // Command-line values may omit the quotes around strings.
  std::string v = trim(value);
  double ignored = 0.0;
  if (!v.empty() && v.front() != '"' && v.front() != '[' && v != "true" && v != "false" &&
      !parse_number(v, ignored)) {
    v = quoted(v);
  }
  it->second(cfg, parse_value(v, 0), full, 0);
}

std::string mode_name(RunMode mode) { return enum_name(mode, kModes); }

std::string dump_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[run]\n"
    << "mode = " << quoted(enum_name(c.mode, kModes)) << "\n"
    << "output_dir = " << quoted(c.output_dir) << "\n"
    << "checkpoint_interval = " << c.checkpoint_interval << "\n"
    << "log_wall_time = " << boolean(c.log_wall_time) << "\n"
    << "macro_input = " << quoted(c.macro_input) << "\n\n";
  o << "[macro]\n"
    << "nx = " << c.macro.nx << "\nny = " << c.macro.ny << "\n"
    << "dx = " << num(c.macro.dx) << "\ndy = " << num(c.macro.dy) << "\n"
    << "volume = " << num(c.v_macro) << "\n\n";
  o << "[micro]\n"
    << "nx = " << c.micro.nx << "\nny = " << c.micro.ny << "\n"
    << "volume = " << num(c.v_micro) << "\n\n";
  o << "[material]\n"
    << "E0 = " << num(c.base.E0) << "\nnu = " << num(c.base.nu) << "\nk0 = " << num(c.base.k0) << "\n"
    << "alpha0 = " << num(c.base.alpha0) << "\nthickness = " << num(c.base.thickness) << "\n\n";
  o << "[simp]\n"
    << "p = " << num(c.simp.p) << "\np_k = " << num(c.simp.p_k) << "\nrho_min = " << num(c.simp.rho_min)
    << "\n\n";
  o << "[heat]\n"
    << "mode = " << quoted(enum_name(c.heat.mode, kHeatModes)) << "\n"
    << "T_min = " << num(c.heat.T_min) << "\nT_max = " << num(c.heat.T_max) << "\n"
    << "I0 = " << num(c.heat.I0) << "\nRs = " << num(c.heat.Rs) << "\nAv = " << num(c.heat.Av) << "\n";
  if (c.heat.center) o << "center = [" << num((*c.heat.center)[0]) << ", " << num((*c.heat.center)[1]) << "]\n";
  o << "\n[dissipation]\n"
    << "h = " << num(c.diss.h) << "\nT_s = " << num(c.diss.T_s) << "\neps = " << num(c.diss.eps) << "\n"
    << "q = " << num(c.diss.q_exposure) << "\nradiation = " << boolean(c.diss.radiation) << "\n"
    << "radiation_scope = " << quoted(enum_name(c.diss.scope, kScopes)) << "\n\n";
  o << "[mechanics]\n"
    << "k_out = " << num(c.k_out) << "\n";
  const auto opt = [&](const char* sec, const OptimizerSettings& s) {
    o << "\n[" << sec << "]\n"
      << "r_min = " << num(s.r_min) << "\nmove = " << num(s.move) << "\neta = " << num(s.eta) << "\n"
      << "max_iters = " << s.max_iters << "\ntol_change = " << num(s.tol_change) << "\n"
      << "volume_tol = " << num(s.volume_tol) << "\n";
  };
  opt("optimizer.macro", c.opt_macro);
  opt("optimizer.micro", c.opt_micro);
  o << "\n[seed]\n"
    << "shape = " << quoted(enum_name(c.seed.shape, kShapes)) << "\n"
    << "placement = " << quoted(enum_name(c.seed.placement, kPlacements)) << "\n"
    << "size = " << num(c.seed.size) << "\n";
  return o.str();
}

}  // namespace thermotop
