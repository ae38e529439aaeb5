#pragma once

// JSON scenario files. Every key is optional except model, L and steps; unknown keys are
// rejected with their path.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlbm/circuit.hpp"
#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"
#include "qlbm/lattice.hpp"
#include "qlbm/readout.hpp"
#include "qlbm/walls.hpp"

namespace qlbm {

struct VelocitySpec {
  std::string preset = "zero";  // zero | constant | swirl | shear | channel | random | file
  double amplitude = -1.0;      // swirl: 0.2, shear: 1/3 when negative
  std::array<double, 3> value{0.0, 0.0, 0.0};
  double speed = 0.1;
  double max_abs = 0.3;
  std::uint64_t seed = 0;
  std::string path;  // CSV with header x,y,z,ux,uy,uz
};

struct InitialSpec {
  std::string type = "gaussian";  // gaussian | delta | uniform | box_surface
  double sigma = -1.0;            // L/8 when negative
  std::optional<std::array<double, 3>> center;
  double background = 0.0;
  Coord site{0, 0, 0};
  Coord lo{0, 0, 0}, hi{0, 0, 0};
};

struct SlabSpec {
  int axis = 0;
  int position = 0;
};

struct BoxSpec {
  Coord lo{0, 0, 0}, hi{0, 0, 0};
};

struct WallsSpec {
  std::vector<SlabSpec> slabs;
  std::vector<BoxSpec> boxes;
  std::vector<Coord> sites;
  bool empty() const { return slabs.empty() && boxes.empty() && sites.empty(); }
};

struct CrossSection {
  int axis = 1;
  int position = 0;
};

struct Scenario {
  std::string model;
  std::size_t L = 0;
  int steps = 0;
  VelocitySpec velocity;
  InitialSpec initial;
  WallsSpec walls;
  ReadoutMethod readout = ReadoutMethod::None;
  int readout_period = 1;
  std::uint64_t shots = 10000;
  int settings = 25;
  int chi = 4;
  double bandwidth = 0.5;
  double noise_p = 0.0;
  std::uint64_t seed = 0;
  std::string output = "out";
  Route route = Route::Isometry;
  GateOptions gates;
  FitConfig fit;
  std::vector<CrossSection> cross_sections;
  bool write_fields = true;
  std::filesystem::path base_dir;  // directory of the scenario file, for relative paths
};

namespace detail {

using nlohmann::json;

inline std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? std::string("scenario") : path) + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(join_path(path, it.key()) + ": unknown key");
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline long long get_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<long long>();
}

inline std::uint64_t get_unsigned(const json& j, const std::string& path) {
  const long long v = get_integer(j, path);
  if (v < 0) throw ConfigError(path + ": must be non-negative");
  return static_cast<std::uint64_t>(v);
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

inline Coord get_coord(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) throw ConfigError(path + ": expected 2 or 3 integers");
  Coord c{0, 0, 0};
  for (std::size_t i = 0; i < j.size(); ++i) c[i] = static_cast<int>(get_integer(j[i], path + "[" + std::to_string(i) + "]"));
  return c;
}

inline std::array<double, 3> get_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) throw ConfigError(path + ": expected 2 or 3 numbers");
  std::array<double, 3> v{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = get_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline void parse_velocity(const json& j, VelocitySpec& v) {
  const std::string p = "velocity";
  reject_unknown(j, p, {"preset", "amplitude", "value", "speed", "max_abs", "seed", "path"});
  if (j.contains("preset")) v.preset = get_string(j["preset"], p + ".preset");
  if (j.contains("amplitude")) v.amplitude = get_number(j["amplitude"], p + ".amplitude");
  if (j.contains("value")) v.value = get_vec3(j["value"], p + ".value");
  if (j.contains("speed")) v.speed = get_number(j["speed"], p + ".speed");
  if (j.contains("max_abs")) v.max_abs = get_number(j["max_abs"], p + ".max_abs");
  if (j.contains("seed")) v.seed = get_unsigned(j["seed"], p + ".seed");
  if (j.contains("path")) v.path = get_string(j["path"], p + ".path");
  static const std::set<std::string> presets{"zero", "constant", "swirl", "shear", "channel", "random", "file"};
  if (!presets.count(v.preset)) throw ConfigError(p + ".preset: unknown preset '" + v.preset + "'");
  if (v.preset == "file" && v.path.empty()) throw ConfigError(p + ".path: required for the file preset");
}

inline void parse_initial(const json& j, InitialSpec& in) {
  const std::string p = "initial";
  reject_unknown(j, p, {"type", "sigma", "center", "background", "site", "lo", "hi"});
  if (j.contains("type")) in.type = get_string(j["type"], p + ".type");
  if (j.contains("sigma")) {
    in.sigma = get_number(j["sigma"], p + ".sigma");
    if (!(in.sigma > 0.0)) throw ConfigError(p + ".sigma: must be positive");
  }
  if (j.contains("center")) in.center = get_vec3(j["center"], p + ".center");
  if (j.contains("background")) in.background = get_number(j["background"], p + ".background");
  if (j.contains("site")) in.site = get_coord(j["site"], p + ".site");
  if (j.contains("lo")) in.lo = get_coord(j["lo"], p + ".lo");
  if (j.contains("hi")) in.hi = get_coord(j["hi"], p + ".hi");
  static const std::set<std::string> types{"gaussian", "delta", "uniform", "box_surface"};
  if (!types.count(in.type)) throw ConfigError(p + ".type: unknown initial condition '" + in.type + "'");
  if (in.type == "box_surface" && !(j.contains("lo") && j.contains("hi")))
    throw ConfigError(p + ": box_surface needs lo and hi");
  if (in.background < 0.0) throw ConfigError(p + ".background: must be non-negative");
}

inline void parse_walls(const json& j, WallsSpec& w) {
  const std::string p = "walls";
  reject_unknown(j, p, {"slabs", "boxes", "sites"});
  if (j.contains("slabs")) {
    if (!j["slabs"].is_array()) throw ConfigError(p + ".slabs: expected an array");
    for (std::size_t i = 0; i < j["slabs"].size(); ++i) {
      const std::string q = p + ".slabs[" + std::to_string(i) + "]";
      const json& s = j["slabs"][i];
      reject_unknown(s, q, {"axis", "position"});
      if (!s.contains("axis") || !s.contains("position")) throw ConfigError(q + ": needs axis and position");
      w.slabs.push_back({static_cast<int>(get_integer(s["axis"], q + ".axis")),
                         static_cast<int>(get_integer(s["position"], q + ".position"))});
    }
  }
  if (j.contains("boxes")) {
    if (!j["boxes"].is_array()) throw ConfigError(p + ".boxes: expected an array");
    for (std::size_t i = 0; i < j["boxes"].size(); ++i) {
      const std::string q = p + ".boxes[" + std::to_string(i) + "]";
      const json& b = j["boxes"][i];
      reject_unknown(b, q, {"lo", "hi"});
      if (!b.contains("lo") || !b.contains("hi")) throw ConfigError(q + ": needs lo and hi");
      w.boxes.push_back({get_coord(b["lo"], q + ".lo"), get_coord(b["hi"], q + ".hi")});
    }
  }
  if (j.contains("sites")) {
    if (!j["sites"].is_array()) throw ConfigError(p + ".sites: expected an array");
    for (std::size_t i = 0; i < j["sites"].size(); ++i)
      w.sites.push_back(get_coord(j["sites"][i], p + ".sites[" + std::to_string(i) + "]"));
  }
}

inline void parse_fit(const json& j, FitConfig& f) {
  const std::string p = "fit";
  reject_unknown(j, p, {"learning_rate", "decay", "epochs", "divergence_patience", "init_noise", "real_parameters"});
  if (j.contains("learning_rate")) f.learning_rate = get_number(j["learning_rate"], p + ".learning_rate");
  if (j.contains("decay")) f.decay = get_number(j["decay"], p + ".decay");
  if (j.contains("epochs")) f.epochs = static_cast<int>(get_integer(j["epochs"], p + ".epochs"));
  if (j.contains("divergence_patience"))
    f.divergence_patience = static_cast<int>(get_integer(j["divergence_patience"], p + ".divergence_patience"));
  if (j.contains("init_noise")) f.init_noise = get_number(j["init_noise"], p + ".init_noise");
  if (j.contains("real_parameters")) {
    if (!j["real_parameters"].is_boolean()) throw ConfigError(p + ".real_parameters: expected a boolean");
    f.real_parameters = j["real_parameters"].get<bool>();
  }
  if (!(f.learning_rate > 0.0)) throw ConfigError(p + ".learning_rate: must be positive");
  if (!(f.decay > 0.0 && f.decay <= 1.0)) throw ConfigError(p + ".decay: must lie in (0, 1]");
  if (f.epochs < 0) throw ConfigError(p + ".epochs: must be non-negative");
  if (f.divergence_patience < 1) throw ConfigError(p + ".divergence_patience: must be at least 1");
}

inline void check_coord(const Coord& c, const Scenario& s, int dim, const std::string& path) {
  for (int a = 0; a < 3; ++a) {
    if (a >= dim && c[a] != 0) throw ConfigError(path + ": coordinate " + std::to_string(a) + " beyond model dimension");
    if (c[a] < 0 || c[a] >= static_cast<int>(s.L)) throw ConfigError(path + ": coordinate outside [0, L)");
  }
}

/// Checks that need the model and grid size.
inline void validate_scenario(const Scenario& s) {
  LatticeModel model;
  try {
    model = build_model(s.model);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (!is_power_of_two(s.L) || s.L < 2) throw ConfigError("L: must be a power of two >= 2, got " + std::to_string(s.L));
  const std::size_t qubits = model.dim * static_cast<std::size_t>(log2_exact(s.L)) + static_cast<std::size_t>(model.q);
  if (qubits > static_cast<std::size_t>(kMaxQubits))
    throw ConfigError("L: " + std::to_string(qubits) + " qubits exceeds the simulator limit of " + std::to_string(kMaxQubits));
  if (s.steps < 0) throw ConfigError("steps: must be non-negative");
  if (s.readout_period < 1) throw ConfigError("readout_period: must be at least 1");
  if (s.readout != ReadoutMethod::None && s.shots < 1) throw ConfigError("shots: must be at least 1");
  if (s.settings < 1) throw ConfigError("settings: must be at least 1");
  if (is_shadow_method(s.readout) && s.shots < static_cast<std::uint64_t>(s.settings))
    throw ConfigError("shots: fewer shots than measurement settings");
  if (s.chi < 1) throw ConfigError("chi: must be at least 1");
  if (!(s.bandwidth > 0.0)) throw ConfigError("bandwidth: must be positive");
  if (!(s.noise_p >= 0.0 && s.noise_p <= 1.0)) throw ConfigError("noise_p: must lie in [0, 1]");
  if (!(s.gates.prune_threshold >= 0.0)) throw ConfigError("prune_threshold: must be non-negative");
  if (s.initial.type == "delta") check_coord(s.initial.site, s, model.dim, "initial.site");
  if (s.initial.type == "box_surface") {
    check_coord(s.initial.lo, s, model.dim, "initial.lo");
    check_coord(s.initial.hi, s, model.dim, "initial.hi");
  }
  for (std::size_t i = 0; i < s.walls.slabs.size(); ++i) {
    const auto& sl = s.walls.slabs[i];
    const std::string p = "walls.slabs[" + std::to_string(i) + "]";
    if (sl.axis < 0 || sl.axis >= model.dim) throw ConfigError(p + ".axis: must be below the model dimension");
    if (sl.position < 0 || sl.position >= static_cast<int>(s.L)) throw ConfigError(p + ".position: outside [0, L)");
  }
  for (std::size_t i = 0; i < s.walls.boxes.size(); ++i) {
    const std::string p = "walls.boxes[" + std::to_string(i) + "]";
    check_coord(s.walls.boxes[i].lo, s, model.dim, p + ".lo");
    check_coord(s.walls.boxes[i].hi, s, model.dim, p + ".hi");
  }
  for (std::size_t i = 0; i < s.walls.sites.size(); ++i)
    check_coord(s.walls.sites[i], s, model.dim, "walls.sites[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < s.cross_sections.size(); ++i) {
    const auto& c = s.cross_sections[i];
    const std::string p = "cross_sections[" + std::to_string(i) + "]";
    if (c.axis < 0 || c.axis >= model.dim) throw ConfigError(p + ".axis: must be below the model dimension");
    if (c.position < 0 || c.position >= static_cast<int>(s.L)) throw ConfigError(p + ".position: outside [0, L)");
  }
  if (s.velocity.preset == "channel" && s.walls.empty()) throw ConfigError("velocity.preset: channel flow needs walls");
}

}  // namespace detail

inline Scenario parse_scenario_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using detail::get_integer;
  using detail::get_number;
  using detail::get_string;
  using detail::get_unsigned;
  detail::reject_unknown(j, "",
                         {"model", "L", "steps", "velocity", "initial", "walls", "readout", "readout_period", "shots",
                          "settings", "chi", "bandwidth", "noise_p", "seed", "output", "route", "qpixl",
                          "prune_threshold", "fit", "cross_sections", "write_fields"});
  for (const char* req : {"model", "L", "steps"})
    if (!j.contains(req)) throw ConfigError(std::string(req) + ": required key missing");
  Scenario s;
  s.base_dir = base_dir;
  s.model = get_string(j["model"], "model");
  {
    const long long L = get_integer(j["L"], "L");
    if (L < 2 || !is_power_of_two(static_cast<std::size_t>(L)))
      throw ConfigError("L: must be a power of two >= 2, got " + std::to_string(L));
    s.L = static_cast<std::size_t>(L);
  }
  s.steps = static_cast<int>(get_integer(j["steps"], "steps"));
  if (j.contains("velocity")) detail::parse_velocity(j["velocity"], s.velocity);
  if (j.contains("initial")) detail::parse_initial(j["initial"], s.initial);
  if (j.contains("walls")) detail::parse_walls(j["walls"], s.walls);
  if (j.contains("readout")) {
    try {
      s.readout = parse_readout_method(get_string(j["readout"], "readout"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("readout: ") + e.what());
    }
  }
  if (j.contains("readout_period")) s.readout_period = static_cast<int>(get_integer(j["readout_period"], "readout_period"));
  if (j.contains("shots")) s.shots = get_unsigned(j["shots"], "shots");
  if (j.contains("settings")) s.settings = static_cast<int>(get_integer(j["settings"], "settings"));
  if (j.contains("chi")) s.chi = static_cast<int>(get_integer(j["chi"], "chi"));
  if (j.contains("bandwidth")) s.bandwidth = get_number(j["bandwidth"], "bandwidth");
  if (j.contains("noise_p")) s.noise_p = get_number(j["noise_p"], "noise_p");
  if (j.contains("seed")) s.seed = get_unsigned(j["seed"], "seed");
  if (j.contains("output")) s.output = get_string(j["output"], "output");
  if (j.contains("route")) {
    try {
      s.route = parse_route(get_string(j["route"], "route"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("route: ") + e.what());
    }
  }
  if (j.contains("qpixl")) {
    if (!j["qpixl"].is_boolean()) throw ConfigError("qpixl: expected a boolean");
    s.gates.qpixl = j["qpixl"].get<bool>();
  }
  if (j.contains("prune_threshold")) s.gates.prune_threshold = get_number(j["prune_threshold"], "prune_threshold");
  if (j.contains("fit")) detail::parse_fit(j["fit"], s.fit);
  if (j.contains("cross_sections")) {
    if (!j["cross_sections"].is_array()) throw ConfigError("cross_sections: expected an array");
    for (std::size_t i = 0; i < j["cross_sections"].size(); ++i) {
      const std::string q = "cross_sections[" + std::to_string(i) + "]";
      const auto& c = j["cross_sections"][i];
      detail::reject_unknown(c, q, {"axis", "position"});
      if (!c.contains("axis") || !c.contains("position")) throw ConfigError(q + ": needs axis and position");
      s.cross_sections.push_back({static_cast<int>(get_integer(c["axis"], q + ".axis")),
                                  static_cast<int>(get_integer(c["position"], q + ".position"))});
    }
  }
  if (j.contains("write_fields")) {
    if (!j["write_fields"].is_boolean()) throw ConfigError("write_fields: expected a boolean");
    s.write_fields = j["write_fields"].get<bool>();
  }
  s.fit.seed = s.seed;
  detail::validate_scenario(s);
  return s;
}

inline Scenario parse_scenario_text(const std::string& text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  return parse_scenario_json(j, base_dir);
}

inline Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario_text(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Scenario -> domain objects

inline GridSpec scenario_grid(const Scenario& s) { return make_grid(build_model(s.model).dim, s.L); }

inline std::optional<WallMask> scenario_walls(const Scenario& s) {
  if (s.walls.empty()) return std::nullopt;
  WallMask m(scenario_grid(s));
  for (const auto& sl : s.walls.slabs) add_slab(m, sl.axis, sl.position);
  for (const auto& b : s.walls.boxes) add_box(m, b.lo, b.hi);
  for (const auto& c : s.walls.sites) m.set(m.grid.index(c));
  return m;
}

inline VelocityField read_velocity_csv(const std::filesystem::path& path, const GridSpec& g) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open velocity file");
  VelocityField u(g);
  std::vector<char> seen(g.sites(), 0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int x, y, z;
    double ux, uy, uz;
    if (!(ls >> x >> y >> z >> ux >> uy >> uz))
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected x,y,z,ux,uy,uz");
    const int L = static_cast<int>(g.side());
    if (x < 0 || y < 0 || z < 0 || x >= L || y >= L || (g.dim == 3 ? z >= L : z != 0))
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": site outside the grid");
    const std::size_t r = g.index({x, y, z});
    u.comp[0][r] = ux;
    u.comp[1][r] = uy;
    u.comp[2][r] = uz;
    seen[r] = 1;
  }
  for (std::size_t r = 0; r < seen.size(); ++r)
    if (!seen[r]) throw ConfigError(path.string() + ": site " + std::to_string(r) + " missing");
  return u;
}

inline VelocityField scenario_velocity(const Scenario& s, const std::optional<WallMask>& walls) {
  const GridSpec g = scenario_grid(s);
  const auto& v = s.velocity;
  if (v.preset == "zero") return zero_velocity(g);
  if (v.preset == "constant") return constant_velocity(g, v.value);
  if (v.preset == "swirl") return swirl_velocity(g, v.amplitude < 0.0 ? 0.2 : v.amplitude);
  if (v.preset == "shear") return shear_velocity(g, v.amplitude < 0.0 ? 1.0 / 3.0 : v.amplitude);
  if (v.preset == "channel") {
    if (!walls) throw ConfigError("velocity.preset: channel flow needs walls");
    return channel_velocity(*walls, v.speed);
  }
  if (v.preset == "random") return random_divergence_free(g, v.max_abs, v.seed);
  if (v.preset == "file") {
    std::filesystem::path p(v.path);
    if (p.is_relative() && !s.base_dir.empty()) p = s.base_dir / p;
    return read_velocity_csv(p, g);
  }
  throw ConfigError("velocity.preset: unknown preset '" + v.preset + "'");
}

/// Fluid sites that share a face with the box [lo, hi], normalized to unit L2 norm.
inline ScalarField box_surface_field(const GridSpec& g, const Coord& lo, const Coord& hi) {
  ScalarField f(g);
  const int L = static_cast<int>(g.side());
  auto inside = [&](const Coord& c) {
    for (int a = 0; a < g.dim; ++a)
      if (c[a] < lo[a] || c[a] > hi[a]) return false;
    return true;
  };
  for (std::size_t r = 0; r < g.sites(); ++r) {
    const Coord c = g.coords(r);
    if (inside(c)) continue;
    for (int a = 0; a < g.dim; ++a)
      for (int d : {-1, 1}) {
        Coord n = c;
        n[a] = ((n[a] + d) % L + L) % L;
        if (inside(n)) f[r] = 1.0;
      }
  }
  const double nrm = f.norm();
  if (nrm == 0.0) throw ConfigError("initial: box surface is empty");
  for (double& x : f.values) x /= nrm;
  return f;
}

inline ScalarField scenario_initial(const Scenario& s, const std::optional<WallMask>& walls) {
  const GridSpec g = scenario_grid(s);
  const auto& in = s.initial;
  ScalarField f;
  if (in.type == "gaussian") {
    const double sigma = in.sigma < 0.0 ? static_cast<double>(s.L) / 8.0 : in.sigma;
    f = gaussian_field(g, sigma, in.center, in.background);
  } else if (in.type == "delta") {
    f = delta_field(g, g.index(in.site));
  } else if (in.type == "uniform") {
    f = uniform_field(g);
  } else if (in.type == "box_surface") {
    f = box_surface_field(g, in.lo, in.hi);
  } else {
    throw ConfigError("initial.type: unknown initial condition '" + in.type + "'");
  }
  if (walls) {
    zero_walls(f, *walls);
    const double nrm = f.norm();
    if (nrm == 0.0) throw ConfigError("initial: density vanishes outside the walls");
    for (double& x : f.values) x /= nrm;
  }
  return f;
}

}  // namespace qlbm
