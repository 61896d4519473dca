#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "lcfgrad/errors.hpp"
#include "lcfgrad/material.hpp"

namespace lcfgrad {

struct NumericsConfig {
  int volume_order = 2;  // the reduced 8-point rule for hex
  int face_order = 6;    // 36-point surface rule
  double solver_tol = 1e-10;
  int threads = 1;
};

struct MooConfig {
  int max_iters = 30;
  double theta_tol = 1e-8;      // converged when theta >= -theta_tol * initial |d|^2
  double t0_factor = 0.1;       // t0 = t0_factor * diameter / |d|
  double beta = 0.5;            // backtracking factor
  double c1 = 1e-4;             // Armijo constant
  double t_min_factor = 1e-12;  // stagnation threshold, times diameter
  int smoothing_sweeps = 5;     // interior Jacobi relaxations per step
  bool relative_scaling = true; // normalize gradients by start-shape values
  bool snapshots = false;       // write per-iterate meshes
};

struct RunSetup {
  MaterialModel material;
  LoadCase load;
  NumericsConfig numerics;
  MooConfig moo;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline std::vector<double> parse_numbers(const std::string& s, int line_no) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (...) {
      throw ParseError("config line " + std::to_string(line_no) + ": bad number '" + item + "'");
    }
  }
  return out;
}

inline Traction parse_traction(const std::string& rhs_first, std::stringstream& rest,
                               int line_no) {
  // face = elem,faceid; g = gx,gy,gz; mode = follower|fixed
  Traction t;
  auto ids = parse_numbers(rhs_first, line_no);
  if (ids.size() != 2)
    throw ParseError("config line " + std::to_string(line_no) + ": face wants 'elem,faceid'");
  t.face = {static_cast<int>(ids[0]) - 1, static_cast<int>(ids[1]) - 1};
  std::string part;
  bool have_g = false;
  while (std::getline(rest, part, ';')) {
    auto eq = part.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(part.substr(0, eq));
    const std::string value = trim(part.substr(eq + 1));
    if (key == "g") {
      auto gv = parse_numbers(value, line_no);
      if (gv.size() < 2 || gv.size() > 3)
        throw ParseError("config line " + std::to_string(line_no) + ": g wants 2 or 3 numbers");
      t.g.setZero();
      for (std::size_t d = 0; d < gv.size(); ++d) t.g(static_cast<int>(d)) = gv[d];
      have_g = true;
    } else if (key == "mode") {
      if (value == "follower")
        t.mode = TractionMode::follower_density;
      else if (value == "fixed")
        t.mode = TractionMode::fixed_total_force;
      else
        throw ParseError("config line " + std::to_string(line_no) + ": mode must be follower|fixed");
    } else {
      throw ParseError("config line " + std::to_string(line_no) + ": unknown traction key '" +
                       key + "'");
    }
  }
  if (!have_g)
    throw ParseError("config line " + std::to_string(line_no) + ": traction is missing g");
  return t;
}

}  // namespace detail

inline RunSetup parse_config(std::istream& in) {
  RunSetup setup;
  std::string section;
  std::string line;
  int line_no = 0;
  bool saw_material = false;

  auto bad = [&](const std::string& msg) -> ParseError {
    return ParseError("config line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw bad("unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section == "material") saw_material = true;
      continue;
    }
    // Split on the first ';' group for traction lines, else plain key=value.
    std::stringstream ss(line);
    std::string first;
    std::getline(ss, first, ';');
    auto eq = first.find('=');
    if (eq == std::string::npos) throw bad("expected 'key = value'");
    const std::string key = detail::trim(first.substr(0, eq));
    const std::string value = detail::trim(first.substr(eq + 1));

    if (section == "material") {
      auto& m = setup.material;
      static const std::map<std::string, double MaterialModel::*> fields = {
          {"E", &MaterialModel::E},           {"nu", &MaterialModel::nu},
          {"K", &MaterialModel::K},           {"n_prime", &MaterialModel::n_prime},
          {"sigma_f", &MaterialModel::sigma_f}, {"b", &MaterialModel::b},
          {"eps_f", &MaterialModel::eps_f},   {"c", &MaterialModel::c},
          {"m", &MaterialModel::m},           {"rho", &MaterialModel::rho},
          {"amplitude_factor", &MaterialModel::amplitude_factor}};
      auto it = fields.find(key);
      if (it == fields.end()) throw bad("unknown material key '" + key + "'");
      m.*(it->second) = detail::parse_numbers(value, line_no).at(0);
    } else if (section == "load") {
      if (key == "face") {
        setup.load.tractions.push_back(detail::parse_traction(value, ss, line_no));
      } else if (key == "omega") {
        setup.load.omega = detail::parse_numbers(value, line_no).at(0);
      } else if (key == "axis") {
        auto a = detail::parse_numbers(value, line_no);
        if (a.size() != 3) throw bad("axis wants 3 numbers");
        setup.load.rotation_axis = Eigen::Vector3d(a[0], a[1], a[2]);
      } else if (key == "cycles_n") {
        setup.load.cycles_n = detail::parse_numbers(value, line_no).at(0);
      } else {
        throw bad("unknown load key '" + key + "'");
      }
    } else if (section == "numerics") {
      if (key == "volume_order")
        setup.numerics.volume_order = static_cast<int>(detail::parse_numbers(value, line_no).at(0));
      else if (key == "face_order" || key == "face_quadrature_order")
        setup.numerics.face_order = static_cast<int>(detail::parse_numbers(value, line_no).at(0));
      else if (key == "solver_tol")
        setup.numerics.solver_tol = detail::parse_numbers(value, line_no).at(0);
      else if (key == "threads")
        setup.numerics.threads = static_cast<int>(detail::parse_numbers(value, line_no).at(0));
      else if (key == "amplitude_factor")  // accepted here as well
        setup.material.amplitude_factor = detail::parse_numbers(value, line_no).at(0);
      else
        throw bad("unknown numerics key '" + key + "'");
    } else if (section == "moo") {
      auto& mo = setup.moo;
      if (key == "max_iters")
        mo.max_iters = static_cast<int>(detail::parse_numbers(value, line_no).at(0));
      else if (key == "theta_tol")
        mo.theta_tol = detail::parse_numbers(value, line_no).at(0);
      else if (key == "t0_factor")
        mo.t0_factor = detail::parse_numbers(value, line_no).at(0);
      else if (key == "beta")
        mo.beta = detail::parse_numbers(value, line_no).at(0);
      else if (key == "c1")
        mo.c1 = detail::parse_numbers(value, line_no).at(0);
      else if (key == "t_min_factor")
        mo.t_min_factor = detail::parse_numbers(value, line_no).at(0);
      else if (key == "smoothing_sweeps")
        mo.smoothing_sweeps = static_cast<int>(detail::parse_numbers(value, line_no).at(0));
      else if (key == "scaling")
        mo.relative_scaling = (value == "relative");
      else if (key == "snapshots")
        mo.snapshots = detail::parse_numbers(value, line_no).at(0) != 0;
      else
        throw bad("unknown moo key '" + key + "'");
    } else {
      throw bad(section.empty() ? "key before any [section]" : "unknown section '" + section + "'");
    }
  }
  if (!saw_material) throw ParseError("config: missing [material] section");
  setup.material.validate();
  return setup;
}

inline RunSetup parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunSetup read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace lcfgrad
