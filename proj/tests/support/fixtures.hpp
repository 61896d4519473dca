#pragma once

// Test fixtures: structured mesh generators with labeled boundary face
// groups, plus a reference material. Only used by the test suites.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lcfgrad/lcfgrad.hpp"

namespace fixtures {

using lcfgrad::ElementKind;
using lcfgrad::FaceRef;
using lcfgrad::MaterialModel;
using lcfgrad::Mesh;
using lcfgrad::Model;

inline MaterialModel test_material() {
  MaterialModel m;
  m.E = 200000.0;  // MPa
  m.nu = 0.3;
  m.K = 1200.0;
  m.n_prime = 0.12;
  m.sigma_f = 1800.0;
  m.b = -0.09;
  m.eps_f = 0.45;
  m.c = -0.6;
  m.m = 3.0;
  m.rho = 7.85e-9;  // tonne/mm^3 with MPa/mm/s units
  return m;
}

struct GeneratedMesh {
  Mesh mesh;
  std::map<std::string, std::vector<FaceRef>> face_groups;
};

// ---------------------------------------------------------------------------
// Structured lattice helpers. Element grid axes map to the reference axes
// one-to-one; serendipity kinds use the doubled lattice with mid-edge
// points (at most one odd lattice coordinate).
// ---------------------------------------------------------------------------

namespace detail {

inline bool keep_lattice_point(int gx, int gy, int gz) {
  return (gx % 2) + (gy % 2) + (gz % 2) <= 1;
}

// local node -> lattice offsets (0..2) relative to an element's corner
inline std::vector<std::array<int, 3>> local_offsets(ElementKind kind) {
  std::vector<std::array<int, 3>> out;
  for (const auto& r : lcfgrad::reference_nodes(kind)) {
    out.push_back({static_cast<int>(r[0]) + 1, static_cast<int>(r[1]) + 1,
                   static_cast<int>(r[2]) + 1});
  }
  if (lcfgrad::element_dim(kind) == 2)
    for (auto& o : out) o[2] = 0;
  return out;
}

}  // namespace detail

struct GridSpec {
  ElementKind kind = ElementKind::hex8;
  int nx = 1, ny = 1, nz = 1;
  // maps normalized lattice coordinates in [0,1]^dim to physical space
  std::function<Eigen::Vector3d(double, double, double)> geometry;
  // lattice wrap in y (full wheels): y index taken modulo the lattice extent
  bool periodic_y = false;
};

// Builds a structured mesh with labeled boundary groups
// xmin/xmax/ymin/ymax[/zmin/zmax]. Surface faces and constraints are not
// set; callers pick them from the groups.
inline GeneratedMesh make_grid(const GridSpec& spec) {
  const int dim = lcfgrad::element_dim(spec.kind);
  const bool mids = (spec.kind == ElementKind::quad8 || spec.kind == ElementKind::hex20);
  const int step = mids ? 1 : 2;
  const int gx_max = 2 * spec.nx, gy_max = 2 * spec.ny, gz_max = dim == 3 ? 2 * spec.nz : 0;
  const int gy_count = spec.periodic_y ? gy_max : gy_max + 1;

  std::map<std::array<int, 3>, int> index;
  std::vector<Eigen::Vector3d> points;
  auto node_at = [&](int gx, int gy, int gz) {
    if (spec.periodic_y) gy = ((gy % gy_count) + gy_count) % gy_count;
    const std::array<int, 3> key{gx, gy, gz};
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(points.size());
    index.emplace(key, id);
    points.push_back(spec.geometry(gx / double(gx_max), gy / double(gy_max),
                                   dim == 3 ? gz / double(gz_max) : 0.0));
    return id;
  };

  // enumerate nodes in lattice order for reproducible ids
  for (int gz = 0; gz <= gz_max; gz += mids ? 1 : 2)
    for (int gy = 0; gy < (spec.periodic_y ? gy_count : gy_max + 1); gy += 1)
      for (int gx = 0; gx <= gx_max; gx += 1) {
        if (!mids && (gx % 2 || gy % 2 || gz % 2)) continue;
        if (mids && !detail::keep_lattice_point(gx, gy, gz)) continue;
        node_at(gx, gy, gz);
        (void)step;
      }

  const auto offsets = detail::local_offsets(spec.kind);
  const int q = lcfgrad::element_nodes(spec.kind);
  const int n_elems = spec.nx * spec.ny * (dim == 3 ? spec.nz : 1);
  Eigen::MatrixXi elements(n_elems, q);
  GeneratedMesh out;
  auto add_face = [&](const std::string& name, int elem, int face) {
    out.face_groups[name].push_back({elem, face});
  };

  int e = 0;
  const int nz_eff = dim == 3 ? spec.nz : 1;
  for (int k = 0; k < nz_eff; ++k)
    for (int j = 0; j < spec.ny; ++j)
      for (int i = 0; i < spec.nx; ++i, ++e) {
        for (int l = 0; l < q; ++l)
          elements(e, l) =
              node_at(2 * i + offsets[l][0], 2 * j + offsets[l][1], 2 * k + offsets[l][2]);
        if (dim == 3) {
          if (k == 0) add_face("zmin", e, 0);
          if (k == spec.nz - 1) add_face("zmax", e, 1);
          if (j == 0 && !spec.periodic_y) add_face("ymin", e, 2);
          if (i == spec.nx - 1) add_face("xmax", e, 3);
          if (j == spec.ny - 1 && !spec.periodic_y) add_face("ymax", e, 4);
          if (i == 0) add_face("xmin", e, 5);
        } else {
          if (j == 0) add_face("ymin", e, 0);
          if (i == spec.nx - 1) add_face("xmax", e, 1);
          if (j == spec.ny - 1) add_face("ymax", e, 2);
          if (i == 0) add_face("xmin", e, 3);
        }
      }

  Mesh& mesh = out.mesh;
  mesh.dim = dim;
  mesh.kind = spec.kind;
  mesh.nodes.resize(static_cast<int>(points.size()), dim);
  for (std::size_t n = 0; n < points.size(); ++n)
    for (int d = 0; d < dim; ++d) mesh.nodes(static_cast<int>(n), d) = points[n](d);
  mesh.elements = elements;
  return out;
}

// Collect the unique node ids of a face group.
inline std::vector<int> group_nodes(const GeneratedMesh& gm, const std::string& name) {
  std::set<int> ids;
  for (const auto& f : gm.face_groups.at(name))
    for (int n : gm.mesh.nodes_of_face(f)) ids.insert(n);
  return {ids.begin(), ids.end()};
}

inline void clamp_group(GeneratedMesh& gm, const std::string& name) {
  for (int n : group_nodes(gm, name))
    for (int d = 0; d < gm.mesh.dim; ++d) gm.mesh.dirichlet.emplace_back(n, d);
}

inline void add_surface_groups(GeneratedMesh& gm, const std::vector<std::string>& names) {
  for (const auto& name : names)
    for (const auto& f : gm.face_groups.at(name)) gm.mesh.surface_faces.push_back(f);
}

// ---------------------------------------------------------------------------
// Concrete fixtures
// ---------------------------------------------------------------------------

inline GeneratedMesh unit_cube(ElementKind kind = ElementKind::hex8) {
  GridSpec spec;
  spec.kind = kind;
  spec.geometry = [](double x, double y, double z) { return Eigen::Vector3d(x, y, z); };
  return make_grid(spec);
}

// Rectangular bar [0,L]x[0,W]x[0,H].
inline GeneratedMesh bar(ElementKind kind, int nx, int ny, int nz, double L, double W, double H) {
  GridSpec spec;
  spec.kind = kind;
  spec.nx = nx;
  spec.ny = ny;
  spec.nz = nz;
  spec.geometry = [=](double x, double y, double z) {
    return Eigen::Vector3d(L * x, W * y, H * z);
  };
  return make_grid(spec);
}

// Bent rod: bar with a vertical arch bump A sin(pi x / L); clamped at the
// rear face, loaded on the front face by the callers. The highest stress
// concentration sits at the bottom of the bend.
inline GeneratedMesh bent_rod_3d(ElementKind kind, int nx, int ny, int nz, double L = 10.0,
                                 double W = 1.0, double H = 1.0, double bend = 1.0) {
  GridSpec spec;
  spec.kind = kind;
  spec.nx = nx;
  spec.ny = ny;
  spec.nz = nz;
  spec.geometry = [=](double x, double y, double z) {
    return Eigen::Vector3d(L * x, W * y + bend * std::sin(M_PI * x), H * z);
  };
  GeneratedMesh gm = make_grid(spec);
  add_surface_groups(gm, {"ymin", "ymax", "zmin", "zmax", "xmax"});
  clamp_group(gm, "xmin");
  lcfgrad::validate_mesh(gm.mesh);
  return gm;
}

inline GeneratedMesh bent_rod_2d(ElementKind kind, int nx, int ny, double L = 10.0,
                                 double W = 1.0, double bend = 1.0) {
  GridSpec spec;
  spec.kind = kind;
  spec.nx = nx;
  spec.ny = ny;
  spec.geometry = [=](double x, double y, double) {
    return Eigen::Vector3d(L * x, W * y + bend * std::sin(M_PI * x), 0.0);
  };
  GeneratedMesh gm = make_grid(spec);
  add_surface_groups(gm, {"ymin", "ymax", "xmax"});
  clamp_group(gm, "xmin");
  lcfgrad::validate_mesh(gm.mesh);
  return gm;
}

// Annular ring sector (or full wheel with periodic_y) around the z axis:
// grid x -> radius, y -> angle, z -> height.
struct RingSpec {
  ElementKind kind = ElementKind::hex8;
  int nr = 2, nt = 6, nz = 2;  // nt = angular elements per sector
  double r0 = 1.0, r1 = 2.0, z0 = 0.0, z1 = 0.3;
  int sectors = 4;
  bool full = false;  // full wheel instead of one cyclic sector
};

inline GeneratedMesh make_ring(const RingSpec& rs) {
  GridSpec spec;
  spec.kind = rs.kind;
  spec.nx = rs.nr;
  spec.ny = rs.full ? rs.nt * rs.sectors : rs.nt;
  spec.nz = rs.nz;
  spec.periodic_y = rs.full;
  const double sector_angle = 2.0 * M_PI / rs.sectors;
  const double sweep = rs.full ? 2.0 * M_PI : sector_angle;
  spec.geometry = [=](double x, double y, double z) {
    const double r = rs.r0 + (rs.r1 - rs.r0) * x;
    const double th = sweep * y;
    return Eigen::Vector3d(r * std::cos(th), r * std::sin(th), rs.z0 + (rs.z1 - rs.z0) * z);
  };
  GeneratedMesh gm = make_grid(spec);
  add_surface_groups(gm, {"xmax", "zmin", "zmax"});  // rim, bottom, top
  clamp_group(gm, "xmin");                           // bore

  if (!rs.full) {
    lcfgrad::CyclicSpec cyc;
    cyc.sector_count = rs.sectors;
    cyc.axis = Eigen::Vector3d::UnitZ();
    // pair nodes on the ymin flank (masters) with ymax (slaves): the
    // lattice construction makes slave = R(sector angle) * master exactly
    // in exact arithmetic, and the generator uses the same trig for both.
    auto masters = group_nodes(gm, "ymin");
    auto slaves = group_nodes(gm, "ymax");
    // match by (radius, z): sort both by those keys
    auto key = [&](int n) {
      const auto& X = gm.mesh.nodes;
      return std::make_pair(std::round(1e9 * std::hypot(X(n, 0), X(n, 1))),
                            std::round(1e9 * X(n, 2)));
    };
    std::sort(masters.begin(), masters.end(), [&](int a, int b) { return key(a) < key(b); });
    std::sort(slaves.begin(), slaves.end(), [&](int a, int b) { return key(a) < key(b); });
    cyc.master_nodes = masters;
    cyc.slave_nodes = slaves;
    cyc.flank_faces = gm.face_groups.at("ymin");
    for (const auto& f : gm.face_groups.at("ymax")) cyc.flank_faces.push_back(f);
    gm.mesh.cyclic = std::move(cyc);
  }
  lcfgrad::validate_mesh(gm.mesh);
  return gm;
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

inline lcfgrad::LoadCase pull_load(const GeneratedMesh& gm, const Eigen::Vector3d& g,
                                   lcfgrad::TractionMode mode, const std::string& group = "xmax",
                                   double cycles_n = 1e4) {
  lcfgrad::LoadCase load;
  for (const auto& f : gm.face_groups.at(group)) {
    lcfgrad::Traction t;
    t.face = f;
    t.g = g;
    t.mode = mode;
    load.tractions.push_back(t);
  }
  load.cycles_n = cycles_n;
  return load;
}

inline Model make_test_model(const GeneratedMesh& gm, const lcfgrad::LoadCase& load,
                             int volume_order = 2, int face_order = 4) {
  Model m;
  m.mesh = gm.mesh;
  m.material = test_material();
  m.load = load;
  m.numerics.volume_order = volume_order;
  m.numerics.face_order = face_order;
  m.load.bind_reference(m.mesh, m.numerics.face_order);
  return m;
}

// Pulled bent rod, the standard validation case.
inline Model rod_model_3d(ElementKind kind = ElementKind::hex8, int nx = 10, int ny = 2,
                          int nz = 2, double traction = 400.0,
                          lcfgrad::TractionMode mode = lcfgrad::TractionMode::follower_density,
                          int face_order = 4) {
  GeneratedMesh gm = bent_rod_3d(kind, nx, ny, nz);
  return make_test_model(gm, pull_load(gm, {traction, 0, 0}, mode), 2, face_order);
}

inline Model rod_model_2d(int nx = 16, int ny = 3, double traction = 400.0, double bend = 1.0,
                          double thickness = 1.0) {
  GeneratedMesh gm = bent_rod_2d(ElementKind::quad4, nx, ny, 10.0, thickness, bend);
  return make_test_model(gm, pull_load(gm, {traction, 0, 0},
                                       lcfgrad::TractionMode::follower_density));
}

// Spinning ring (sector or full wheel), clamped at the bore.
inline Model ring_model(const RingSpec& rs, double omega = 800.0) {
  GeneratedMesh gm = make_ring(rs);
  lcfgrad::LoadCase load;
  load.omega = omega;
  load.rotation_axis = Eigen::Vector3d::UnitZ();
  load.cycles_n = 1e4;
  return make_test_model(gm, load);
}

inline std::mt19937_64 rng(std::uint64_t seed = 20240517) { return std::mt19937_64(seed); }

}  // namespace fixtures
