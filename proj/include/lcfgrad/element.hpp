#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "lcfgrad/errors.hpp"

namespace lcfgrad {

enum class ElementKind { quad4, quad8, hex8, hex20 };

// Fixed-capacity small types; q <= 20, dim <= 3. No heap traffic in kernels.
using ShapeVals = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 20, 1>;
using ShapeGrads = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

inline int element_dim(ElementKind k) {
  return (k == ElementKind::quad4 || k == ElementKind::quad8) ? 2 : 3;
}

inline int element_nodes(ElementKind k) {
  switch (k) {
    case ElementKind::quad4: return 4;
    case ElementKind::quad8: return 8;
    case ElementKind::hex8: return 8;
    case ElementKind::hex20: return 20;
  }
  return 0;
}

inline int element_faces(ElementKind k) { return element_dim(k) == 2 ? 4 : 6; }

inline std::string element_kind_name(ElementKind k) {
  switch (k) {
    case ElementKind::quad4: return "quad4";
    case ElementKind::quad8: return "quad8";
    case ElementKind::hex8: return "hex8";
    case ElementKind::hex20: return "hex20";
  }
  return "?";
}

inline ElementKind element_kind_from_name(const std::string& name) {
  if (name == "quad4") return ElementKind::quad4;
  if (name == "quad8") return ElementKind::quad8;
  if (name == "hex8") return ElementKind::hex8;
  if (name == "hex20") return ElementKind::hex20;
  throw ParseError("unknown element kind '" + name + "'");
}

// Reference node coordinates. Corner-first ordering; serendipity mid-edge
// nodes follow the convention documented in the repository README
// (bottom-face edges, top-face edges, then vertical edges for hex20).
inline const std::vector<std::array<double, 3>>& reference_nodes(ElementKind k) {
  static const std::vector<std::array<double, 3>> quad4 = {
      {-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}};
  static const std::vector<std::array<double, 3>> quad8 = {
      {-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0},
      {0, -1, 0},  {1, 0, 0},  {0, 1, 0}, {-1, 0, 0}};
  static const std::vector<std::array<double, 3>> hex8 = {
      {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
      {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};
  static const std::vector<std::array<double, 3>> hex20 = {
      {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
      {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1},
      {0, -1, -1},  {1, 0, -1},  {0, 1, -1}, {-1, 0, -1},
      {0, -1, 1},   {1, 0, 1},   {0, 1, 1},  {-1, 0, 1},
      {-1, -1, 0},  {1, -1, 0},  {1, 1, 0},  {-1, 1, 0}};
  switch (k) {
    case ElementKind::quad4: return quad4;
    case ElementKind::quad8: return quad8;
    case ElementKind::hex8: return hex8;
    case ElementKind::hex20: return hex20;
  }
  return hex8;
}

// Shape function values and reference gradients at xi (dim entries).
// values: q, grads: q x dim. Analytic expressions per family.
inline void shape_functions(ElementKind kind, const double* xi, ShapeVals& values,
                            ShapeGrads& grads) {
  const int q = element_nodes(kind);
  const int dim = element_dim(kind);
  values.resize(q);
  grads.resize(q, dim);
  const auto& ref = reference_nodes(kind);
  const double x = xi[0], y = xi[1], z = dim == 3 ? xi[2] : 0.0;

  switch (kind) {
    case ElementKind::quad4:
      for (int i = 0; i < 4; ++i) {
        const double a = ref[i][0], b = ref[i][1];
        values(i) = 0.25 * (1 + x * a) * (1 + y * b);
        grads(i, 0) = 0.25 * a * (1 + y * b);
        grads(i, 1) = 0.25 * (1 + x * a) * b;
      }
      break;
    case ElementKind::quad8:
      for (int i = 0; i < 8; ++i) {
        const double a = ref[i][0], b = ref[i][1];
        if (a != 0.0 && b != 0.0) {  // corner
          values(i) = 0.25 * (1 + x * a) * (1 + y * b) * (x * a + y * b - 1);
          grads(i, 0) = 0.25 * a * (1 + y * b) * (2 * x * a + y * b);
          grads(i, 1) = 0.25 * b * (1 + x * a) * (x * a + 2 * y * b);
        } else if (a == 0.0) {  // mid-edge, xi_i = 0
          values(i) = 0.5 * (1 - x * x) * (1 + y * b);
          grads(i, 0) = -x * (1 + y * b);
          grads(i, 1) = 0.5 * (1 - x * x) * b;
        } else {  // mid-edge, eta_i = 0
          values(i) = 0.5 * (1 + x * a) * (1 - y * y);
          grads(i, 0) = 0.5 * a * (1 - y * y);
          grads(i, 1) = -y * (1 + x * a);
        }
      }
      break;
    case ElementKind::hex8:
      for (int i = 0; i < 8; ++i) {
        const double a = ref[i][0], b = ref[i][1], c = ref[i][2];
        values(i) = 0.125 * (1 + x * a) * (1 + y * b) * (1 + z * c);
        grads(i, 0) = 0.125 * a * (1 + y * b) * (1 + z * c);
        grads(i, 1) = 0.125 * (1 + x * a) * b * (1 + z * c);
        grads(i, 2) = 0.125 * (1 + x * a) * (1 + y * b) * c;
      }
      break;
    case ElementKind::hex20:
      for (int i = 0; i < 20; ++i) {
        const double a = ref[i][0], b = ref[i][1], c = ref[i][2];
        if (i < 8) {  // corner
          const double s = x * a + y * b + z * c - 2;
          values(i) = 0.125 * (1 + x * a) * (1 + y * b) * (1 + z * c) * s;
          grads(i, 0) = 0.125 * a * (1 + y * b) * (1 + z * c) * (2 * x * a + y * b + z * c - 1);
          grads(i, 1) = 0.125 * b * (1 + x * a) * (1 + z * c) * (x * a + 2 * y * b + z * c - 1);
          grads(i, 2) = 0.125 * c * (1 + x * a) * (1 + y * b) * (x * a + y * b + 2 * z * c - 1);
        } else if (a == 0.0) {
          values(i) = 0.25 * (1 - x * x) * (1 + y * b) * (1 + z * c);
          grads(i, 0) = -0.5 * x * (1 + y * b) * (1 + z * c);
          grads(i, 1) = 0.25 * (1 - x * x) * b * (1 + z * c);
          grads(i, 2) = 0.25 * (1 - x * x) * (1 + y * b) * c;
        } else if (b == 0.0) {
          values(i) = 0.25 * (1 + x * a) * (1 - y * y) * (1 + z * c);
          grads(i, 0) = 0.25 * a * (1 - y * y) * (1 + z * c);
          grads(i, 1) = -0.5 * y * (1 + x * a) * (1 + z * c);
          grads(i, 2) = 0.25 * (1 + x * a) * (1 - y * y) * c;
        } else {  // c == 0, vertical mid-edge
          values(i) = 0.25 * (1 + x * a) * (1 + y * b) * (1 - z * z);
          grads(i, 0) = 0.25 * a * (1 + y * b) * (1 - z * z);
          grads(i, 1) = 0.25 * (1 + x * a) * b * (1 - z * z);
          grads(i, 2) = -0.5 * z * (1 + x * a) * (1 + y * b);
        }
      }
      break;
  }
}

// Face parameterization: each face fixes one reference axis and is charted
// by (s[, t]) in [-1,1]^(dim-1). The chart axes are ordered so that in 3D
// a_s x a_t points outward on the reference element, and in 2D edges run
// counter-clockwise (outward normal = (t_y, -t_x)/|t|).
struct FaceChart {
  int fixed_axis;
  double fixed_value;
  int axis_s;
  double sign_s;
  int axis_t;   // -1 in 2D
  double sign_t;
};

inline FaceChart face_chart(ElementKind kind, int face /*0-based*/) {
  const int dim = element_dim(kind);
  if (face < 0 || face >= element_faces(kind))
    throw ConfigError("face id out of range for " + element_kind_name(kind));
  if (dim == 2) {
    static const FaceChart edges[4] = {
        {1, -1, 0, +1, -1, 0},  // eta=-1, along +xi
        {0, +1, 1, +1, -1, 0},  // xi=+1, along +eta
        {1, +1, 0, -1, -1, 0},  // eta=+1, along -xi
        {0, -1, 1, -1, -1, 0},  // xi=-1, along -eta
    };
    return edges[face];
  }
  static const FaceChart faces[6] = {
      {2, -1, 1, +1, 0, +1},  // bottom (zeta=-1)
      {2, +1, 0, +1, 1, +1},  // top    (zeta=+1)
      {1, -1, 0, +1, 2, +1},  // eta=-1
      {0, +1, 1, +1, 2, +1},  // xi=+1
      {1, +1, 2, +1, 0, +1},  // eta=+1
      {0, -1, 2, +1, 1, +1},  // xi=-1
  };
  return faces[face];
}

// Map face chart coordinates into the element reference cube.
inline void face_to_reference(ElementKind kind, int face, const double* sc, double* xi) {
  const FaceChart ch = face_chart(kind, face);
  const int dim = element_dim(kind);
  for (int d = 0; d < dim; ++d) xi[d] = 0.0;
  xi[ch.fixed_axis] = ch.fixed_value;
  xi[ch.axis_s] = ch.sign_s * sc[0];
  if (dim == 3) xi[ch.axis_t] = ch.sign_t * sc[1];
}

// Local nodes lying on a face (reference coordinate on the fixed axis
// matches the fixed value).
inline std::vector<int> face_local_nodes(ElementKind kind, int face) {
  const FaceChart ch = face_chart(kind, face);
  const auto& ref = reference_nodes(kind);
  std::vector<int> out;
  for (int i = 0; i < element_nodes(kind); ++i)
    if (ref[i][ch.fixed_axis] == ch.fixed_value) out.push_back(i);
  return out;
}

// Element edge graph (for mesh smoothing): node pairs that differ on
// exactly one reference axis by the inter-node spacing of the family.
inline std::vector<std::pair<int, int>> element_edges(ElementKind kind) {
  const auto& ref = reference_nodes(kind);
  const int q = element_nodes(kind);
  const bool has_mids = (kind == ElementKind::quad8 || kind == ElementKind::hex20);
  const double spacing = has_mids ? 1.0 : 2.0;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j) {
      int ndiff = 0;
      double mag = 0;
      for (int d = 0; d < 3; ++d) {
        double diff = std::abs(ref[i][d] - ref[j][d]);
        if (diff > 0) {
          ++ndiff;
          mag = diff;
        }
      }
      if (ndiff == 1 && mag == spacing) edges.emplace_back(i, j);
    }
  return edges;
}

}  // namespace lcfgrad
