#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "lcfgrad/errors.hpp"
#include "lcfgrad/mesh.hpp"

namespace lcfgrad {

// Legacy ASCII VTK unstructured grid. Node orderings of the supported
// element families match the VTK linear/quadratic cell conventions
// directly (corners first, then edge midpoints).
inline int vtk_cell_type(ElementKind kind) {
  switch (kind) {
    case ElementKind::quad4: return 9;    // VTK_QUAD
    case ElementKind::quad8: return 23;   // VTK_QUADRATIC_QUAD
    case ElementKind::hex8: return 12;    // VTK_HEXAHEDRON
    case ElementKind::hex20: return 25;   // VTK_QUADRATIC_HEXAHEDRON
  }
  return 0;
}

struct VtkPointData {
  std::string name;
  Eigen::MatrixXd data;  // N x 1 scalars or N x dim vectors
};

inline void write_vtk(std::ostream& out, const Mesh& mesh,
                      const std::vector<VtkPointData>& point_data, const std::string& title) {
  out.precision(17);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  const int N = mesh.n_nodes(), M = mesh.n_elements(), q = mesh.nodes_per_element();
  out << "POINTS " << N << " double\n";
  for (int i = 0; i < N; ++i) {
    out << mesh.nodes(i, 0) << " " << mesh.nodes(i, 1) << " "
        << (mesh.dim == 3 ? mesh.nodes(i, 2) : 0.0) << "\n";
  }
  out << "CELLS " << M << " " << M * (q + 1) << "\n";
  for (int k = 0; k < M; ++k) {
    out << q;
    for (int j = 0; j < q; ++j) out << " " << mesh.elements(k, j);
    out << "\n";
  }
  out << "CELL_TYPES " << M << "\n";
  for (int k = 0; k < M; ++k) out << vtk_cell_type(mesh.kind) << "\n";

  if (!point_data.empty()) {
    out << "POINT_DATA " << N << "\n";
    for (const auto& pd : point_data) {
      if (pd.data.rows() != N) throw Error("vtk: point data '" + pd.name + "' has wrong length");
      if (pd.data.cols() == 1) {
        out << "SCALARS " << pd.name << " double 1\nLOOKUP_TABLE default\n";
        for (int i = 0; i < N; ++i) out << pd.data(i, 0) << "\n";
      } else {
        out << "VECTORS " << pd.name << " double\n";
        for (int i = 0; i < N; ++i) {
          out << pd.data(i, 0) << " " << pd.data(i, 1) << " "
              << (pd.data.cols() > 2 ? pd.data(i, 2) : 0.0) << "\n";
        }
      }
    }
  }
}

inline void write_vtk_file(const std::string& path, const Mesh& mesh,
                           const std::vector<VtkPointData>& point_data,
                           const std::string& title = "lcfgrad output") {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file '" + path + "'");
  write_vtk(out, mesh, point_data, title);
}

}  // namespace lcfgrad
