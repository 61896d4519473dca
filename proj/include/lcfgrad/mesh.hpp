#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lcfgrad/element.hpp"
#include "lcfgrad/errors.hpp"
#include "lcfgrad/quadrature.hpp"

namespace lcfgrad {

struct FaceRef {
  int element = -1;  // 0-based
  int face = -1;     // 0-based local face id
  friend bool operator==(const FaceRef& a, const FaceRef& b) {
    return a.element == b.element && a.face == b.face;
  }
  friend bool operator<(const FaceRef& a, const FaceRef& b) {
    return a.element != b.element ? a.element < b.element : a.face < b.face;
  }
};

struct CyclicSpec {
  int sector_count = 0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  std::vector<int> master_nodes;  // parallel arrays, 0-based
  std::vector<int> slave_nodes;
  std::vector<FaceRef> flank_faces;
  double angle() const { return 2.0 * M_PI / sector_count; }
};

// Node coordinates are the design variable X and the single source of
// truth for geometry; nothing derived from them is cached on the mesh.
// All queries recompute from `nodes`, so replacing the coordinate tensor
// (with_nodes) is always consistent.
struct Mesh {
  int dim = 3;
  ElementKind kind = ElementKind::hex8;
  Eigen::MatrixXd nodes;     // N x dim
  Eigen::MatrixXi elements;  // M x q, 0-based node ids
  std::vector<FaceRef> surface_faces;
  std::vector<std::pair<int, int>> dirichlet;  // (node, component), 0-based
  std::optional<CyclicSpec> cyclic;

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_elements() const { return static_cast<int>(elements.rows()); }
  int nodes_per_element() const { return element_nodes(kind); }
  int n_dof() const { return n_nodes() * dim; }

  double bbox_diagonal() const {
    if (n_nodes() == 0) return 0.0;
    Eigen::VectorXd lo = nodes.colwise().minCoeff();
    Eigen::VectorXd hi = nodes.colwise().maxCoeff();
    return (hi - lo).norm();
  }

  Mesh with_nodes(const Eigen::MatrixXd& new_nodes) const {
    Mesh m = *this;
    m.nodes = new_nodes;
    return m;
  }

  std::vector<char> dirichlet_mask() const {
    std::vector<char> mask(n_dof(), 0);
    for (auto [node, comp] : dirichlet) mask[node * dim + comp] = 1;
    return mask;
  }

  std::vector<int> nodes_of_face(const FaceRef& f) const {
    std::vector<int> out;
    for (int local : face_local_nodes(kind, f.face)) out.push_back(elements(f.element, local));
    return out;
  }

  std::vector<char> surface_node_mask() const {
    std::vector<char> mask(n_nodes(), 0);
    for (const auto& f : surface_faces)
      for (int n : nodes_of_face(f)) mask[n] = 1;
    return mask;
  }

  // Nodes lying on cyclic flank faces but on no fatigue surface face;
  // these carry the "virtual surface" sensitivity artifacts.
  std::vector<char> flank_only_node_mask() const {
    std::vector<char> mask(n_nodes(), 0);
    if (!cyclic) return mask;
    for (const auto& f : cyclic->flank_faces)
      for (int n : nodes_of_face(f)) mask[n] = 1;
    auto surf = surface_node_mask();
    for (int n = 0; n < n_nodes(); ++n)
      if (surf[n]) mask[n] = 0;
    return mask;
  }

  // Sector rotation taking master positions to slave positions.
  Eigen::MatrixXd sector_rotation() const {
    if (!cyclic) throw ConfigError("mesh has no cyclic specification");
    const double phi = cyclic->angle();
    const double c = std::cos(phi), s = std::sin(phi);
    if (dim == 2) {
      Eigen::Matrix2d r;
      r << c, -s, s, c;
      return r;
    }
    const Eigen::Vector3d a = cyclic->axis.normalized();
    Eigen::Matrix3d ax;
    ax << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
    Eigen::Matrix3d r = c * Eigen::Matrix3d::Identity() + s * ax + (1 - c) * a * a.transpose();
    return r;
  }
};

// ---------------------------------------------------------------------------
// Geometry kernels
// ---------------------------------------------------------------------------

inline void element_coords(const Mesh& mesh, int elem,
                           Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3>& X) {
  const int q = mesh.nodes_per_element();
  X.resize(q, mesh.dim);
  for (int j = 0; j < q; ++j) X.row(j) = mesh.nodes.row(mesh.elements(elem, j));
}

struct JacobianEval {
  SmallMat J;     // dim x dim, J_ab = sum_j X_ja dN_jb
  SmallMat Jinv;  // inverse
  double det = 0;
};

// Jacobian of the isoparametric map at a reference point, given shape
// gradients there. Throws on non-positive determinant.
inline JacobianEval jacobian_at(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const ShapeGrads& grads, int elem_for_error = -1) {
  JacobianEval out;
  const int dim = static_cast<int>(X.cols());
  out.J = X.transpose() * grads;  // dim x dim
  out.det = dim == 2 ? out.J(0, 0) * out.J(1, 1) - out.J(0, 1) * out.J(1, 0)
                     : out.J.determinant();
  if (!(out.det > 0.0))
    throw GeometryError("inverted or degenerate element" +
                        (elem_for_error >= 0 ? " " + std::to_string(elem_for_error + 1) : "") +
                        " (detJ = " + std::to_string(out.det) + ")");
  out.Jinv = out.J.inverse();
  return out;
}

inline JacobianEval jacobian(const Mesh& mesh, int elem, const double* xi) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
  element_coords(mesh, elem, X);
  ShapeVals vals;
  ShapeGrads grads;
  shape_functions(mesh.kind, xi, vals, grads);
  return jacobian_at(X, grads, elem);
}

// d(detJ)/dX_{i,c} = detJ * (grad theta_i)_c with grad theta = Jinv^T Ghat.
// Returned as q x dim. Physical shape gradients come out as a byproduct.
inline ShapeGrads detj_gradient(const JacobianEval& jac, const ShapeGrads& ref_grads) {
  ShapeGrads phys = ref_grads * jac.Jinv;  // q x dim, rows = grad theta_j
  return jac.det * phys;
}

struct FaceGramEval {
  double sqrt_g = 0;
  Eigen::Matrix<double, 3, 2> tangents;  // columns a_s, a_t (a_t unused in 2D)
  SmallVec normal;                       // unit outward normal (dim)
};

// Face chart tangents and Gram determinant at chart coordinates sc.
// face_vals/face_grads are the volume shape functions evaluated at the
// mapped reference point; only nodes on the face contribute (serendipity
// trace property).
inline FaceGramEval face_gram_at(const Mesh& mesh, const FaceRef& f, const double* sc,
                                 ShapeVals& vals, ShapeGrads& grads) {
  const int dim = mesh.dim;
  const FaceChart ch = face_chart(mesh.kind, f.face);
  double xi[3] = {0, 0, 0};
  face_to_reference(mesh.kind, f.face, sc, xi);
  shape_functions(mesh.kind, xi, vals, grads);

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
  element_coords(mesh, f.element, X);

  FaceGramEval out;
  out.tangents.setZero();
  // a_alpha = sum_j X_j * dtheta_j/ds_alpha, with dtheta/ds = Ghat * (dxi/ds)
  Eigen::Vector3d as = Eigen::Vector3d::Zero(), at = Eigen::Vector3d::Zero();
  for (int j = 0; j < mesh.nodes_per_element(); ++j) {
    const double ds = ch.sign_s * grads(j, ch.axis_s);
    for (int d = 0; d < dim; ++d) as(d) += X(j, d) * ds;
    if (dim == 3) {
      const double dt = ch.sign_t * grads(j, ch.axis_t);
      for (int d = 0; d < dim; ++d) at(d) += X(j, d) * dt;
    }
  }
  out.tangents.col(0) = as;
  out.tangents.col(1) = at;

  out.normal.resize(dim);
  if (dim == 2) {
    const double g = as.head<2>().squaredNorm();
    if (!(g > 0)) throw GeometryError("degenerate face (zero tangent)");
    out.sqrt_g = std::sqrt(g);
    out.normal(0) = as(1) / out.sqrt_g;
    out.normal(1) = -as(0) / out.sqrt_g;
  } else {
    const Eigen::Vector3d n = as.cross(at);
    const double g = n.squaredNorm();  // Gram det = |a_s x a_t|^2
    if (!(g > 0)) throw GeometryError("degenerate face (rank-deficient tangents)");
    out.sqrt_g = std::sqrt(g);
    out.normal = n / out.sqrt_g;
  }
  return out;
}

inline double face_gram(const Mesh& mesh, const FaceRef& f, const double* sc) {
  ShapeVals vals;
  ShapeGrads grads;
  return face_gram_at(mesh, f, sc, vals, grads).sqrt_g;
}

// d(sqrt g)/dX_{l,c} for the face's local nodes (rows follow
// face_local_nodes order):  sqrt_g * [A G^-1]_{c,alpha} * dtheta_l/ds_alpha.
inline Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> face_gram_gradient(
    const Mesh& mesh, const FaceRef& f, const double* sc, const std::vector<int>& face_locals,
    FaceGramEval* eval_out = nullptr) {
  ShapeVals vals;
  ShapeGrads grads;
  FaceGramEval ev = face_gram_at(mesh, f, sc, vals, grads);
  const int dim = mesh.dim;
  const int fdim = dim - 1;
  const FaceChart ch = face_chart(mesh.kind, f.face);

  Eigen::Matrix<double, 3, 2> A = ev.tangents;
  Eigen::MatrixXd G = A.leftCols(fdim).topRows(dim).transpose() * A.leftCols(fdim).topRows(dim);
  Eigen::MatrixXd AGinv = A.leftCols(fdim).topRows(dim) * G.inverse();  // dim x fdim

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> out(
      static_cast<int>(face_locals.size()), dim);
  for (std::size_t r = 0; r < face_locals.size(); ++r) {
    const int l = face_locals[r];
    double dth[2] = {ch.sign_s * grads(l, ch.axis_s),
                     dim == 3 ? ch.sign_t * grads(l, ch.axis_t) : 0.0};
    for (int c = 0; c < dim; ++c) {
      double val = 0;
      for (int a = 0; a < fdim; ++a) val += AGinv(c, a) * dth[a];
      out(static_cast<int>(r), c) = ev.sqrt_g * val;
    }
  }
  if (eval_out) *eval_out = ev;
  return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline void check_element_geometry(const Mesh& mesh, int elem) {
  // Probe the reduced-rule points plus the reference vertices; the
  // vertices catch pinched corners the interior Gauss points can miss.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
  element_coords(mesh, elem, X);
  ShapeVals vals;
  ShapeGrads grads;
  const QuadratureRule rule = tensor_gauss(mesh.dim, 2);
  for (int p = 0; p < rule.size(); ++p) {
    shape_functions(mesh.kind, rule.point(p), vals, grads);
    jacobian_at(X, grads, elem);
  }
  const auto& ref = reference_nodes(mesh.kind);
  const int n_vertices = mesh.dim == 2 ? 4 : 8;
  for (int v = 0; v < n_vertices; ++v) {
    shape_functions(mesh.kind, ref[v].data(), vals, grads);
    jacobian_at(X, grads, elem);
  }
}

}  // namespace detail

inline void validate_mesh(const Mesh& mesh) {
  const int N = mesh.n_nodes(), M = mesh.n_elements(), q = mesh.nodes_per_element();
  if (element_dim(mesh.kind) != mesh.dim)
    throw ParseError("element kind " + element_kind_name(mesh.kind) + " does not match dim " +
                     std::to_string(mesh.dim));
  for (int k = 0; k < M; ++k)
    for (int j = 0; j < q; ++j)
      if (mesh.elements(k, j) < 0 || mesh.elements(k, j) >= N)
        throw ParseError("element " + std::to_string(k + 1) + " references invalid node " +
                         std::to_string(mesh.elements(k, j) + 1));
  for (int k = 0; k < M; ++k) detail::check_element_geometry(mesh, k);

  std::set<FaceRef> seen;
  auto check_face_list = [&](const std::vector<FaceRef>& faces, const char* what) {
    for (const auto& f : faces) {
      if (f.element < 0 || f.element >= M)
        throw ParseError(std::string(what) + " references invalid element " +
                         std::to_string(f.element + 1));
      if (f.face < 0 || f.face >= element_faces(mesh.kind))
        throw ParseError(std::string(what) + " face id out of range on element " +
                         std::to_string(f.element + 1));
      if (!seen.insert(f).second)
        throw ParseError(std::string(what) + " lists element " + std::to_string(f.element + 1) +
                         " face " + std::to_string(f.face + 1) + " more than once");
    }
  };
  check_face_list(mesh.surface_faces, "surface");

  for (auto [node, comp] : mesh.dirichlet) {
    if (node < 0 || node >= N) throw ParseError("dirichlet references invalid node");
    if (comp < 0 || comp >= mesh.dim) throw ParseError("dirichlet component out of range");
  }

  if (mesh.cyclic) {
    const auto& cyc = *mesh.cyclic;
    if (cyc.sector_count < 2) throw ParseError("cyclic sector count must be >= 2");
    if (mesh.dim == 3 && cyc.axis.norm() == 0.0) throw ParseError("cyclic axis must be nonzero");
    if (cyc.master_nodes.size() != cyc.slave_nodes.size())
      throw ParseError("cyclic master/slave lists differ in length");
    check_face_list(cyc.flank_faces, "flanks");  // shares `seen`: also disjoint from surface

    const Eigen::MatrixXd R = mesh.sector_rotation();
    const double tol = 1e-8 * mesh.bbox_diagonal();
    std::set<int> slaves;
    for (std::size_t i = 0; i < cyc.master_nodes.size(); ++i) {
      const int m = cyc.master_nodes[i], s = cyc.slave_nodes[i];
      if (m < 0 || m >= N || s < 0 || s >= N)
        throw ParseError("cyclic pair references invalid node");
      if (!slaves.insert(s).second)
        throw ParseError("node " + std::to_string(s + 1) + " appears as slave twice");
      Eigen::VectorXd rotated = R * mesh.nodes.row(m).transpose();
      const double err = (rotated - mesh.nodes.row(s).transpose()).norm();
      if (err > tol)
        throw ConstraintError("cyclic pair (" + std::to_string(m + 1) + ", " +
                              std::to_string(s + 1) + ") violates the sector rotation by " +
                              std::to_string(err));
    }
    for (int m : cyc.master_nodes)
      if (slaves.count(m))
        throw ParseError("node " + std::to_string(m + 1) + " is both master and slave");
  }
}

// Non-throwing geometry probe used by optimization line search.
inline bool geometry_valid(const Mesh& mesh) {
  try {
    for (int k = 0; k < mesh.n_elements(); ++k) detail::check_element_geometry(mesh, k);
    ShapeVals vals;
    ShapeGrads grads;
    double sc[2] = {0, 0};
    for (const auto& f : mesh.surface_faces) face_gram_at(mesh, f, sc, vals, grads);
  } catch (const GeometryError&) {
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Mesh file format (line oriented; '#' starts a comment)
// ---------------------------------------------------------------------------

namespace detail {

struct LineReader {
  std::istream& in;
  int line_no = 0;
  bool next(std::vector<std::string>& tokens, std::string* raw = nullptr) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      std::istringstream iss(line);
      tokens.assign(std::istream_iterator<std::string>(iss), std::istream_iterator<std::string>());
      if (!tokens.empty()) {
        if (raw) *raw = line;
        return true;
      }
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("mesh line " + std::to_string(line_no) + ": " + msg);
  }
};

inline double to_double(const std::string& s, LineReader& r) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) r.fail("bad number '" + s + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (...) {
    r.fail("bad number '" + s + "'");
  }
}

inline int to_int(const std::string& s, LineReader& r) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) r.fail("bad integer '" + s + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (...) {
    r.fail("bad integer '" + s + "'");
  }
}

}  // namespace detail

inline Mesh parse_mesh(std::istream& in) {
  detail::LineReader reader{in};
  std::vector<std::string> tok;
  Mesh mesh;

  if (!reader.next(tok) || tok[0] != "dim" || tok.size() != 2)
    reader.fail("expected 'dim <2|3>'");
  mesh.dim = detail::to_int(tok[1], reader);
  if (mesh.dim != 2 && mesh.dim != 3) reader.fail("dim must be 2 or 3");

  if (!reader.next(tok) || tok[0] != "nodes" || tok.size() != 2)
    reader.fail("expected 'nodes <N>'");
  const int N = detail::to_int(tok[1], reader);
  if (N <= 0) reader.fail("node count must be positive");
  mesh.nodes.resize(N, mesh.dim);
  for (int i = 0; i < N; ++i) {
    if (!reader.next(tok)) reader.fail("unexpected end of file in node block");
    if (static_cast<int>(tok.size()) != 1 + mesh.dim)
      reader.fail("expected 'id x y" + std::string(mesh.dim == 3 ? " z" : "") + "'");
    if (detail::to_int(tok[0], reader) != i + 1)
      reader.fail("node ids must be 1-based and consecutive");
    for (int d = 0; d < mesh.dim; ++d) mesh.nodes(i, d) = detail::to_double(tok[1 + d], reader);
  }

  if (!reader.next(tok) || tok[0] != "elements" || tok.size() != 3)
    reader.fail("expected 'elements <M> <kind>'");
  const int M = detail::to_int(tok[1], reader);
  if (M <= 0) reader.fail("element count must be positive");
  try {
    mesh.kind = element_kind_from_name(tok[2]);
  } catch (const ParseError& e) {
    reader.fail(e.what());
  }
  const int q = element_nodes(mesh.kind);
  mesh.elements.resize(M, q);
  for (int k = 0; k < M; ++k) {
    if (!reader.next(tok)) reader.fail("unexpected end of file in element block");
    if (static_cast<int>(tok.size()) != 1 + q)
      reader.fail("expected 'id n1 ... n" + std::to_string(q) + "'");
    if (detail::to_int(tok[0], reader) != k + 1)
      reader.fail("element ids must be 1-based and consecutive");
    for (int j = 0; j < q; ++j) mesh.elements(k, j) = detail::to_int(tok[1 + j], reader) - 1;
  }

  auto read_face_block = [&](int count, std::vector<FaceRef>& out) {
    for (int i = 0; i < count; ++i) {
      if (!reader.next(tok)) reader.fail("unexpected end of file in face block");
      if (tok.size() != 2) reader.fail("expected 'elem_id face_id'");
      out.push_back({detail::to_int(tok[0], reader) - 1, detail::to_int(tok[1], reader) - 1});
    }
  };

  if (!reader.next(tok) || tok[0] != "surface" || tok.size() != 2)
    reader.fail("expected 'surface <K>'");
  read_face_block(detail::to_int(tok[1], reader), mesh.surface_faces);

  bool have_line = reader.next(tok);
  if (have_line && tok[0] == "dirichlet") {
    if (tok.size() != 2) reader.fail("expected 'dirichlet <K>'");
    const int K = detail::to_int(tok[1], reader);
    for (int i = 0; i < K; ++i) {
      if (!reader.next(tok)) reader.fail("unexpected end of file in dirichlet block");
      if (tok.size() != 2) reader.fail("expected 'node_id comp'");
      const int node = detail::to_int(tok[0], reader) - 1;
      if (tok[1] == "all") {
        for (int d = 0; d < mesh.dim; ++d) mesh.dirichlet.emplace_back(node, d);
      } else {
        mesh.dirichlet.emplace_back(node, detail::to_int(tok[1], reader) - 1);
      }
    }
    have_line = reader.next(tok);
  }

  if (have_line && tok[0] == "cyclic") {
    if (tok.size() != 5) reader.fail("expected 'cyclic <n_sectors> <ax> <ay> <az>'");
    CyclicSpec cyc;
    cyc.sector_count = detail::to_int(tok[1], reader);
    for (int d = 0; d < 3; ++d) cyc.axis(d) = detail::to_double(tok[2 + d], reader);
    while ((have_line = reader.next(tok))) {
      if (tok[0] == "flanks") break;
      if (tok.size() != 2) reader.fail("expected 'master_id slave_id'");
      cyc.master_nodes.push_back(detail::to_int(tok[0], reader) - 1);
      cyc.slave_nodes.push_back(detail::to_int(tok[1], reader) - 1);
    }
    if (have_line && tok[0] == "flanks") {
      if (tok.size() != 2) reader.fail("expected 'flanks <K>'");
      read_face_block(detail::to_int(tok[1], reader), cyc.flank_faces);
      have_line = reader.next(tok);
    }
    mesh.cyclic = std::move(cyc);
  }
  if (have_line) reader.fail("unexpected content '" + tok[0] + "'");

  validate_mesh(mesh);
  return mesh;
}

inline Mesh parse_mesh(const std::string& text) {
  std::istringstream in(text);
  return parse_mesh(in);
}

inline void write_mesh(const Mesh& mesh, std::ostream& out) {
  out.precision(17);
  out << "dim " << mesh.dim << "\n";
  out << "nodes " << mesh.n_nodes() << "\n";
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    out << (i + 1);
    for (int d = 0; d < mesh.dim; ++d) out << " " << mesh.nodes(i, d);
    out << "\n";
  }
  out << "elements " << mesh.n_elements() << " " << element_kind_name(mesh.kind) << "\n";
  for (int k = 0; k < mesh.n_elements(); ++k) {
    out << (k + 1);
    for (int j = 0; j < mesh.nodes_per_element(); ++j) out << " " << (mesh.elements(k, j) + 1);
    out << "\n";
  }
  out << "surface " << mesh.surface_faces.size() << "\n";
  for (const auto& f : mesh.surface_faces)
    out << (f.element + 1) << " " << (f.face + 1) << "\n";
  if (!mesh.dirichlet.empty()) {
    out << "dirichlet " << mesh.dirichlet.size() << "\n";
    for (auto [node, comp] : mesh.dirichlet) out << (node + 1) << " " << (comp + 1) << "\n";
  }
  if (mesh.cyclic) {
    const auto& cyc = *mesh.cyclic;
    out << "cyclic " << cyc.sector_count << " " << cyc.axis(0) << " " << cyc.axis(1) << " "
        << cyc.axis(2) << "\n";
    for (std::size_t i = 0; i < cyc.master_nodes.size(); ++i)
      out << (cyc.master_nodes[i] + 1) << " " << (cyc.slave_nodes[i] + 1) << "\n";
    out << "flanks " << cyc.flank_faces.size() << "\n";
    for (const auto& f : cyc.flank_faces)
      out << (f.element + 1) << " " << (f.face + 1) << "\n";
  }
}

}  // namespace lcfgrad
