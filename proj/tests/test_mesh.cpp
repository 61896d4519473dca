#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "lcfgrad/lcfgrad.hpp"
#include "support/fixtures.hpp"

using namespace lcfgrad;

namespace {

const char* kUnitCubeFile = R"(# unit cube
dim 3
nodes 8
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
5 0 0 1
6 1 0 1
7 1 1 1
8 0 1 1
elements 1 hex8
1 1 2 3 4 5 6 7 8
surface 1
1 1
)";

Mesh random_hex8(std::mt19937_64& rng, double wiggle = 0.15) {
  fixtures::GeneratedMesh gm = fixtures::unit_cube();
  std::uniform_real_distribution<double> u(-wiggle, wiggle);
  Eigen::MatrixXd X = gm.mesh.nodes;
  for (int n = 0; n < X.rows(); ++n)
    for (int d = 0; d < 3; ++d) X(n, d) += u(rng);
  return gm.mesh.with_nodes(X);
}

double element_diameter(const Mesh& mesh, int elem) {
  double diam = 0;
  for (int i = 0; i < mesh.nodes_per_element(); ++i)
    for (int j = i + 1; j < mesh.nodes_per_element(); ++j)
      diam = std::max(diam, (mesh.nodes.row(mesh.elements(elem, i)) -
                             mesh.nodes.row(mesh.elements(elem, j)))
                                .norm());
  return diam;
}

}  // namespace

TEST_CASE("parse: minimal unit cube") {
  Mesh mesh = parse_mesh(std::string(kUnitCubeFile));
  CHECK(mesh.n_nodes() == 8);
  CHECK(mesh.n_elements() == 1);
  CHECK(mesh.kind == ElementKind::hex8);
  CHECK(mesh.surface_faces.size() == 1);
}

TEST_CASE("parse: malformed line reports line number") {
  std::string text = kUnitCubeFile;
  text.replace(text.find("3 1 1 0"), 7, "3 1 X 0");
  try {
    parse_mesh(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 6") != std::string::npos);
  }
}

TEST_CASE("parse: coincident nodes give a geometry error naming the element") {
  std::string text = kUnitCubeFile;
  text.replace(text.find("2 1 0 0"), 7, "2 0 0 0");  // node 2 collapses onto node 1
  try {
    parse_mesh(text);
    FAIL("expected GeometryError");
  } catch (const GeometryError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("parse: duplicate surface face rejected") {
  std::string text = kUnitCubeFile;
  text.replace(text.find("surface 1"), 9, "surface 2");
  text += "1 1\n";
  CHECK_THROWS_AS(parse_mesh(text), ParseError);
}

TEST_CASE("parse: paper-scale hex20 rod file round-trips") {
  // 6 x 7 x 31 brick elements: M = 1302 like the reference rod model.
  fixtures::GeneratedMesh gm =
      fixtures::bent_rod_3d(ElementKind::hex20, 31, 6, 7, 10.0, 1.0, 1.2, 0.8);
  CHECK(gm.mesh.n_elements() == 1302);
  CHECK(gm.mesh.n_nodes() > 6000);  // same size class as the reference model
  std::ostringstream out;
  write_mesh(gm.mesh, out);
  Mesh again = parse_mesh(out.str());
  CHECK(again.n_nodes() == gm.mesh.n_nodes());
  CHECK(again.n_elements() == 1302);
  CHECK((again.nodes - gm.mesh.nodes).norm() == 0.0);
}

TEST_CASE("parse: cyclic pairing tolerance enforced") {
  fixtures::RingSpec rs;
  fixtures::GeneratedMesh gm = fixtures::make_ring(rs);
  std::ostringstream out;
  write_mesh(gm.mesh, out);
  CHECK_NOTHROW(parse_mesh(out.str()));  // valid pairing round-trips

  Mesh broken = gm.mesh;
  broken.nodes(broken.cyclic->slave_nodes[0], 2) += 1e-3;
  std::ostringstream out2;
  write_mesh(broken, out2);
  CHECK_THROWS_AS(parse_mesh(out2.str()), ConstraintError);
}

TEST_CASE("shape functions: partition of unity and Lagrange property") {
  std::mt19937_64 rng = fixtures::rng();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (ElementKind kind : {ElementKind::quad4, ElementKind::quad8, ElementKind::hex8,
                           ElementKind::hex20}) {
    const int dim = element_dim(kind);
    const int q = element_nodes(kind);
    ShapeVals vals;
    ShapeGrads grads;
    // partition of unity at random points, gradient sums vanish
    for (int trial = 0; trial < 5; ++trial) {
      double xi[3] = {u(rng), u(rng), dim == 3 ? u(rng) : 0};
      shape_functions(kind, xi, vals, grads);
      CHECK(vals.sum() == doctest::Approx(1.0).epsilon(1e-14));
      for (int d = 0; d < dim; ++d)
        CHECK(std::abs(grads.col(d).sum()) < 1e-13);
    }
    // Lagrange delta property at every node
    const auto& ref = reference_nodes(kind);
    for (int i = 0; i < q; ++i) {
      shape_functions(kind, ref[i].data(), vals, grads);
      for (int j = 0; j < q; ++j)
        CHECK(std::abs(vals(j) - (i == j ? 1.0 : 0.0)) < 1e-13);
    }
  }
}

TEST_CASE("shape functions: hex8 center values") {
  double xi[3] = {0, 0, 0};
  ShapeVals vals;
  ShapeGrads grads;
  shape_functions(ElementKind::hex8, xi, vals, grads);
  for (int i = 0; i < 8; ++i) CHECK(vals(i) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("shape functions: gradients match central differences") {
  std::mt19937_64 rng = fixtures::rng(7);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  const double h = 1e-6;
  for (ElementKind kind : {ElementKind::quad4, ElementKind::quad8, ElementKind::hex8,
                           ElementKind::hex20}) {
    const int dim = element_dim(kind);
    ShapeVals vp, vm, v;
    ShapeGrads g, gtmp;
    for (int trial = 0; trial < 5; ++trial) {
      double xi[3] = {u(rng), u(rng), dim == 3 ? u(rng) : 0};
      shape_functions(kind, xi, v, g);
      for (int d = 0; d < dim; ++d) {
        double xp[3] = {xi[0], xi[1], xi[2]}, xm[3] = {xi[0], xi[1], xi[2]};
        xp[d] += h;
        xm[d] -= h;
        shape_functions(kind, xp, vp, gtmp);
        shape_functions(kind, xm, vm, gtmp);
        for (int j = 0; j < element_nodes(kind); ++j) {
          const double fd = (vp(j) - vm(j)) / (2 * h);
          CHECK(g(j, d) == doctest::Approx(fd).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("jacobian: unit cube is an affine half-identity map") {
  fixtures::GeneratedMesh gm = fixtures::unit_cube();
  double xi[3] = {0.3, -0.2, 0.7};
  JacobianEval jac = jacobian(gm.mesh, 0, xi);
  CHECK((jac.J - 0.5 * Eigen::Matrix3d::Identity()).norm() < 1e-14);
  CHECK(jac.det == doctest::Approx(0.125).epsilon(1e-14));
}

TEST_CASE("jacobian: uniform scaling scales detJ cubically") {
  fixtures::GeneratedMesh gm = fixtures::unit_cube();
  const double s = 2.7;
  Mesh scaled = gm.mesh.with_nodes((s * gm.mesh.nodes).eval());
  double xi[3] = {0.1, 0.4, -0.6};
  CHECK(jacobian(scaled, 0, xi).det ==
        doctest::Approx(s * s * s * jacobian(gm.mesh, 0, xi).det).epsilon(1e-13));
}

TEST_CASE("jacobian: detJ matches numerically differentiated map") {
  std::mt19937_64 rng = fixtures::rng(13);
  Mesh mesh = random_hex8(rng);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  const double h = 1e-6;
  ShapeVals vals;
  ShapeGrads grads;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
  element_coords(mesh, 0, X);
  for (int trial = 0; trial < 3; ++trial) {
    double xi[3] = {u(rng), u(rng), u(rng)};
    // brute-force Jacobian: FD of the isoparametric map itself
    Eigen::Matrix3d Jfd;
    for (int d = 0; d < 3; ++d) {
      double xp[3] = {xi[0], xi[1], xi[2]}, xm[3] = {xi[0], xi[1], xi[2]};
      xp[d] += h;
      xm[d] -= h;
      shape_functions(mesh.kind, xp, vals, grads);
      Eigen::Vector3d mp = (X.transpose() * vals).head<3>();
      shape_functions(mesh.kind, xm, vals, grads);
      Eigen::Vector3d mm = (X.transpose() * vals).head<3>();
      Jfd.col(d) = (mp - mm) / (2 * h);
    }
    CHECK(jacobian(mesh, 0, xi).det == doctest::Approx(Jfd.determinant()).epsilon(1e-8));
  }
}

TEST_CASE("face gram: unit cube face integrates to area 1") {
  fixtures::GeneratedMesh gm = fixtures::unit_cube();
  const QuadratureRule rule = tensor_gauss(2, 2);
  for (int face = 0; face < 6; ++face) {
    double area = 0;
    for (int p = 0; p < rule.size(); ++p)
      area += rule.weights[p] * face_gram(gm.mesh, {0, face}, rule.point(p));
    CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("face gram: area scales quadratically") {
  fixtures::GeneratedMesh gm = fixtures::unit_cube();
  const double s = 1.9;
  Mesh scaled = gm.mesh.with_nodes((s * gm.mesh.nodes).eval());
  const QuadratureRule rule = tensor_gauss(2, 2);
  double area = 0;
  for (int p = 0; p < rule.size(); ++p)
    area += rule.weights[p] * face_gram(scaled, {0, 2}, rule.point(p));
  CHECK(area == doctest::Approx(s * s).epsilon(1e-13));
}

TEST_CASE("face gram: curved hex20 face area vs dense quadrature") {
  // curved rod: top faces are bent by the sine bump
  fixtures::GeneratedMesh gm = fixtures::bent_rod_3d(ElementKind::hex20, 4, 1, 1);
  const FaceRef face = gm.face_groups.at("ymax").front();
  auto integrate = [&](int order) {
    const QuadratureRule rule = tensor_gauss(2, order);
    double area = 0;
    for (int p = 0; p < rule.size(); ++p)
      area += rule.weights[p] * face_gram(gm.mesh, face, rule.point(p));
    return area;
  };
  CHECK(integrate(6) == doctest::Approx(integrate(10)).epsilon(1e-9));
}

TEST_CASE("face gram: degenerate face rejected") {
  fixtures::GeneratedMesh gm = fixtures::unit_cube();
  Eigen::MatrixXd X = gm.mesh.nodes;
  // collapse the bottom face to a line
  X.row(2) = X.row(1);
  X.row(3) = X.row(0);
  Mesh bad = gm.mesh.with_nodes(X);
  double sc[2] = {0, 0};
  CHECK_THROWS_AS(face_gram(bad, {0, 0}, sc), GeometryError);
}

TEST_CASE("quadrature: paper point counts and Gauss exactness") {
  CHECK(tensor_gauss(3, 2).size() == 8);    // reduced volume rule
  CHECK(tensor_gauss(2, 6).size() == 36);   // surface rule
  CHECK_THROWS_AS(tensor_gauss(2, 11), ConfigError);
  CHECK_THROWS_AS(tensor_gauss(2, 0), ConfigError);

  const QuadratureRule rule = tensor_gauss(2, 2);
  double integral = 0;
  for (int p = 0; p < rule.size(); ++p) {
    const double x = rule.point(p)[0], y = rule.point(p)[1];
    integral += rule.weights[p] * x * x * y * y;
  }
  CHECK(integral == doctest::Approx(4.0 / 9.0).epsilon(1e-14));

  double measure = 0;
  for (int p = 0; p < rule.size(); ++p) measure += rule.weights[p];
  CHECK(measure == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("quadrature: high-order nodes stay accurate") {
  // integrate x^18 over [-1,1] with the 10-point rule: exact 2/19
  const QuadratureRule rule = tensor_gauss(1, 10);
  double integral = 0;
  for (int p = 0; p < rule.size(); ++p)
    integral += rule.weights[p] * std::pow(rule.point(p)[0], 18);
  CHECK(integral == doctest::Approx(2.0 / 19.0).epsilon(1e-13));
}

TEST_CASE("rigid translation leaves detJ and face grams unchanged") {
  std::mt19937_64 rng = fixtures::rng(99);
  fixtures::GeneratedMesh gm = fixtures::bent_rod_3d(ElementKind::hex8, 3, 1, 1);
  Eigen::RowVector3d shift(12.0, -5.0, 3.5);
  Mesh moved = gm.mesh.with_nodes((gm.mesh.nodes.rowwise() + shift).eval());
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int k = 0; k < gm.mesh.n_elements(); ++k) {
    double xi[3] = {u(rng), u(rng), u(rng)};
    CHECK(jacobian(moved, k, xi).det ==
          doctest::Approx(jacobian(gm.mesh, k, xi).det).epsilon(1e-13));
  }
  for (const auto& f : gm.mesh.surface_faces) {
    double sc[2] = {u(rng), u(rng)};
    CHECK(face_gram(moved, f, sc) == doctest::Approx(face_gram(gm.mesh, f, sc)).epsilon(1e-13));
  }
}

TEST_CASE("geometric derivatives match central finite differences") {
  std::mt19937_64 rng = fixtures::rng(41);
  Mesh mesh = random_hex8(rng);
  const double h = 1e-6 * element_diameter(mesh, 0);
  std::uniform_real_distribution<double> u(-0.8, 0.8);

  SUBCASE("detJ derivative") {
    for (int trial = 0; trial < 3; ++trial) {
      double xi[3] = {u(rng), u(rng), u(rng)};
      ShapeVals vals;
      ShapeGrads grads;
      shape_functions(mesh.kind, xi, vals, grads);
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
      element_coords(mesh, 0, X);
      const JacobianEval jac = jacobian_at(X, grads);
      const ShapeGrads dd = detj_gradient(jac, grads);
      for (int i = 0; i < 8; ++i)
        for (int c = 0; c < 3; ++c) {
          Eigen::MatrixXd Xp = mesh.nodes, Xm = mesh.nodes;
          Xp(mesh.elements(0, i), c) += h;
          Xm(mesh.elements(0, i), c) -= h;
          const double fd = (jacobian(mesh.with_nodes(Xp), 0, xi).det -
                             jacobian(mesh.with_nodes(Xm), 0, xi).det) /
                            (2 * h);
          CHECK(dd(i, c) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
  }

  SUBCASE("face gram derivative") {
    const FaceRef face{0, 1};
    const auto locals = face_local_nodes(mesh.kind, face.face);
    for (int trial = 0; trial < 3; ++trial) {
      double sc[2] = {u(rng), u(rng)};
      const auto dg = face_gram_gradient(mesh, face, sc, locals);
      for (std::size_t r = 0; r < locals.size(); ++r) {
        const int node = mesh.elements(face.element, locals[r]);
        for (int c = 0; c < 3; ++c) {
          Eigen::MatrixXd Xp = mesh.nodes, Xm = mesh.nodes;
          Xp(node, c) += h;
          Xm(node, c) -= h;
          const double fd = (face_gram(mesh.with_nodes(Xp), face, sc) -
                             face_gram(mesh.with_nodes(Xm), face, sc)) /
                            (2 * h);
          CHECK(dg(static_cast<int>(r), c) == doctest::Approx(fd).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("face charts orient outward normals") {
  fixtures::GeneratedMesh gm = fixtures::unit_cube();
  ShapeVals vals;
  ShapeGrads grads;
  double sc[2] = {0.0, 0.0};
  // unit cube centered at (0.5)^3: outward normal at face center must point
  // away from the center
  for (int face = 0; face < 6; ++face) {
    FaceGramEval ev = face_gram_at(gm.mesh, {0, face}, sc, vals, grads);
    Eigen::Vector3d center(0.5, 0.5, 0.5);
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    for (int j = 0; j < 8; ++j)
      x += vals(j) * gm.mesh.nodes.row(gm.mesh.elements(0, j)).transpose();
    CHECK((x - center).dot(ev.normal.head<3>()) > 0.0);
  }
}
