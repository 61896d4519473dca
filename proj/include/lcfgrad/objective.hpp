#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "lcfgrad/elasticity.hpp"
#include "lcfgrad/fatigue.hpp"
#include "lcfgrad/mesh.hpp"
#include "lcfgrad/quadrature.hpp"

namespace lcfgrad {

// ---------------------------------------------------------------------------
// Shared surface-quadrature machinery. J and all its derivatives visit the
// same per-face quadrature points: stress is evaluated with the full volume
// shape functions of the owning element at the point mapped onto the face.
// ---------------------------------------------------------------------------

struct SurfacePointData {
  int face_index = 0;   // index into mesh.surface_faces
  int point_index = 0;  // index into the face rule
  double weight = 0;    // reference face weight
  FaceGramEval gram;
  ShapeVals vals;        // volume shape values at the mapped point
  ShapeGrads phys_grads; // physical gradients (q x dim)
  PointStress st;
  FatiguePointState chain;  // at sigma_el = amplitude_factor * vm
};

// Calls fn(const SurfacePointData&, const FaceRef&) for every surface
// quadrature point of faces [face_begin, face_end).
template <typename Fn>
void for_each_surface_point(const Mesh& mesh, const MaterialModel& mat, const Eigen::VectorXd& U,
                            const QuadratureRule& face_rule, std::size_t face_begin,
                            std::size_t face_end, Fn&& fn) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
  SurfacePointData d;
  ShapeGrads ref_grads;
  for (std::size_t fi = face_begin; fi < face_end; ++fi) {
    const FaceRef face = mesh.surface_faces[fi];
    element_coords(mesh, face.element, X);
    for (int p = 0; p < face_rule.size(); ++p) {
      d.face_index = static_cast<int>(fi);
      d.point_index = p;
      d.weight = face_rule.weights[p];
      double xi[3] = {0, 0, 0};
      face_to_reference(mesh.kind, face.face, face_rule.point(p), xi);
      shape_functions(mesh.kind, xi, d.vals, ref_grads);
      const JacobianEval jac = jacobian_at(X, ref_grads, face.element);
      d.phys_grads = ref_grads * jac.Jinv;
      d.gram = face_gram_at(mesh, face, face_rule.point(p), d.vals, ref_grads);
      d.st = stress_from_grad_u(displacement_gradient(mesh, U, face.element, d.phys_grads), mat,
                                mesh.dim);
      d.chain = fatigue_chain(mat.amplitude_factor * d.st.vm, mat);
      fn(d, face);
    }
  }
}

// ---------------------------------------------------------------------------
// Surface objective J(X, U) = sum_faces sum_p w_p (1/N(x_p))^m sqrt(g_p).
// Densities are formed in log space; zero-stress points underflow to 0.
// ---------------------------------------------------------------------------

struct Objective {
  double J = 0;
  std::vector<double> per_face;  // parallel to mesh.surface_faces
  bool saturated_warning = false;
};

inline Objective objective_J(const Mesh& mesh, const MaterialModel& mat, const Eigen::VectorXd& U,
                             const QuadratureRule& face_rule) {
  Objective out;
  out.per_face.assign(mesh.surface_faces.size(), 0.0);
  for_each_surface_point(
      mesh, mat, U, face_rule, 0, mesh.surface_faces.size(),
      [&](const SurfacePointData& d, const FaceRef& face) {
        const double contrib = d.weight * life_density(d.chain, mat) * d.gram.sqrt_g;
        if (std::isnan(contrib))
          throw NumericError("objective: NaN contribution on element " +
                             std::to_string(face.element + 1) + " face " +
                             std::to_string(face.face + 1) + " point " +
                             std::to_string(d.point_index + 1));
        if (d.chain.clamp == LifeClamp::short_life) out.saturated_warning = true;
        out.per_face[d.face_index] += contrib;
      });
  for (double v : out.per_face) out.J += v;
  return out;
}

// PoF(n) = 1 - exp(-n^m J)
inline double pof(double J, double cycles_n, const MaterialModel& mat) {
  if (J < 0) throw NumericError("pof: negative objective value");
  if (J == 0.0) return 0.0;
  return -std::expm1(-std::pow(cycles_n, mat.m) * J);
}

// Weibull scale eta = J^(-1/m); PoF(eta) = 1 - 1/e. J = 0 signals an
// infinite scale (no failure density anywhere), not an error.
inline double weibull_scale(double J, const MaterialModel& mat) {
  if (J < 0) throw NumericError("weibull_scale: negative objective value");
  if (J == 0.0) return std::numeric_limits<double>::infinity();
  return std::exp(-std::log(J) / mat.m);
}

// ---------------------------------------------------------------------------
// Deterministic life diagnostic: the fatigue chain at surface nodes and
// the minimizing node. Non-differentiable baseline; diagnostics only.
// Nodal elastic amplitudes take the max over adjacent surface elements
// (conservative convention).
// ---------------------------------------------------------------------------

struct DetLife {
  std::vector<int> nodes;          // surface node ids
  std::vector<double> log_life;    // parallel to nodes
  std::vector<double> sigma_el;    // parallel to nodes
  int min_node = -1;
  double min_log_life = std::numeric_limits<double>::infinity();
};

inline DetLife det_life(const Mesh& mesh, const MaterialModel& mat, const Eigen::VectorXd& U) {
  std::map<int, double> nodal_sigma;
  const auto& ref = reference_nodes(mesh.kind);
  for (const auto& face : mesh.surface_faces) {
    for (int local : face_local_nodes(mesh.kind, face.face)) {
      const int node = mesh.elements(face.element, local);
      const PointStress st = stress(mesh, mat, U, face.element, ref[local].data());
      const double s = mat.amplitude_factor * st.vm;
      auto [it, inserted] = nodal_sigma.emplace(node, s);
      if (!inserted) it->second = std::max(it->second, s);
    }
  }
  DetLife out;
  out.nodes.reserve(nodal_sigma.size());
  for (auto [node, sigma] : nodal_sigma) {
    const FatiguePointState st = fatigue_chain(sigma, mat);
    out.nodes.push_back(node);
    out.sigma_el.push_back(sigma);
    out.log_life.push_back(st.log_life);
    if (st.log_life < out.min_log_life) {
      out.min_log_life = st.log_life;
      out.min_node = node;
    }
  }
  return out;
}

}  // namespace lcfgrad
