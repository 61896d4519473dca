#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lcfgrad/elasticity.hpp"
#include "lcfgrad/objective.hpp"
#include "lcfgrad/parallel.hpp"

namespace lcfgrad {

// One spatial gradient vector per mesh node (dJ/dX, dPoF/dX, dV/dX).
struct SensitivityField {
  Eigen::MatrixXd values;  // N x dim

  static SensitivityField zero(const Mesh& mesh) {
    return {Eigen::MatrixXd::Zero(mesh.n_nodes(), mesh.dim)};
  }
  double dot(const Eigen::MatrixXd& direction) const {
    return (values.array() * direction.array()).sum();
  }
  double norm() const { return values.norm(); }
};

// ---------------------------------------------------------------------------
// dJ/dU: chain rule through density <- log-life <- strain <- stress <- U at
// every surface quadrature point, scattered to the owning element's dof.
// Points with vanishing von Mises stress contribute zero (the density and
// its derivative vanish there).
// ---------------------------------------------------------------------------

inline Eigen::VectorXd dJ_dU(const Mesh& mesh, const MaterialModel& mat, const Eigen::VectorXd& U,
                             const QuadratureRule& face_rule, int threads = 1) {
  const int dim = mesh.dim;
  const std::size_t n_faces = mesh.surface_faces.size();
  std::vector<Eigen::VectorXd> partials(chunk_ranges(n_faces, threads).size());
  parallel_chunks(n_faces, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(mesh.n_dof());
    for_each_surface_point(
        mesh, mat, U, face_rule, begin, end, [&](const SurfacePointData& d, const FaceRef& face) {
          if (d.st.vm == 0.0) return;
          const double coeff = d.weight * d.gram.sqrt_g * life_density_derivative(d.chain, mat) *
                               mat.amplitude_factor;
          if (coeff == 0.0) return;
          const SmallMat Mvm = vm_strain_derivative(d.st, mat, dim);
          for (int j = 0; j < mesh.nodes_per_element(); ++j) {
            const int n = mesh.elements(face.element, j);
            const SmallVec dvm = Mvm * d.phys_grads.row(j).transpose();
            for (int c = 0; c < dim; ++c) acc(n * dim + c) += coeff * dvm(c);
          }
        });
    partials[chunk] = std::move(acc);
  });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.n_dof());
  for (const auto& p : partials) out += p;
  return out;
}

// Adjoint solve B^T Lambda = dJ/dU on the constrained system; the right
// hand side is reduced consistently (Dirichlet rows dropped, cyclic slave
// entries rotated and folded onto masters by T^T), and the solution is
// expanded back so Dirichlet adjoint entries are zero.
inline Eigen::VectorXd solve_adjoint(const LinearSystem& system, const Eigen::VectorXd& dj_du) {
  return system.expand(system.solve_transpose_reduced(system.reduce(dj_du)));
}

// ---------------------------------------------------------------------------
// dJ/dX at frozen U: differentiates the Gram factor and the stress through
// the isoparametric strain-displacement operator.
//
//   d(grad theta_j)/dX_{i,c} = -(grad theta_j)_c * grad theta_i
//   => d(vm)/dX_{i,c}        = -(grad_u^T Mvm grad theta_i)_c
// ---------------------------------------------------------------------------

inline SensitivityField dJ_dX_partial(const Mesh& mesh, const MaterialModel& mat,
                                      const Eigen::VectorXd& U, const QuadratureRule& face_rule,
                                      int threads = 1) {
  const int dim = mesh.dim;
  const std::size_t n_faces = mesh.surface_faces.size();
  std::vector<Eigen::MatrixXd> partials(chunk_ranges(n_faces, threads).size());
  parallel_chunks(n_faces, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(mesh.n_nodes(), dim);
    for_each_surface_point(
        mesh, mat, U, face_rule, begin, end, [&](const SurfacePointData& d, const FaceRef& face) {
          const double density = life_density(d.chain, mat);
          // Gram-factor term (face nodes only)
          if (density != 0.0) {
            const auto face_locals = face_local_nodes(mesh.kind, face.face);
            const auto dg =
                face_gram_gradient(mesh, face, face_rule.point(d.point_index), face_locals);
            for (std::size_t r = 0; r < face_locals.size(); ++r) {
              const int n = mesh.elements(face.element, face_locals[r]);
              for (int c = 0; c < dim; ++c)
                acc(n, c) += d.weight * density * dg(static_cast<int>(r), c);
            }
          }
          // stress term (all element nodes), at frozen U
          if (d.st.vm != 0.0) {
            const double coeff = d.weight * d.gram.sqrt_g *
                                 life_density_derivative(d.chain, mat) * mat.amplitude_factor;
            if (coeff != 0.0) {
              const SmallMat Mvm = vm_strain_derivative(d.st, mat, dim);
              const SmallMat GtM = d.st.grad_u.transpose() * Mvm;  // dim x dim
              for (int i = 0; i < mesh.nodes_per_element(); ++i) {
                const int n = mesh.elements(face.element, i);
                const SmallVec dvm = -(GtM * d.phys_grads.row(i).transpose());
                for (int c = 0; c < dim; ++c) acc(n, c) += coeff * dvm(c);
              }
            }
          }
        });
    partials[chunk] = std::move(acc);
  });
  SensitivityField out = SensitivityField::zero(mesh);
  for (const auto& p : partials) out.values += p;
  return out;
}

// ---------------------------------------------------------------------------
// Lambda^T (dB/dX) U, element-local. The stiffness integrand contracted
// with local lambda and u collapses to
//
//   phi = lam tr(a) tr(b) + mu (a:b + a:b^T),  a = grad u_h, b = grad l_h
//
// and its node-coordinate derivative (with d detJ and d grad theta) to
//
//   d/dX_i = w detJ (phi I - W) grad theta_i,
//   W = lam (tr b a^T + tr a b^T) + mu (a^T b + b^T a + a^T b^T + b^T a^T),
//
// so the q^3 dim^3 per-element tensor is never materialized.
// ---------------------------------------------------------------------------

// Per-element scratch footprint in doubles (for the memory-bound check).
inline std::size_t contraction_scratch_doubles(ElementKind kind) {
  const int q = element_nodes(kind);
  const int dim = element_dim(kind);
  // ref grads + phys grads + a, b, W + element coords
  return static_cast<std::size_t>(2 * q * dim + 3 * dim * dim + q * dim);
}

inline SensitivityField dBU_contract(const Mesh& mesh, const MaterialModel& mat,
                                     const Eigen::VectorXd& lambda, const Eigen::VectorXd& U,
                                     const QuadratureRule& volume_rule, int threads = 1) {
  const int dim = mesh.dim;
  const int q = mesh.nodes_per_element();
  const double lam = mat.lambda_eff(dim), mu = mat.mu();
  const std::size_t M = mesh.n_elements();

  std::vector<Eigen::MatrixXd> partials(chunk_ranges(M, threads).size());
  parallel_chunks(M, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(mesh.n_nodes(), dim);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
    ShapeVals vals;
    ShapeGrads ref_grads;
    for (std::size_t k = begin; k < end; ++k) {
      const int elem = static_cast<int>(k);
      element_coords(mesh, elem, X);
      for (int p = 0; p < volume_rule.size(); ++p) {
        shape_functions(mesh.kind, volume_rule.point(p), vals, ref_grads);
        const JacobianEval jac = jacobian_at(X, ref_grads, elem);
        const ShapeGrads G = ref_grads * jac.Jinv;
        const SmallMat a = displacement_gradient(mesh, U, elem, G);
        const SmallMat b = displacement_gradient(mesh, lambda, elem, G);
        const double phi =
            lam * a.trace() * b.trace() + mu * ((a.array() * b.array()).sum() +
                                                (a.array() * b.transpose().array()).sum());
        const SmallMat W = lam * (b.trace() * a.transpose() + a.trace() * b.transpose()) +
                           mu * (a.transpose() * b + b.transpose() * a + a.transpose() * b.transpose() +
                                 b.transpose() * a.transpose());
        const double w = volume_rule.weights[p] * jac.det;
        for (int i = 0; i < q; ++i) {
          const int n = mesh.elements(elem, i);
          const SmallVec gi = G.row(i).transpose();
          const SmallVec contrib = w * (phi * gi - W * gi);
          for (int c = 0; c < dim; ++c) acc(n, c) += contrib(c);
        }
      }
    }
    partials[chunk] = std::move(acc);
  });
  SensitivityField out = SensitivityField::zero(mesh);
  for (const auto& p : partials) out.values += p;
  return out;
}

// ---------------------------------------------------------------------------
// Lambda^T dF/dX. Traction faces differentiate the Gram factor; in
// fixed-total-force mode the density is readjusted so the resultant stays
// constant, which subtracts the area-change term. The centrifugal part
// differentiates detJ and the force evaluated at the moving volume
// quadrature points.
// ---------------------------------------------------------------------------

inline SensitivityField dF_dX_contract(const Mesh& mesh, const MaterialModel& mat,
                                       const LoadCase& load, const Eigen::VectorXd& lambda,
                                       const QuadratureRule& volume_rule,
                                       const QuadratureRule& face_rule, int threads = 1) {
  const int dim = mesh.dim;
  const int q = mesh.nodes_per_element();
  SensitivityField out = SensitivityField::zero(mesh);
  ShapeVals vals;
  ShapeGrads grads;

  for (const auto& t : load.tractions) {
    const auto face_locals = face_local_nodes(mesh.kind, t.face.face);
    Eigen::VectorXd g = t.g.head(dim);
    double area = 0, lambda_force = 0;  // A(X) and lambda^T F_face
    if (t.mode == TractionMode::fixed_total_force) {
      if (t.ref_area <= 0)
        throw ConfigError("fixed-total-force traction has no bound reference area");
      for (int p = 0; p < face_rule.size(); ++p)
        area += face_rule.weights[p] * face_gram(mesh, t.face, face_rule.point(p));
      g *= t.ref_area / area;
    }
    Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(static_cast<int>(face_locals.size()), dim);
    for (int p = 0; p < face_rule.size(); ++p) {
      FaceGramEval ev;
      const auto dg = face_gram_gradient(mesh, t.face, face_rule.point(p), face_locals, &ev);
      double xi[3] = {0, 0, 0};
      face_to_reference(mesh.kind, t.face.face, face_rule.point(p), xi);
      shape_functions(mesh.kind, xi, vals, grads);
      double gl = 0;  // g . lambda_h at the point
      for (int j = 0; j < q; ++j) {
        const int n = mesh.elements(t.face.element, j);
        for (int d = 0; d < dim; ++d) gl += g(d) * lambda(n * dim + d) * vals(j);
      }
      lambda_force += face_rule.weights[p] * gl * ev.sqrt_g;
      for (std::size_t r = 0; r < face_locals.size(); ++r) {
        const int n = mesh.elements(t.face.element, face_locals[r]);
        for (int c = 0; c < dim; ++c) {
          out.values(n, c) += face_rule.weights[p] * gl * dg(static_cast<int>(r), c);
          dA(static_cast<int>(r), c) += face_rule.weights[p] * dg(static_cast<int>(r), c);
        }
      }
    }
    if (t.mode == TractionMode::fixed_total_force) {
      // d(g_eff)/dX = -g_eff dA/A; subtracts the area-growth gain
      for (std::size_t r = 0; r < face_locals.size(); ++r) {
        const int n = mesh.elements(t.face.element, face_locals[r]);
        for (int c = 0; c < dim; ++c)
          out.values(n, c) -= lambda_force * dA(static_cast<int>(r), c) / area;
      }
    }
  }

  if (load.omega > 0) {
    const SmallMat dfdx = centrifugal_force_jacobian(mat, load, dim);
    const std::size_t M = mesh.n_elements();
    std::vector<Eigen::MatrixXd> partials(chunk_ranges(M, threads).size());
    parallel_chunks(M, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(mesh.n_nodes(), dim);
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
      ShapeVals v;
      ShapeGrads gr;
      for (std::size_t k = begin; k < end; ++k) {
        const int elem = static_cast<int>(k);
        element_coords(mesh, elem, X);
        for (int p = 0; p < volume_rule.size(); ++p) {
          shape_functions(mesh.kind, volume_rule.point(p), v, gr);
          const JacobianEval jac = jacobian_at(X, gr, elem);
          const ShapeGrads G = gr * jac.Jinv;
          SmallVec x = X.transpose() * v;
          const SmallVec f = centrifugal_force(mat, load, x, dim);
          SmallVec lh = SmallVec::Zero(dim);
          for (int j = 0; j < q; ++j) {
            const int n = mesh.elements(elem, j);
            for (int d = 0; d < dim; ++d) lh(d) += lambda(n * dim + d) * v(j);
          }
          const double fl = f.dot(lh);
          const SmallVec Pl = dfdx * lh;
          const double w = volume_rule.weights[p];
          for (int i = 0; i < q; ++i) {
            const int n = mesh.elements(elem, i);
            for (int c = 0; c < dim; ++c)
              acc(n, c) += w * jac.det * (fl * G(i, c) + v(i) * Pl(c));
          }
        }
      }
      partials[chunk] = std::move(acc);
    });
    for (const auto& p : partials) out.values += p;
  }
  return out;
}

// dJ/dX = partial - Lambda^T (dB/dX U - dF/dX)
inline SensitivityField total_sensitivity(const SensitivityField& dj_dx_partial,
                                          const SensitivityField& dbu_contraction,
                                          const SensitivityField& df_contraction) {
  if (dj_dx_partial.values.rows() != dbu_contraction.values.rows() ||
      dj_dx_partial.values.rows() != df_contraction.values.rows())
    throw Error("total_sensitivity: mismatched field shapes");
  return {dj_dx_partial.values - dbu_contraction.values + df_contraction.values};
}

// ---------------------------------------------------------------------------
// Cyclic fold: slave sensitivities are rotated back by R(-phi) and
// accumulated onto their masters; slave entries then mirror the folded
// master value under R(phi). Sensitivities carried only by flank faces are
// design artifacts ("virtual surfaces") and can be zeroed.
// ---------------------------------------------------------------------------

inline SensitivityField cyclic_fold(const SensitivityField& field, const Mesh& mesh,
                                    bool zero_flank_artifacts = true) {
  if (!mesh.cyclic) return field;
  SensitivityField out = field;
  const Eigen::MatrixXd R = mesh.sector_rotation();
  const auto& cyc = *mesh.cyclic;
  for (std::size_t i = 0; i < cyc.master_nodes.size(); ++i) {
    const int m = cyc.master_nodes[i], s = cyc.slave_nodes[i];
    out.values.row(m) += (R.transpose() * out.values.row(s).transpose()).transpose();
    out.values.row(s) = (R * out.values.row(m).transpose()).transpose();
  }
  if (zero_flank_artifacts) {
    const auto mask = mesh.flank_only_node_mask();
    for (int n = 0; n < mesh.n_nodes(); ++n)
      if (mask[n]) out.values.row(n).setZero();
  }
  return out;
}

// dPoF/dX = n^m exp(-n^m J) dJ/dX -- a global positive factor.
inline double pof_sensitivity_factor(double J, double cycles_n, const MaterialModel& mat) {
  const double nm = std::pow(cycles_n, mat.m);
  return nm * std::exp(-nm * J);
}

inline SensitivityField pof_sensitivity(double J, const SensitivityField& dj_dx, double cycles_n,
                                        const MaterialModel& mat) {
  return {pof_sensitivity_factor(J, cycles_n, mat) * dj_dx.values};
}

}  // namespace lcfgrad
