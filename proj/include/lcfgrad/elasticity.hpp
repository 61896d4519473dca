#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <vector>

#include "lcfgrad/material.hpp"
#include "lcfgrad/mesh.hpp"
#include "lcfgrad/parallel.hpp"
#include "lcfgrad/quadrature.hpp"

namespace lcfgrad {

using SparseMat = Eigen::SparseMatrix<double>;

// ---------------------------------------------------------------------------
// Stiffness assembly:  B(u;v) = int sigma(u):eps(v) dx, element-local then
// scattered through the connectivity. Local dof order is node-major
// (node j, component r) -> j*dim + r.
// ---------------------------------------------------------------------------

inline void element_stiffness(const Mesh& mesh, const MaterialModel& mat, int elem,
                              const QuadratureRule& rule, Eigen::MatrixXd& Ke) {
  const int dim = mesh.dim;
  const int q = mesh.nodes_per_element();
  const double lam = mat.lambda_eff(dim), mu = mat.mu();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
  element_coords(mesh, elem, X);
  Ke.setZero(q * dim, q * dim);
  ShapeVals vals;
  ShapeGrads ref_grads;
  for (int p = 0; p < rule.size(); ++p) {
    shape_functions(mesh.kind, rule.point(p), vals, ref_grads);
    const JacobianEval jac = jacobian_at(X, ref_grads, elem);
    const ShapeGrads G = ref_grads * jac.Jinv;  // physical gradients, q x dim
    const double w = rule.weights[p] * jac.det;
    for (int j = 0; j < q; ++j)
      for (int i = 0; i < q; ++i) {
        const double gdot = G.row(j).dot(G.row(i));
        for (int r = 0; r < dim; ++r)
          for (int s = 0; s < dim; ++s) {
            double v = lam * G(j, r) * G(i, s) + mu * G(j, s) * G(i, r);
            if (r == s) v += mu * gdot;
            Ke(j * dim + r, i * dim + s) += w * v;
          }
      }
  }
}

inline SparseMat assemble_stiffness(const Mesh& mesh, const MaterialModel& mat,
                                    const QuadratureRule& rule, int threads = 1) {
  const int dim = mesh.dim;
  const int q = mesh.nodes_per_element();
  const std::size_t M = mesh.n_elements();

  std::vector<std::vector<Eigen::Triplet<double>>> buffers(chunk_ranges(M, threads).size());
  parallel_chunks(M, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    auto& trip = buffers[chunk];
    trip.reserve((end - begin) * q * dim * q * dim);
    Eigen::MatrixXd Ke;
    for (std::size_t k = begin; k < end; ++k) {
      element_stiffness(mesh, mat, static_cast<int>(k), rule, Ke);
      for (int j = 0; j < q; ++j)
        for (int i = 0; i < q; ++i) {
          const int gj = mesh.elements(static_cast<int>(k), j) * dim;
          const int gi = mesh.elements(static_cast<int>(k), i) * dim;
          for (int r = 0; r < dim; ++r)
            for (int s = 0; s < dim; ++s)
              trip.emplace_back(gj + r, gi + s, Ke(j * dim + r, i * dim + s));
        }
    }
  });

  std::vector<Eigen::Triplet<double>> all;
  std::size_t total = 0;
  for (const auto& b : buffers) total += b.size();
  all.reserve(total);
  for (const auto& b : buffers) all.insert(all.end(), b.begin(), b.end());

  SparseMat B(mesh.n_dof(), mesh.n_dof());
  B.setFromTriplets(all.begin(), all.end());
  return B;
}

// ---------------------------------------------------------------------------
// Load assembly:  F(v) = int f . v dx + int g . v da
// ---------------------------------------------------------------------------

inline Eigen::VectorXd assemble_loads(const Mesh& mesh, const MaterialModel& mat,
                                      const LoadCase& load, const QuadratureRule& volume_rule,
                                      const QuadratureRule& face_rule) {
  const int dim = mesh.dim;
  const int q = mesh.nodes_per_element();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(mesh.n_dof());
  ShapeVals vals;
  ShapeGrads grads;

  for (const auto& t : load.tractions) {
    Eigen::VectorXd g = t.g.head(dim);
    if (t.mode == TractionMode::fixed_total_force) {
      if (t.ref_area <= 0)
        throw ConfigError("fixed-total-force traction has no bound reference area");
      double area = 0;
      for (int p = 0; p < face_rule.size(); ++p)
        area += face_rule.weights[p] * face_gram(mesh, t.face, face_rule.point(p));
      g *= t.ref_area / area;  // P = g_ref * A_ref stays constant
    }
    for (int p = 0; p < face_rule.size(); ++p) {
      const FaceGramEval ev = face_gram_at(mesh, t.face, face_rule.point(p), vals, grads);
      const double w = face_rule.weights[p] * ev.sqrt_g;
      for (int j = 0; j < q; ++j) {
        const int n = mesh.elements(t.face.element, j);
        for (int d = 0; d < dim; ++d) F(n * dim + d) += w * g(d) * vals(j);
      }
    }
  }

  if (load.omega > 0) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
    for (int k = 0; k < mesh.n_elements(); ++k) {
      element_coords(mesh, k, X);
      for (int p = 0; p < volume_rule.size(); ++p) {
        shape_functions(mesh.kind, volume_rule.point(p), vals, grads);
        const JacobianEval jac = jacobian_at(X, grads, k);
        SmallVec x = X.transpose() * vals;  // mapped quadrature point
        const SmallVec f = centrifugal_force(mat, load, x, dim);
        const double w = volume_rule.weights[p] * jac.det;
        for (int j = 0; j < q; ++j) {
          const int n = mesh.elements(k, j);
          for (int d = 0; d < dim; ++d) F(n * dim + d) += w * f(d) * vals(j);
        }
      }
    }
  }
  return F;
}

// ---------------------------------------------------------------------------
// Constraints: homogeneous Dirichlet elimination plus cyclic slave folding
// u_slave = R(phi) u_master, both expressed through the sparse basis T of
// the constrained subspace: U_full = T * U_reduced. The reduced operator
// T^T B T is what state and adjoint share.
// ---------------------------------------------------------------------------

class LinearSystem {
 public:
  LinearSystem(const SparseMat& B, const Eigen::VectorXd& F, const Mesh& mesh,
               double solver_tol = 1e-10)
      : solver_tol_(solver_tol) {
    build_basis(mesh);
    B_red_ = T_.transpose() * B * T_;
    rhs_ = T_.transpose() * F;
    factorize();
  }

  int n_full() const { return static_cast<int>(T_.rows()); }
  int n_free() const { return static_cast<int>(T_.cols()); }
  const SparseMat& reduced_matrix() const { return B_red_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }
  const SparseMat& basis() const { return T_; }

  Eigen::VectorXd reduce(const Eigen::VectorXd& full) const { return T_.transpose() * full; }
  Eigen::VectorXd expand(const Eigen::VectorXd& red) const { return T_ * red; }

  // Solve B_red x = rhs_red with one step of iterative refinement.
  Eigen::VectorXd solve_reduced(const Eigen::VectorXd& rhs_red) const {
    if (rhs_red.size() == 0) return rhs_red;
    const double rhs_norm = rhs_red.norm();
    if (rhs_norm == 0.0) return Eigen::VectorXd::Zero(rhs_red.size());
    Eigen::VectorXd x = fact_->solve(rhs_red);
    Eigen::VectorXd r = rhs_red - B_red_ * x;
    if (r.norm() > solver_tol_ * rhs_norm) x += fact_->solve(r);
    r = rhs_red - B_red_ * x;
    if (!(r.norm() <= solver_tol_ * rhs_norm))
      throw NumericError("linear solve residual " + std::to_string(r.norm() / rhs_norm) +
                         " exceeds tolerance");
    return x;
  }

  // The adjoint contract is B^T Lambda = dJ/dU; B is symmetric here, so the
  // same factorization serves, but the entry point stays explicit.
  Eigen::VectorXd solve_transpose_reduced(const Eigen::VectorXd& rhs_red) const {
    return solve_reduced(rhs_red);
  }

  double last_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& rhs_red) const {
    const double n = rhs_red.norm();
    return n == 0 ? 0.0 : (rhs_red - B_red_ * x).norm() / n;
  }

 private:
  void build_basis(const Mesh& mesh) {
    const int dim = mesh.dim;
    const int n = mesh.n_dof();
    const auto dir = mesh.dirichlet_mask();

    std::vector<int> slave_of(mesh.n_nodes(), -1);  // slave node -> pair index
    Eigen::MatrixXd R;
    if (mesh.cyclic) {
      R = mesh.sector_rotation();
      for (std::size_t i = 0; i < mesh.cyclic->slave_nodes.size(); ++i)
        slave_of[mesh.cyclic->slave_nodes[i]] = static_cast<int>(i);
    }

    std::vector<int> free_index(n, -1);
    int n_free = 0;
    for (int node = 0; node < mesh.n_nodes(); ++node)
      for (int d = 0; d < dim; ++d) {
        const int dof = node * dim + d;
        if (dir[dof] || slave_of[node] >= 0) continue;
        free_index[dof] = n_free++;
      }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n + (mesh.cyclic ? mesh.cyclic->slave_nodes.size() * dim * dim : 0));
    for (int node = 0; node < mesh.n_nodes(); ++node)
      for (int d = 0; d < dim; ++d) {
        const int dof = node * dim + d;
        if (dir[dof]) continue;
        if (slave_of[node] >= 0) {
          const int master = mesh.cyclic->master_nodes[slave_of[node]];
          for (int c = 0; c < dim; ++c) {
            const int mdof = master * dim + c;
            if (free_index[mdof] >= 0 && R(d, c) != 0.0)
              trip.emplace_back(dof, free_index[mdof], R(d, c));
          }
        } else {
          trip.emplace_back(dof, free_index[dof], 1.0);
        }
      }
    T_.resize(n, n_free);
    T_.setFromTriplets(trip.begin(), trip.end());
  }

  void factorize() {
    fact_ = std::make_unique<Eigen::SimplicialLDLT<SparseMat>>();
    fact_->compute(B_red_);
    if (fact_->info() != Eigen::Success)
      throw SingularSystemError("Cholesky factorization failed (system singular or indefinite)");
    const Eigen::VectorXd d = fact_->vectorD();
    if (d.size() == 0) throw SingularSystemError("empty system (all degrees of freedom constrained)");
    const double dmax = d.cwiseAbs().maxCoeff();
    if (!d.allFinite() || d.minCoeff() <= 0.0 || d.minCoeff() < 1e-14 * dmax)
      throw SingularSystemError(
          "reduced stiffness is not positive definite (rigid-body modes remain?)");
  }

  SparseMat T_;
  SparseMat B_red_;
  Eigen::VectorXd rhs_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMat>> fact_;
  double solver_tol_;
};

inline LinearSystem apply_constraints(const SparseMat& B, const Eigen::VectorXd& F,
                                      const Mesh& mesh, double solver_tol = 1e-10) {
  return LinearSystem(B, F, mesh, solver_tol);
}

// State solve, expanded back to all global dof (Dirichlet zeros, slaves
// rotated from masters).
inline Eigen::VectorXd solve_state(const LinearSystem& system) {
  return system.expand(system.solve_reduced(system.rhs()));
}

// ---------------------------------------------------------------------------
// Stress evaluation
// ---------------------------------------------------------------------------

struct PointStress {
  SmallMat grad_u;    // dim x dim, (grad u)_ab = du_a/dx_b
  SmallMat sigma;     // dim x dim (2D: plane stress, sigma_33 = 0)
  SmallMat deviator;  // in-plane block of the 3D deviator
  double trace = 0;   // tr sigma over the stored block
  double vm = 0;      // von Mises equivalent stress
};

inline PointStress stress_from_grad_u(const SmallMat& grad_u, const MaterialModel& mat, int dim) {
  PointStress out;
  out.grad_u = grad_u;
  const SmallMat eps = 0.5 * (grad_u + grad_u.transpose());
  const double lam = mat.lambda_eff(dim), mu = mat.mu();
  out.sigma = lam * eps.trace() * SmallMat::Identity(dim, dim) + 2.0 * mu * eps;
  out.trace = out.sigma.trace();
  const double mean = out.trace / 3.0;  // 3D mean also in plane stress (sigma_33 = 0)
  out.deviator = out.sigma - mean * SmallMat::Identity(dim, dim);
  double ss = out.deviator.squaredNorm();
  if (dim == 2) ss += mean * mean;  // s_33 = -mean
  out.vm = std::sqrt(1.5 * ss);
  return out;
}

// d(vm)/d(eps) as a dim x dim matrix; contributions at vm = 0 are defined
// as zero by the caller (the fatigue density vanishes faster there).
inline SmallMat vm_strain_derivative(const PointStress& st, const MaterialModel& mat, int dim) {
  const double mu = mat.mu();
  if (dim == 3) return (3.0 * mu / st.vm) * st.deviator;
  const double lam2 = mat.lambda_eff(2);
  const double tr_s = st.trace / 3.0;  // trace of the in-plane deviator block
  return (1.5 / st.vm) *
         (lam2 * tr_s * SmallMat::Identity(2, 2) + 2.0 * mu * st.deviator).eval();
}

inline SmallMat displacement_gradient(const Mesh& mesh, const Eigen::VectorXd& U, int elem,
                                      const ShapeGrads& phys_grads) {
  const int dim = mesh.dim;
  SmallMat g = SmallMat::Zero(dim, dim);
  for (int j = 0; j < mesh.nodes_per_element(); ++j) {
    const int n = mesh.elements(elem, j);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) g(a, b) += U(n * dim + a) * phys_grads(j, b);
  }
  return g;
}

inline PointStress stress(const Mesh& mesh, const MaterialModel& mat, const Eigen::VectorXd& U,
                          int elem, const double* xi) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
  element_coords(mesh, elem, X);
  ShapeVals vals;
  ShapeGrads grads;
  shape_functions(mesh.kind, xi, vals, grads);
  const JacobianEval jac = jacobian_at(X, grads, elem);
  const ShapeGrads G = grads * jac.Jinv;
  return stress_from_grad_u(displacement_gradient(mesh, U, elem, G), mat, mesh.dim);
}

}  // namespace lcfgrad
