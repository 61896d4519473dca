#pragma once

#include <chrono>
#include <memory>

#include "lcfgrad/adjoint.hpp"
#include "lcfgrad/config.hpp"
#include "lcfgrad/elasticity.hpp"
#include "lcfgrad/objective.hpp"

namespace lcfgrad {

// A solvable problem: geometry plus everything that stays fixed when the
// node coordinates move (material, loads with bound reference data,
// numerics). Copy + with_mesh is how perturbed/optimized geometries run.
struct Model {
  Mesh mesh;
  MaterialModel material;
  LoadCase load;
  NumericsConfig numerics;

  Model with_mesh(Mesh m) const {
    Model out = *this;
    out.mesh = std::move(m);
    return out;
  }
  Model with_nodes(const Eigen::MatrixXd& X) const { return with_mesh(mesh.with_nodes(X)); }

  QuadratureRule volume_rule() const { return tensor_gauss(mesh.dim, numerics.volume_order); }
  QuadratureRule face_rule() const { return tensor_gauss(mesh.dim - 1, numerics.face_order); }
};

inline Model make_model(Mesh mesh, const RunSetup& setup) {
  Model m{std::move(mesh), setup.material, setup.load, setup.numerics};
  m.load.bind_reference(m.mesh, m.numerics.face_order);
  return m;
}

struct StateResult {
  std::unique_ptr<LinearSystem> system;
  Eigen::VectorXd U;
};

inline StateResult solve_model(const Model& model) {
  const QuadratureRule vrule = model.volume_rule();
  const QuadratureRule frule = model.face_rule();
  const SparseMat B = assemble_stiffness(model.mesh, model.material, vrule,
                                         model.numerics.threads);
  const Eigen::VectorXd F = assemble_loads(model.mesh, model.material, model.load, vrule, frule);
  StateResult out;
  out.system = std::make_unique<LinearSystem>(B, F, model.mesh, model.numerics.solver_tol);
  out.U = solve_state(*out.system);
  return out;
}

// Objective value for the model (state solve + surface functional).
inline double evaluate_J(const Model& model) {
  const StateResult state = solve_model(model);
  return objective_J(model.mesh, model.material, state.U, model.face_rule()).J;
}

// The four pipeline stages, reported like the prototype's runtime table.
struct StageTimes {
  double state = 0;        // "State U"
  double dj = 0;           // "dJ/dU, dJ/dX"
  double adjoint = 0;      // "Adjoint state"
  double contractions = 0; // "dB/dX, dF/dX contractions"
};

struct GradientResult {
  Eigen::VectorXd U;
  Objective objective;
  double pof = 0;
  Eigen::VectorXd dj_du;
  Eigen::VectorXd lambda;
  SensitivityField dj_dx_partial;
  SensitivityField dbu;
  SensitivityField df;
  SensitivityField total;          // after cyclic fold
  SensitivityField total_unfolded; // raw nodewise sum
  SensitivityField pof_grad;
  StageTimes times;
};

// Full adjoint pipeline: state -> dJ/dU -> adjoint -> partials -> total.
inline GradientResult compute_gradient(const Model& model, bool zero_flank_artifacts = true) {
  using clock = std::chrono::steady_clock;
  const auto tick = [] { return clock::now(); };
  const auto secs = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  const QuadratureRule vrule = model.volume_rule();
  const QuadratureRule frule = model.face_rule();
  const int threads = model.numerics.threads;

  GradientResult r;

  auto t0 = tick();
  StateResult state = solve_model(model);
  r.U = state.U;
  auto t1 = tick();
  r.times.state = secs(t0, t1);

  r.objective = objective_J(model.mesh, model.material, r.U, frule);
  r.pof = pof(r.objective.J, model.load.cycles_n, model.material);
  r.dj_du = dJ_dU(model.mesh, model.material, r.U, frule, threads);
  r.dj_dx_partial = dJ_dX_partial(model.mesh, model.material, r.U, frule, threads);
  auto t2 = tick();
  r.times.dj = secs(t1, t2);

  r.lambda = solve_adjoint(*state.system, r.dj_du);
  auto t3 = tick();
  r.times.adjoint = secs(t2, t3);

  r.dbu = dBU_contract(model.mesh, model.material, r.lambda, r.U, vrule, threads);
  r.df = dF_dX_contract(model.mesh, model.material, model.load, r.lambda, vrule, frule, threads);
  auto t4 = tick();
  r.times.contractions = secs(t3, t4);

  r.total_unfolded = total_sensitivity(r.dj_dx_partial, r.dbu, r.df);
  r.total = cyclic_fold(r.total_unfolded, model.mesh, zero_flank_artifacts);
  r.pof_grad = pof_sensitivity(r.objective.J, r.total, model.load.cycles_n, model.material);
  return r;
}

}  // namespace lcfgrad
