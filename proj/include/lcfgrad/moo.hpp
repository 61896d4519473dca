#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

#include "lcfgrad/adjoint.hpp"
#include "lcfgrad/pipeline.hpp"

namespace lcfgrad {

// ---------------------------------------------------------------------------
// Volume objective: V = sum_k int detJ dxi with analytic node gradient
// d detJ / dX_{i,c} = detJ (grad theta_i)_c.
// ---------------------------------------------------------------------------

struct VolumeResult {
  double volume = 0;
  SensitivityField gradient;
};

inline VolumeResult volume_with_gradient(const Mesh& mesh, const QuadratureRule& volume_rule) {
  VolumeResult out;
  out.gradient = SensitivityField::zero(mesh);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 20, 3> X;
  ShapeVals vals;
  ShapeGrads grads;
  for (int k = 0; k < mesh.n_elements(); ++k) {
    element_coords(mesh, k, X);
    for (int p = 0; p < volume_rule.size(); ++p) {
      shape_functions(mesh.kind, volume_rule.point(p), vals, grads);
      const JacobianEval jac = jacobian_at(X, grads, k);
      const double w = volume_rule.weights[p];
      out.volume += w * jac.det;
      const ShapeGrads G = grads * jac.Jinv;
      for (int i = 0; i < mesh.nodes_per_element(); ++i) {
        const int n = mesh.elements(k, i);
        for (int c = 0; c < mesh.dim; ++c) out.gradient.values(n, c) += w * jac.det * G(i, c);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multi-objective steepest descent (Fliege-Svaiter): the joint direction is
// d = -w with w the minimal-norm point of the convex hull of the gradients,
// and theta = max_i <g_i, d> + 1/2 |d|^2 <= 0 vanishes exactly at Pareto
// criticality.
// ---------------------------------------------------------------------------

struct DescentDirection {
  SensitivityField d;
  double theta = 0;
  std::vector<double> alpha;  // hull coefficients
};

inline DescentDirection descent_direction(const std::vector<SensitivityField>& gradients) {
  if (gradients.empty()) throw ConfigError("descent_direction: no gradients given");
  const auto rows = gradients[0].values.rows();
  const auto cols = gradients[0].values.cols();
  for (const auto& g : gradients)
    if (g.values.rows() != rows || g.values.cols() != cols)
      throw Error("descent_direction: mismatched gradient shapes");

  const std::size_t K = gradients.size();
  std::vector<double> alpha(K, 0.0);
  if (K == 1) {
    alpha[0] = 1.0;
  } else if (K == 2) {
    // minimize |a g1 + (1-a) g2|^2 over a in [0,1]: closed form projection
    const Eigen::MatrixXd diff = gradients[0].values - gradients[1].values;
    const double denom = diff.squaredNorm();
    double a = 0.0;
    if (denom > 0) a = -(gradients[1].values.array() * diff.array()).sum() / denom;
    alpha[0] = std::clamp(a, 0.0, 1.0);
    alpha[1] = 1.0 - alpha[0];
  } else {
    // general K: projected-gradient iterations on the simplex
    std::fill(alpha.begin(), alpha.end(), 1.0 / static_cast<double>(K));
    Eigen::MatrixXd gram(K, K);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j)
        gram(i, j) = (gradients[i].values.array() * gradients[j].values.array()).sum();
    const double lips = std::max(1e-300, 2.0 * gram.norm());
    Eigen::VectorXd a = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
    for (int it = 0; it < 5000; ++it) {
      Eigen::VectorXd grad = 2.0 * gram * a;
      Eigen::VectorXd trial = a - grad / lips;
      // project onto the simplex
      Eigen::VectorXd sorted = trial;
      std::sort(sorted.data(), sorted.data() + K, std::greater<double>());
      double cssum = 0, tau = 0;
      int rho = 0;
      for (int i = 0; i < static_cast<int>(K); ++i) {
        cssum += sorted(i);
        const double t = (cssum - 1.0) / (i + 1);
        if (sorted(i) - t > 0) {
          rho = i + 1;
          tau = t;
        }
      }
      cssum = 0;
      (void)rho;
      Eigen::VectorXd next = (trial.array() - tau).max(0.0);
      if ((next - a).norm() < 1e-14) {
        a = next;
        break;
      }
      a = next;
    }
    for (std::size_t i = 0; i < K; ++i) alpha[i] = a(static_cast<int>(i));
  }

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(rows, cols);
  for (std::size_t i = 0; i < K; ++i) w += alpha[i] * gradients[i].values;

  DescentDirection out;
  out.d = {-w};
  out.alpha = std::move(alpha);
  double max_gd = -std::numeric_limits<double>::infinity();
  for (const auto& g : gradients)
    max_gd = std::max(max_gd, -(g.values.array() * w.array()).sum());
  out.theta = max_gd + 0.5 * w.squaredNorm();
  return out;
}

// ---------------------------------------------------------------------------
// Design-variable masking and interior mesh motion.
// ---------------------------------------------------------------------------

// Free design nodes: surface nodes that are neither Dirichlet-clamped nor
// on cyclic flanks nor cyclically paired. A node with any clamped
// component is excluded entirely.
inline std::vector<char> design_node_mask(const Mesh& mesh) {
  std::vector<char> mask = mesh.surface_node_mask();
  for (auto [node, comp] : mesh.dirichlet) mask[node] = 0;
  if (mesh.cyclic) {
    for (const auto& f : mesh.cyclic->flank_faces)
      for (int n : mesh.nodes_of_face(f)) mask[n] = 0;
    for (int n : mesh.cyclic->master_nodes) mask[n] = 0;
    for (int n : mesh.cyclic->slave_nodes) mask[n] = 0;
  }
  return mask;
}

inline SensitivityField mask_to_design(const SensitivityField& field, const Mesh& mesh) {
  const auto mask = design_node_mask(mesh);
  SensitivityField out = field;
  for (int n = 0; n < mesh.n_nodes(); ++n)
    if (!mask[n]) out.values.row(n).setZero();
  return out;
}

// Spring relaxation of a boundary update: the prescribed displacement
// increment (nonzero on design nodes only) is propagated into the interior
// by Jacobi sweeps over the element edge graph, so the interior follows a
// boundary motion and the mesh does not tangle. The increment is zero at a
// zero step, so trial shapes depend continuously on the step length.
inline Eigen::MatrixXd propagate_update(const Mesh& mesh, const Eigen::MatrixXd& delta,
                                        int sweeps) {
  if (sweeps <= 0) return delta;
  std::vector<char> frozen = mesh.surface_node_mask();
  for (auto [node, comp] : mesh.dirichlet) frozen[node] = 1;
  if (mesh.cyclic) {
    for (int n : mesh.cyclic->master_nodes) frozen[n] = 1;
    for (int n : mesh.cyclic->slave_nodes) frozen[n] = 1;
    for (const auto& f : mesh.cyclic->flank_faces)
      for (int n : mesh.nodes_of_face(f)) frozen[n] = 1;
  }
  std::vector<std::vector<int>> nbrs(mesh.n_nodes());
  const auto edges = element_edges(mesh.kind);
  for (int k = 0; k < mesh.n_elements(); ++k)
    for (auto [i, j] : edges) {
      const int a = mesh.elements(k, i), b = mesh.elements(k, j);
      nbrs[a].push_back(b);
      nbrs[b].push_back(a);
    }
  Eigen::MatrixXd cur = delta;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    Eigen::MatrixXd next = cur;
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      if (frozen[n] || nbrs[n].empty()) continue;
      Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(mesh.dim);
      for (int b : nbrs[n]) avg += cur.row(b);
      next.row(n) = avg / static_cast<double>(nbrs[n].size());
    }
    cur = std::move(next);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Armijo step and Pareto sweep
// ---------------------------------------------------------------------------

struct ParetoPoint {
  int start_id = 0;
  double volume = 0;
  double pof = 0;
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd nodes;  // shape snapshot
};

// Objectives used by the descent: evaluations and gradients as functions
// of the mesh, everything else fixed by the model.
struct MooObjectives {
  // returns {pof, volume}
  std::function<std::array<double, 2>(const Model&)> evaluate;
  // returns {dPoF/dX, dV/dX}
  std::function<std::array<SensitivityField, 2>(const Model&)> gradients;
};

inline MooObjectives default_moo_objectives() {
  MooObjectives obj;
  obj.evaluate = [](const Model& m) -> std::array<double, 2> {
    const double J = evaluate_J(m);
    const double p = pof(J, m.load.cycles_n, m.material);
    const double V = volume_with_gradient(m.mesh, m.volume_rule()).volume;
    return {p, V};
  };
  obj.gradients = [](const Model& m) -> std::array<SensitivityField, 2> {
    const GradientResult g = compute_gradient(m);
    VolumeResult v = volume_with_gradient(m.mesh, m.volume_rule());
    return {g.pof_grad, std::move(v.gradient)};
  };
  return obj;
}

struct StepResult {
  bool accepted = false;
  double t = 0;
  Mesh mesh;
  std::array<double, 2> values{};  // unscaled (pof, volume) at the new shape
};

// Backtracking multi-objective Armijo step along d (already masked to the
// design dofs). `scaled` evaluates both objectives in the scaling used for
// the gradients. Steps that invert an element are rejected before any
// objective evaluation.
inline StepResult armijo_step(const Model& model, const SensitivityField& d, double theta,
                              const std::array<double, 2>& f0_scaled,
                              const std::function<std::array<double, 2>(const Model&)>& eval_scaled,
                              const MooConfig& cfg) {
  StepResult out;
  const double dnorm = d.norm();
  if (dnorm == 0) return out;
  (void)theta;  // theta - |d|^2/2 = -|d|^2 for the minimal-norm direction
  const double diameter = model.mesh.bbox_diagonal();
  const double t_min = cfg.t_min_factor * diameter;
  double t = cfg.t0_factor * diameter / dnorm;
  const double slope = -dnorm * dnorm;
  const bool cyclic = model.mesh.cyclic.has_value();
  Eigen::MatrixXd R;
  if (cyclic) R = model.mesh.sector_rotation();
  while (t >= t_min) {
    Eigen::MatrixXd X =
        model.mesh.nodes + propagate_update(model.mesh, (t * d.values).eval(),
                                            cfg.smoothing_sweeps);
    if (cyclic)
      for (std::size_t i = 0; i < model.mesh.cyclic->master_nodes.size(); ++i)
        X.row(model.mesh.cyclic->slave_nodes[i]) =
            (R * X.row(model.mesh.cyclic->master_nodes[i]).transpose()).transpose();
    Mesh trial = model.mesh.with_nodes(X);
    if (geometry_valid(trial)) {
      const Model trial_model = model.with_mesh(trial);
      const auto f = eval_scaled(trial_model);
      const bool ok = f[0] <= f0_scaled[0] + cfg.c1 * t * slope &&
                      f[1] <= f0_scaled[1] + cfg.c1 * t * slope;
      if (ok) {
        out.accepted = true;
        out.t = t;
        out.mesh = std::move(trial);
        out.values = f;
        return out;
      }
    }
    t *= cfg.beta;
  }
  return out;  // stagnation: treated as converged by the caller
}

struct DescentTrace {
  std::vector<std::array<double, 2>> values;  // unscaled (pof, volume) per iterate
  std::vector<double> thetas;
  std::vector<Eigen::MatrixXd> snapshots;  // only if cfg.snapshots
  ParetoPoint final_point;
};

inline DescentTrace descend(const Model& start, const MooObjectives& obj, const MooConfig& cfg,
                            int start_id = 0) {
  DescentTrace trace;
  Model model = start;
  const auto f_start = obj.evaluate(model);
  // relative-change scaling: each objective normalized by its start value
  std::array<double, 2> scale{1.0, 1.0};
  if (cfg.relative_scaling)
    for (int i = 0; i < 2; ++i) scale[i] = std::abs(f_start[i]) > 1e-300 ? std::abs(f_start[i]) : 1.0;

  auto eval_scaled = [&](const Model& m) -> std::array<double, 2> {
    const auto f = obj.evaluate(m);
    return {f[0] / scale[0], f[1] / scale[1]};
  };

  auto f = f_start;
  trace.values.push_back(f);
  if (cfg.snapshots) trace.snapshots.push_back(model.mesh.nodes);

  double theta_threshold = 0;  // set from the first direction
  int it = 0;
  bool converged = false;
  for (; it < cfg.max_iters; ++it) {
    auto grads = obj.gradients(model);
    std::vector<SensitivityField> scaled{{grads[0].values / scale[0]},
                                         {grads[1].values / scale[1]}};
    scaled[0] = mask_to_design(scaled[0], model.mesh);
    scaled[1] = mask_to_design(scaled[1], model.mesh);
    DescentDirection dir = descent_direction(scaled);
    trace.thetas.push_back(dir.theta);
    if (it == 0) theta_threshold = cfg.theta_tol * dir.d.values.squaredNorm();
    if (dir.theta >= -theta_threshold) {
      converged = true;
      break;
    }
    const std::array<double, 2> f_scaled{f[0] / scale[0], f[1] / scale[1]};
    StepResult step = armijo_step(model, dir.d, dir.theta, f_scaled, eval_scaled, cfg);
    if (!step.accepted) {
      converged = true;  // stagnation signal
      break;
    }
    model = model.with_mesh(step.mesh);
    f = {step.values[0] * scale[0], step.values[1] * scale[1]};
    trace.values.push_back(f);
    if (cfg.snapshots) trace.snapshots.push_back(model.mesh.nodes);
  }
  trace.final_point = {start_id, f[1], f[0], it, converged, model.mesh.nodes};
  return trace;
}

// Nondominated filtering (two objectives, minimization).
inline std::vector<ParetoPoint> filter_front(std::vector<ParetoPoint> points, double tol = 0.0) {
  std::vector<ParetoPoint> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      if (i == j) continue;
      const bool leq = points[j].volume <= points[i].volume + tol &&
                       points[j].pof <= points[i].pof + tol;
      const bool strict = points[j].volume < points[i].volume - tol ||
                          points[j].pof < points[i].pof - tol;
      if (leq && strict) dominated = true;
    }
    if (!dominated) kept.push_back(points[i]);
  }
  std::sort(kept.begin(), kept.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    return a.volume != b.volume ? a.volume < b.volume : a.pof < b.pof;
  });
  return kept;
}

// Runs descent from every start; per-start failures are recorded and the
// sweep continues. Returns the filtered, volume-sorted front.
struct SweepResult {
  std::vector<ParetoPoint> all_points;
  std::vector<ParetoPoint> front;
  std::vector<std::string> errors;
  std::vector<DescentTrace> traces;
};

inline SweepResult pareto_sweep(const std::vector<Model>& starts, const MooObjectives& obj,
                                const MooConfig& cfg) {
  SweepResult out;
  out.traces.resize(starts.size());
  for (std::size_t s = 0; s < starts.size(); ++s) {
    try {
      out.traces[s] = descend(starts[s], obj, cfg, static_cast<int>(s));
      out.all_points.push_back(out.traces[s].final_point);
    } catch (const Error& e) {
      out.errors.push_back("start " + std::to_string(s) + ": " + e.what());
    }
  }
  out.front = filter_front(out.all_points);
  return out;
}

}  // namespace lcfgrad
