#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "lcfgrad/adjoint.hpp"
#include "lcfgrad/pipeline.hpp"

namespace lcfgrad {

enum class FdScheme { one_sided, central };

inline std::string fd_scheme_name(FdScheme s) {
  return s == FdScheme::central ? "central" : "one-sided";
}

struct FDReport {
  int direction_id = 0;
  double step = 0;
  FdScheme scheme = FdScheme::central;
  double fd_value = 0;
  double adjoint_value = 0;
  double ratio = 0;  // fd / adjoint
};

// Random unit direction: i.i.d. standard normals per coordinate,
// Dirichlet-clamped coordinates zeroed, cyclic slave rows tied to their
// masters by the sector rotation so perturbed meshes stay admissible.
inline Eigen::MatrixXd sample_direction(const Mesh& mesh, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd d(mesh.n_nodes(), mesh.dim);
  for (int n = 0; n < mesh.n_nodes(); ++n)
    for (int c = 0; c < mesh.dim; ++c) d(n, c) = gauss(rng);
  const auto dir_mask = mesh.dirichlet_mask();
  for (int n = 0; n < mesh.n_nodes(); ++n)
    for (int c = 0; c < mesh.dim; ++c)
      if (dir_mask[n * mesh.dim + c]) d(n, c) = 0.0;
  if (mesh.cyclic) {
    const Eigen::MatrixXd R = mesh.sector_rotation();
    for (std::size_t i = 0; i < mesh.cyclic->master_nodes.size(); ++i)
      d.row(mesh.cyclic->slave_nodes[i]) =
          (R * d.row(mesh.cyclic->master_nodes[i]).transpose()).transpose();
  }
  const double norm = d.norm();
  if (norm > 0) d /= norm;
  return d;
}

// Objective at X + h * delta: full re-run of assembly, state solve and
// surface functional on the perturbed node tensor.
inline double evaluate_J_at(const Model& model, const Eigen::MatrixXd& delta, double h) {
  if (h == 0.0) return evaluate_J(model);
  return evaluate_J(model.with_nodes(model.mesh.nodes + h * delta));
}

// Directional derivative of the folded gradient. Slave rows mirror their
// masters, so only non-slave rows are summed against the direction.
inline double adjoint_directional(const Mesh& mesh, const SensitivityField& folded,
                                  const Eigen::MatrixXd& delta) {
  std::vector<char> is_slave(mesh.n_nodes(), 0);
  if (mesh.cyclic)
    for (int s : mesh.cyclic->slave_nodes) is_slave[s] = 1;
  double acc = 0;
  for (int n = 0; n < mesh.n_nodes(); ++n)
    if (!is_slave[n]) acc += folded.values.row(n).dot(delta.row(n));
  return acc;
}

inline std::vector<double> default_step_grid(const Mesh& mesh) {
  const double diag = mesh.bbox_diagonal();
  return {1e-2 * diag, 1e-3 * diag, 1e-4 * diag, 1e-5 * diag, 1e-6 * diag, 1e-7 * diag};
}

// Fig. 2-style validation run: per (direction, step, scheme) one report.
// Deterministic for a fixed seed. The adjoint value is computed once per
// direction from the unzeroed fold (flank cleanup is a design-space
// convention, not part of the derivative).
inline std::vector<FDReport> run_validation(const Model& model, int n_directions,
                                            const std::vector<double>& steps,
                                            const std::vector<FdScheme>& schemes,
                                            std::uint64_t seed,
                                            double corrupt_sign = 1.0) {
  const GradientResult grad = compute_gradient(model, /*zero_flank_artifacts=*/false);
  const double J0 = grad.objective.J;

  std::mt19937_64 rng(seed);
  std::vector<FDReport> reports;
  reports.reserve(static_cast<std::size_t>(n_directions) * steps.size() * schemes.size());
  for (int dir = 0; dir < n_directions; ++dir) {
    const Eigen::MatrixXd delta = sample_direction(model.mesh, rng);
    const double adjoint_value = corrupt_sign * adjoint_directional(model.mesh, grad.total, delta);
    for (double h : steps) {
      double j_plus;
      try {
        j_plus = evaluate_J_at(model, delta, h);
      } catch (const GeometryError& e) {
        throw GeometryError("fd validation: direction " + std::to_string(dir + 1) + ", step " +
                            std::to_string(h) + ": " + e.what());
      }
      for (FdScheme scheme : schemes) {
        FDReport rep;
        rep.direction_id = dir;
        rep.step = h;
        rep.scheme = scheme;
        rep.adjoint_value = adjoint_value;
        if (scheme == FdScheme::central) {
          const double j_minus = evaluate_J_at(model, delta, -h);
          rep.fd_value = (j_plus - j_minus) / (2 * h);
        } else {
          rep.fd_value = (j_plus - J0) / h;
        }
        rep.ratio = rep.adjoint_value != 0 ? rep.fd_value / rep.adjoint_value
                                           : std::numeric_limits<double>::quiet_NaN();
        reports.push_back(rep);
      }
    }
  }
  return reports;
}

// Best |ratio - 1| per (direction, scheme); the acceptance gate.
struct FdSummary {
  int direction_id = 0;
  FdScheme scheme = FdScheme::central;
  double best_step = 0;
  double best_ratio = 0;
};

inline std::vector<FdSummary> summarize_validation(const std::vector<FDReport>& reports) {
  std::vector<FdSummary> out;
  for (const auto& r : reports) {
    FdSummary* found = nullptr;
    for (auto& s : out)
      if (s.direction_id == r.direction_id && s.scheme == r.scheme) found = &s;
    if (!found) {
      out.push_back({r.direction_id, r.scheme, r.step, r.ratio});
      found = &out.back();
    }
    if (std::abs(r.ratio - 1.0) < std::abs(found->best_ratio - 1.0)) {
      found->best_ratio = r.ratio;
      found->best_step = r.step;
    }
  }
  return out;
}

}  // namespace lcfgrad
