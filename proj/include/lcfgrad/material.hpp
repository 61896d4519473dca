#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "lcfgrad/errors.hpp"
#include "lcfgrad/mesh.hpp"
#include "lcfgrad/quadrature.hpp"

namespace lcfgrad {

// Elastic constants, cyclic plasticity (Ramberg-Osgood), strain-life
// (Coffin-Manson-Basquin) coefficients, Weibull shape and density.
struct MaterialModel {
  double E = 0;        // Young's modulus
  double nu = 0;       // Poisson ratio
  double K = 0;        // cyclic strength coefficient
  double n_prime = 0;  // cyclic hardening exponent
  double sigma_f = 0;  // fatigue strength coefficient
  double b = 0;        // fatigue strength exponent (< 0)
  double eps_f = 0;    // fatigue ductility coefficient
  double c = 0;        // fatigue ductility exponent (< 0)
  double m = 0;        // Weibull shape
  double rho = 0;      // density

  // Static von Mises stress -> amplitude convention is configurable;
  // 1.0 treats the FE stress itself as the amplitude.
  double amplitude_factor = 1.0;

  double lambda() const { return E * nu / ((1 + nu) * (1 - 2 * nu)); }
  double mu() const { return E / (2 * (1 + nu)); }

  // 2D runs use plane stress: lambda is replaced by its plane-stress
  // reduction so that uniaxial states behave like the 3D bar.
  double lambda_eff(int dim) const {
    const double lam = lambda(), g = mu();
    return dim == 2 ? 2.0 * lam * g / (lam + 2.0 * g) : lam;
  }

  void validate() const {
    auto require = [](bool ok, const char* msg) {
      if (!ok) throw ConfigError(std::string("material: ") + msg);
    };
    require(E > 0, "E must be > 0");
    require(nu > 0 && nu < 0.5, "nu must be in (0, 0.5)");
    require(K > 0, "K must be > 0");
    require(n_prime > 0, "n_prime must be > 0");
    require(sigma_f > 0, "sigma_f must be > 0");
    require(b < 0, "b must be < 0");
    require(eps_f > 0, "eps_f must be > 0");
    require(c < 0, "c must be < 0");
    require(m > 0, "m must be > 0");
    require(rho > 0, "rho must be > 0");
    require(amplitude_factor > 0, "amplitude_factor must be > 0");
  }
};

enum class TractionMode {
  follower_density,  // g is a density on the current surface; total force tracks area
  fixed_total_force  // total force frozen at the reference mesh; density = P / A(X)
};

struct Traction {
  FaceRef face;
  Eigen::Vector3d g = Eigen::Vector3d::Zero();  // density on the reference mesh
  TractionMode mode = TractionMode::follower_density;
  double ref_area = -1.0;  // bound by LoadCase::bind_reference for fixed mode
};

struct LoadCase {
  std::vector<Traction> tractions;
  double omega = 0.0;                                   // angular velocity
  Eigen::Vector3d rotation_axis = Eigen::Vector3d::UnitZ();
  double cycles_n = 1.0;

  // Freezes fixed-total-force reference areas against the given mesh and
  // validates that traction faces are part of the declared surface.
  void bind_reference(const Mesh& mesh, int face_order) {
    if (omega < 0) throw ConfigError("load: omega must be >= 0");
    if (!(cycles_n > 0)) throw ConfigError("load: cycles_n must be > 0");
    const QuadratureRule rule = tensor_gauss(mesh.dim - 1, face_order);
    for (auto& t : tractions) {
      const bool on_surface =
          std::find(mesh.surface_faces.begin(), mesh.surface_faces.end(), t.face) !=
          mesh.surface_faces.end();
      if (!on_surface)
        throw ConfigError("load: traction face (element " + std::to_string(t.face.element + 1) +
                          ", face " + std::to_string(t.face.face + 1) +
                          ") is not a declared surface face");
      if (t.mode == TractionMode::fixed_total_force) {
        double area = 0;
        for (int p = 0; p < rule.size(); ++p)
          area += rule.weights[p] * face_gram(mesh, t.face, rule.point(p));
        t.ref_area = area;
      }
    }
  }
};

// Centrifugal body force density f(x) = rho * omega^2 * x_perp, where
// x_perp is the component of x orthogonal to the rotation axis (axis
// passes through the origin).
inline SmallVec centrifugal_force(const MaterialModel& mat, const LoadCase& load,
                                  const SmallVec& x, int dim) {
  SmallVec f(dim);
  const double w2 = load.omega * load.omega;
  if (dim == 2) {
    // rotation about the out-of-plane axis
    f = mat.rho * w2 * x;
  } else {
    const Eigen::Vector3d a = load.rotation_axis.normalized();
    Eigen::Vector3d xv(x(0), x(1), x(2));
    f = (mat.rho * w2 * (xv - a.dot(xv) * a)).eval();
  }
  return f;
}

// d f / d x = rho * omega^2 * P with P the projector onto the plane
// normal to the rotation axis.
inline SmallMat centrifugal_force_jacobian(const MaterialModel& mat, const LoadCase& load,
                                           int dim) {
  SmallMat P(dim, dim);
  const double w2 = load.omega * load.omega;
  if (dim == 2) {
    P = mat.rho * w2 * Eigen::Matrix2d::Identity();
  } else {
    const Eigen::Vector3d a = load.rotation_axis.normalized();
    P = mat.rho * w2 * (Eigen::Matrix3d::Identity() - a * a.transpose());
  }
  return P;
}

}  // namespace lcfgrad
