#pragma once

#include <cmath>
#include <limits>

#include "lcfgrad/errors.hpp"
#include "lcfgrad/material.hpp"

namespace lcfgrad {

// Life bracket for the CMB inversion, on natural log of cycles.
inline constexpr double kLogLifeMin = -4.605170185988091;  // ln 1e-2
inline constexpr double kLogLifeMax = 32.23619130191664;   // ln 1e14

// ---------------------------------------------------------------------------
// Neuber's rule: convert the elastic von Mises amplitude to an
// elastic-plastic stress amplitude. Solves
//   sigma_el^2/E = x^2/E + x (x/K)^(1/n')
// for x in (0, sigma_el]; the right side is strictly increasing, so a
// safeguarded Newton from x = sigma_el converges monotonically.
// ---------------------------------------------------------------------------

inline double neuber(double sigma_el, const MaterialModel& mat) {
  if (sigma_el < 0) throw NumericError("neuber: negative elastic stress amplitude");
  if (sigma_el == 0.0) return 0.0;
  const double target = sigma_el * sigma_el / mat.E;
  const double tol = 1e-12 * target;
  const double inv_n = 1.0 / mat.n_prime;
  double x = sigma_el, lo = 0.0, hi = sigma_el;
  for (int it = 0; it < 200; ++it) {
    const double pw = std::pow(x / mat.K, inv_n);
    const double h = x * x / mat.E + x * pw - target;
    if (std::abs(h) <= tol) return x;
    if (h > 0)
      hi = x;
    else
      lo = x;
    const double dh = 2 * x / mat.E + (1.0 + inv_n) * pw;
    double next = x - h / dh;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  throw NumericError("neuber: no convergence within 200 iterations");
}

// d sigma_elpl / d sigma_el by implicit differentiation.
inline double neuber_derivative(double sigma_el, double sigma_elpl, const MaterialModel& mat) {
  if (sigma_el == 0.0) return 1.0;  // elastic limit
  const double inv_n = 1.0 / mat.n_prime;
  const double dh = 2 * sigma_elpl / mat.E + (1.0 + inv_n) * std::pow(sigma_elpl / mat.K, inv_n);
  return (2 * sigma_el / mat.E) / dh;
}

// ---------------------------------------------------------------------------
// Ramberg-Osgood: strain amplitude from the elastic-plastic stress
// amplitude (closed form).
// ---------------------------------------------------------------------------

inline double ramberg_osgood(double sigma, const MaterialModel& mat) {
  if (sigma < 0) throw NumericError("ramberg_osgood: negative stress amplitude");
  if (sigma == 0.0) return 0.0;
  return sigma / mat.E + std::pow(sigma / mat.K, 1.0 / mat.n_prime);
}

inline double ramberg_osgood_derivative(double sigma, const MaterialModel& mat) {
  if (sigma == 0.0) return 1.0 / mat.E;
  const double inv_n = 1.0 / mat.n_prime;
  return 1.0 / mat.E + inv_n / mat.K * std::pow(sigma / mat.K, inv_n - 1.0);
}

// ---------------------------------------------------------------------------
// Coffin-Manson-Basquin:  eps_a = (sigma_f'/E) (2N)^b + eps_f' (2N)^c,
// inverted for log N on a fixed bracket. The right side is strictly
// decreasing in N (b, c < 0).
// ---------------------------------------------------------------------------

inline double cmb_strain(double log_n, const MaterialModel& mat) {
  const double t = M_LN2 + log_n;  // log(2N)
  return mat.sigma_f / mat.E * std::exp(mat.b * t) + mat.eps_f * std::exp(mat.c * t);
}

inline double cmb_strain_derivative(double log_n, const MaterialModel& mat) {
  const double t = M_LN2 + log_n;
  return mat.b * mat.sigma_f / mat.E * std::exp(mat.b * t) + mat.c * mat.eps_f * std::exp(mat.c * t);
}

enum class LifeClamp {
  none,
  short_life,  // strain above the bracket's low-N edge: saturated-life warning
  long_life    // strain below the high-N edge: clamped quietly, density ~ 0
};

struct CmbInverse {
  double log_n = 0;
  LifeClamp clamp = LifeClamp::none;
};

inline CmbInverse cmb_inverse(double eps_a, const MaterialModel& mat) {
  if (!(eps_a > 0)) throw NumericError("cmb_inverse: strain amplitude must be positive");
  if (eps_a >= cmb_strain(kLogLifeMin, mat)) return {kLogLifeMin, LifeClamp::short_life};
  if (eps_a <= cmb_strain(kLogLifeMax, mat)) return {kLogLifeMax, LifeClamp::long_life};
  double lo = kLogLifeMin, hi = kLogLifeMax;
  double L = 0.5 * (lo + hi);
  const double tol = 1e-12 * eps_a;
  for (int it = 0; it < 200; ++it) {
    const double r = cmb_strain(L, mat) - eps_a;
    if (std::abs(r) <= tol) return {L, LifeClamp::none};
    if (r > 0)
      lo = L;  // strain too large -> life too short -> move right
    else
      hi = L;
    double next = L - r / cmb_strain_derivative(L, mat);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    L = next;
  }
  throw NumericError("cmb_inverse: no convergence within 200 iterations");
}

// d log N / d eps_a; zero on the clamped edges.
inline double cmb_inverse_derivative(const CmbInverse& inv, const MaterialModel& mat) {
  if (inv.clamp != LifeClamp::none) return 0.0;
  return 1.0 / cmb_strain_derivative(inv.log_n, mat);
}

// ---------------------------------------------------------------------------
// Composed chain at one evaluation point. Life is carried as log N;
// sigma_el = 0 maps to infinite life with zero derivative, so the crack
// initiation density exp(-m log N) underflows to exactly zero.
// ---------------------------------------------------------------------------

struct FatiguePointState {
  double sigma_el = 0;
  double sigma_elpl = 0;
  double eps_a = 0;
  double log_life = std::numeric_limits<double>::infinity();
  LifeClamp clamp = LifeClamp::none;
  double dlog_life_dsigma_el = 0;
};

inline FatiguePointState fatigue_chain(double sigma_el, const MaterialModel& mat) {
  FatiguePointState st;
  st.sigma_el = sigma_el;
  if (sigma_el <= 0.0) return st;
  st.sigma_elpl = neuber(sigma_el, mat);
  st.eps_a = ramberg_osgood(st.sigma_elpl, mat);
  const CmbInverse inv = cmb_inverse(st.eps_a, mat);
  st.log_life = inv.log_n;
  st.clamp = inv.clamp;
  st.dlog_life_dsigma_el = cmb_inverse_derivative(inv, mat) *
                           ramberg_osgood_derivative(st.sigma_elpl, mat) *
                           neuber_derivative(sigma_el, st.sigma_elpl, mat);
  return st;
}

// Crack initiation density (1/N)^m and its derivative wrt sigma_el.
inline double life_density(const FatiguePointState& st, const MaterialModel& mat) {
  return std::isinf(st.log_life) ? 0.0 : std::exp(-mat.m * st.log_life);
}

inline double life_density_derivative(const FatiguePointState& st, const MaterialModel& mat) {
  const double d = life_density(st, mat);
  return d == 0.0 ? 0.0 : -mat.m * st.dlog_life_dsigma_el * d;
}

}  // namespace lcfgrad
