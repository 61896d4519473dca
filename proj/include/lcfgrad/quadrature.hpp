#pragma once

#include <cmath>
#include <vector>

#include "lcfgrad/errors.hpp"

namespace lcfgrad {

inline constexpr int kMaxGaussOrder = 10;

// Tensor-product Gauss-Legendre rule on [-1,1]^dim.
// `points` stores dim coordinates per point, flattened.
struct QuadratureRule {
  int dim = 0;
  std::vector<double> points;   // size n * dim
  std::vector<double> weights;  // size n
  int size() const { return static_cast<int>(weights.size()); }
  const double* point(int i) const { return points.data() + static_cast<std::size_t>(i) * dim; }
};

namespace detail {

// Nodes/weights of the n-point rule on [-1,1] by Newton iteration on P_n.
inline void gauss_legendre_1d(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0 = 0.0, p1 = 0.0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = xi;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      double dx = p1 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // recompute derivative at the converged node for the weight
    p0 = 1.0;
    p1 = xi;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
    x[n - 1 - i] = xi;
    x[i] = -xi;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

}  // namespace detail

// `order` = points per direction; exact for tensor polynomials of
// degree 2*order-1 per direction.
inline QuadratureRule tensor_gauss(int dim, int order) {
  if (order < 1 || order > kMaxGaussOrder)
    throw ConfigError("unsupported quadrature order " + std::to_string(order) +
                      " (supported: 1.." + std::to_string(kMaxGaussOrder) + ")");
  if (dim < 1 || dim > 3) throw ConfigError("unsupported quadrature dimension");
  std::vector<double> x, w;
  detail::gauss_legendre_1d(order, x, w);
  QuadratureRule rule;
  rule.dim = dim;
  int n = 1;
  for (int d = 0; d < dim; ++d) n *= order;
  rule.points.reserve(static_cast<std::size_t>(n) * dim);
  rule.weights.reserve(n);
  std::vector<int> idx(dim, 0);
  for (int p = 0; p < n; ++p) {
    double weight = 1.0;
    for (int d = 0; d < dim; ++d) {
      rule.points.push_back(x[idx[d]]);
      weight *= w[idx[d]];
    }
    rule.weights.push_back(weight);
    for (int d = 0; d < dim; ++d) {
      if (++idx[d] < order) break;
      idx[d] = 0;
    }
  }
  return rule;
}

}  // namespace lcfgrad
