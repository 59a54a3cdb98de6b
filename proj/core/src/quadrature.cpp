// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "binflow/error.hpp"

namespace binflow {

QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0) throw ParameterError("gauss_legendre: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        const double kk = static_cast<double>(k);
        p0 = ((2.0 * kk - 1.0) * z * p1 - (kk - 1.0) * p2) / kk;
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = mid - half * z;
    rule.nodes[n - 1 - i] = mid + half * z;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

QuadratureRule composite_gauss_legendre(const std::vector<double>& edges,
                                        std::size_t points_per_panel) {
  if (edges.size() < 2) throw ParameterError("composite_gauss_legendre: need two edges");
  const QuadratureRule ref = gauss_legendre(points_per_panel);
  QuadratureRule rule;
  rule.nodes.reserve((edges.size() - 1) * points_per_panel);
  rule.weights.reserve(rule.nodes.capacity());
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double half = 0.5 * (edges[k + 1] - edges[k]);
    const double mid = 0.5 * (edges[k + 1] + edges[k]);
    for (std::size_t j = 0; j < points_per_panel; ++j) {
      rule.nodes.push_back(mid + half * ref.nodes[j]);
      rule.weights.push_back(half * ref.weights[j]);
    }
  }
  return rule;
}

}  // namespace binflow
