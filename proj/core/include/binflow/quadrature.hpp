// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace binflow {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0);

/// Composite rule: `points_per_panel` Gauss-Legendre nodes on each interval
/// [edges[k], edges[k+1]].
QuadratureRule composite_gauss_legendre(const std::vector<double>& edges,
                                        std::size_t points_per_panel);

}  // namespace binflow
