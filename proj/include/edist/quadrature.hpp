#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace edist {

/// Adaptive Simpson integration over a list of panels.
struct QuadratureConfig {
  /// Relative tolerance on the whole integral.
  double tolerance = 1e-8;
  /// Absolute floor added to the tolerance (useful when the integral is ~0).
  double absolute_floor = 1e-300;
  /// Bisection depth limit per panel; exceeding it raises ConvergenceError.
  int max_depth = 48;
  /// Bisections always performed before a panel may be accepted.
  int min_depth = 2;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
};

/// Integrates f over [edges.front(), edges.back()], treating each
/// [edges[i], edges[i+1]] as a separate panel (edges must be increasing).
QuadratureResult integrate_panels(const std::function<double(double)>& f,
                                  const std::vector<double>& edges, const QuadratureConfig& cfg);

/// Single-interval convenience wrapper.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureConfig& cfg);

}  // namespace edist
