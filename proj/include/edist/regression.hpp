#pragma once

#include <vector>

namespace edist {

struct LogLogFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  /// 95% confidence half-width of the slope (Student t, n - 2 dof).
  double ci95 = 0.0;
};

/// Ordinary least squares of log y on log x. Needs at least two distinct
/// positive x values and positive y values.
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace edist
