#include "edist/quadrature.hpp"

#include <cmath>
#include <string>

#include "edist/error.hpp"
#include "edist/summation.hpp"

namespace edist {
namespace {

struct Simpson {
  const std::function<double(double)>& f;
  int min_depth;
  int max_depth;
  double floor = 0.0;  // absolute slack accepted once max_depth is reached
  std::size_t evaluations = 0;
  double worst_error = 0.0;

  double eval(double x) {
    ++evaluations;
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw NumericalError("integrand is not finite at " + std::to_string(x));
    }
    return v;
  }

  // Classic recursive Simpson with Richardson correction.
  double refine(double a, double b, double fa, double fm, double fb, double whole, double eps,
                int depth, CompensatedSum& err) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = eval(lm), frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= min_depth && std::abs(delta) <= 15.0 * eps) {
      err += std::abs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    if (depth >= max_depth) {
      // Rounding noise in the integrand near a removable singularity: accept
      // a negligible residual rather than failing.
      if (std::abs(delta) <= floor) {
        err += std::abs(delta);
        return left + right;
      }
      throw ConvergenceError("adaptive Simpson did not reach tolerance on [" + std::to_string(a) +
                             ", " + std::to_string(b) + "]");
    }
    return refine(a, m, fa, flm, fm, left, 0.5 * eps, depth + 1, err) +
           refine(m, b, fm, frm, fb, right, 0.5 * eps, depth + 1, err);
  }
};

}  // namespace

QuadratureResult integrate_panels(const std::function<double(double)>& f,
                                  const std::vector<double>& edges, const QuadratureConfig& cfg) {
  if (edges.size() < 2) throw InvalidArgument("need at least two panel edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw InvalidArgument("panel edges must increase");
  }
  Simpson s{f, cfg.min_depth, cfg.max_depth};
  const std::size_t panels = edges.size() - 1;
  std::vector<double> fa(panels + 1), fm(panels), whole(panels);
  for (std::size_t i = 0; i <= panels; ++i) fa[i] = s.eval(edges[i]);
  // A first pass over all panels fixes the scale of the absolute target.
  CompensatedSum coarse;
  for (std::size_t i = 0; i < panels; ++i) {
    fm[i] = s.eval(0.5 * (edges[i] + edges[i + 1]));
    whole[i] = (edges[i + 1] - edges[i]) / 6.0 * (fa[i] + 4.0 * fm[i] + fa[i + 1]);
    coarse += std::abs(whole[i]);
  }
  const double span = edges.back() - edges.front();
  const double target = cfg.tolerance * coarse.value() + cfg.absolute_floor;
  s.floor = 1e-3 * target;
  CompensatedSum total, err;
  for (std::size_t i = 0; i < panels; ++i) {
    const double eps = target * (edges[i + 1] - edges[i]) / span;
    total += s.refine(edges[i], edges[i + 1], fa[i], fm[i], fa[i + 1], whole[i], eps, 0, err);
  }
  return {total.value(), err.value(), s.evaluations};
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureConfig& cfg) {
  return integrate_panels(f, {a, b}, cfg);
}

}  // namespace edist
