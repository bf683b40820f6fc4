#include "edist/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "edist/error.hpp"
#include "edist/summation.hpp"

namespace edist {
namespace {

constexpr double kPi = std::numbers::pi;

void require_same_dim(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("measures have dimensions " + std::to_string(a.dim()) + " and " +
                            std::to_string(b.dim()));
  }
}

double slice_constant_of(double g, double d) {
  if (g == 1.0) {
    return std::pow(kPi, (d - 1.0) / 2.0) / (4.0 * std::tgamma((d + 1.0) / 2.0));
  }
  const double c = std::cos(kPi * (g - 1.0) / 4.0);
  const double t = std::tgamma((1.0 - g) / 2.0);
  return std::pow(kPi, d / 2.0 + 1.0) * std::tgamma(1.0 - g / 2.0) /
         (g * std::pow(2.0, g + 1.0) * std::tgamma((d + g) / 2.0) * c * c * t * t);
}

// Row sums of a pair sum; also returns the diagonal-free version when
// `skip_diagonal` is set (a and b must then be the same measure).
double pair_sum(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double gamma,
                bool skip_diagonal, bool unweighted, const Executor& ex) {
  const auto rows = ex.map<double>(a.size(), [&](std::size_t i) {
    CompensatedSum acc;
    const auto xi = a.point(i);
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (skip_diagonal && i == j) continue;
      const double v = distance_pow(xi, b.point(j), gamma);
      acc += unweighted ? v : b.weight(j) * v;
    }
    return unweighted ? acc.value() : a.weight(i) * acc.value();
  });
  CompensatedSum total;
  for (double r : rows) total += r;
  return total.value();
}

// Deterministic order on measures so that symmetric statistics are
// bitwise symmetric in their arguments.
bool canonical_less(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  const auto ca = a.coords();
  const auto cb = b.coords();
  if (!std::equal(ca.begin(), ca.end(), cb.begin())) {
    return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
  }
  const auto wa = a.weights();
  const auto wb = b.weights();
  return std::lexicographical_compare(wa.begin(), wa.end(), wb.begin(), wb.end());
}

}  // namespace

GammaOrder::GammaOrder(double gamma, std::size_t dim) : gamma_(gamma), dim_(dim) {
  if (!(gamma > 0.0 && gamma < 2.0)) {
    throw InvalidArgument("gamma must lie in the open interval (0, 2), got " +
                          std::to_string(gamma));
  }
  if (dim == 0) throw InvalidArgument("dimension must be positive");
  const double d = static_cast<double>(dim);
  fourier_ = gamma * std::pow(2.0, gamma - 1.0) * std::tgamma((d + gamma) / 2.0) /
             (std::pow(kPi, d / 2.0) * std::tgamma(1.0 - gamma / 2.0));
  slice_ = slice_constant_of(gamma, d);
  psi_ = gamma == 1.0 ? 1.0 / kPi
                      : 1.0 / (std::cos(kPi * (gamma - 1.0) / 4.0) *
                               std::tgamma((1.0 - gamma) / 2.0));
  dh_ = std::pow(kPi, (d - 1.0) / 4.0) / std::sqrt(std::tgamma((d + 1.0) / 2.0));
}

double constants(const GammaOrder& g, Constant which) {
  switch (which) {
    case Constant::kFourier:
      return g.fourier_constant();
    case Constant::kSlice:
      return g.slice_constant();
    case Constant::kPsi:
      return g.psi_constant();
    case Constant::kDhFactor:
      return g.dh_factor();
  }
  return 0.0;
}

double sphere_area(std::size_t dim) {
  const double d = static_cast<double>(dim);
  return 2.0 * std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0);
}

double distance_pow(std::span<const double> x, std::span<const double> y, double gamma) noexcept {
  if (x.size() == 1) {
    const double a = std::abs(x[0] - y[0]);
    return abs_pow(a, gamma);
  }
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = x[k] - y[k];
    s += t * t;
  }
  return abs_pow(std::sqrt(s), gamma);
}

double kernel_gamma(std::span<const double> x, std::span<const double> y, const GammaOrder& g) {
  if (x.size() != g.dim() || y.size() != g.dim()) {
    throw DimensionMismatch("kernel arguments must have dimension " + std::to_string(g.dim()));
  }
  const std::vector<double> zero(g.dim(), 0.0);
  const double gm = g.gamma();
  return distance_pow(x, zero, gm) + distance_pow(y, zero, gm) - distance_pow(x, y, gm);
}

double weighted_pair_sum(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double gamma,
                         const Executor& ex) {
  require_same_dim(a, b);
  return pair_sum(a, b, gamma, false, false, ex);
}

double energy_sq_vstat(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const GammaOrder& g,
                       const Executor& ex) {
  require_same_dim(mu, nu);
  if (canonical_less(nu, mu)) return energy_sq_vstat(nu, mu, g, ex);
  const double gm = g.gamma();
  CompensatedSum s;
  s += 2.0 * pair_sum(mu, nu, gm, false, false, ex);
  s += -pair_sum(mu, mu, gm, false, false, ex);
  s += -pair_sum(nu, nu, gm, false, false, ex);
  return std::max(0.0, s.value());
}

double energy_sq_mmd(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const GammaOrder& g,
                     const Executor& ex) {
  require_same_dim(mu, nu);
  if (mu.dim() != g.dim()) throw DimensionMismatch("GammaOrder dimension differs from data");
  auto block = [&](const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    const auto rows = ex.map<double>(a.size(), [&](std::size_t i) {
      CompensatedSum acc;
      for (std::size_t j = 0; j < b.size(); ++j) {
        acc += b.weight(j) * kernel_gamma(a.point(i), b.point(j), g);
      }
      return a.weight(i) * acc.value();
    });
    CompensatedSum t;
    for (double r : rows) t += r;
    return t.value();
  };
  CompensatedSum s;
  s += block(mu, mu);
  s += block(nu, nu);
  s += -2.0 * block(mu, nu);
  return s.value();
}

double energy_sq_ustat(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const GammaOrder& g,
                       const Executor& ex) {
  require_same_dim(mu, nu);
  if (mu.size() < 2 || nu.size() < 2) {
    throw InvalidArgument("U-statistic needs at least two points per sample");
  }
  if (!mu.has_uniform_weights() || !nu.has_uniform_weights()) {
    throw InvalidArgument("U-statistic requires uniform weights");
  }
  if (canonical_less(nu, mu)) return energy_sq_ustat(nu, mu, g, ex);
  const double gm = g.gamma();
  const double n = static_cast<double>(mu.size());
  const double m = static_cast<double>(nu.size());
  CompensatedSum s;
  s += 2.0 * pair_sum(mu, nu, gm, false, true, ex) / (n * m);
  s += -pair_sum(mu, mu, gm, true, true, ex) / (n * (n - 1.0));
  s += -pair_sum(nu, nu, gm, true, true, ex) / (m * (m - 1.0));
  return s.value();
}

std::vector<double> grad_energy_sq(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   const GammaOrder& g, const GradientOptions& opts) {
  require_same_dim(mu, nu);
  if (!mu.has_uniform_weights()) {
    throw InvalidArgument("gradient requires uniform weights on the moving sample");
  }
  const std::size_t d = mu.dim();
  const std::size_t m = mu.size();
  const double gm = g.gamma();
  const double md = static_cast<double>(m);
  std::vector<double> grad(m * d, 0.0);
  std::vector<double> diff(d);

  // Adds scale * ||y - x||^(gamma-2) (y - x) into out; zero at coincidence.
  auto accumulate = [&](std::span<const double> y, std::span<const double> x, double scale,
                        double* out) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      diff[k] = y[k] - x[k];
      s += diff[k] * diff[k];
    }
    if (s == 0.0) return;
    double f;
    if (std::isfinite(s)) {
      f = gm == 1.0 ? 1.0 / std::sqrt(s) : std::pow(s, (gm - 2.0) / 2.0);
    } else {
      // Squared norm overflowed: rescale before taking the norm.
      double mx = 0.0, t = 0.0;
      for (std::size_t k = 0; k < d; ++k) mx = std::max(mx, std::abs(diff[k]));
      for (std::size_t k = 0; k < d; ++k) t += (diff[k] / mx) * (diff[k] / mx);
      f = std::pow(mx * std::sqrt(t), gm - 2.0);
    }
    for (std::size_t k = 0; k < d; ++k) out[k] += scale * f * diff[k];
  };

  for (std::size_t j = 0; j < m; ++j) {
    double* out = grad.data() + j * d;
    const auto yj = mu.point(j);
    for (std::size_t i = 0; i < nu.size(); ++i) {
      accumulate(yj, nu.point(i), 2.0 * gm / md * nu.weight(i), out);
    }
    for (std::size_t jj = 0; jj < m; ++jj) {
      if (jj != j) accumulate(yj, mu.point(jj), -2.0 * gm / (md * md), out);
    }
    if (gm < 1.0) {
      double norm = 0.0;
      for (std::size_t k = 0; k < d; ++k) norm += out[k] * out[k];
      norm = std::sqrt(norm);
      if (norm > opts.clip) {
        for (std::size_t k = 0; k < d; ++k) out[k] *= opts.clip / norm;
      }
    }
  }
  return grad;
}

}  // namespace edist
