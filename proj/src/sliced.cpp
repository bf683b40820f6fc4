#include "edist/sliced.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "edist/error.hpp"
#include "edist/rng.hpp"
#include "edist/summation.hpp"

namespace edist {
namespace {

std::vector<double> checked_direction(std::span<const double> v, std::size_t dim) {
  if (v.size() != dim) throw DimensionMismatch("direction has the wrong dimension");
  double s = 0.0;
  for (double x : v) s += x * x;
  const double norm = std::sqrt(s);
  std::vector<double> out(v.begin(), v.end());
  if (std::abs(norm - 1.0) <= 1e-12) return out;
  if (std::abs(norm - 1.0) > 1e-6) {
    throw InvalidArgument("projection direction is not a unit vector (norm " +
                          std::to_string(norm) + ")");
  }
  std::cerr << "warning: renormalizing projection direction with norm " << norm << "\n";
  for (double& x : out) x /= norm;
  return out;
}

ProjectedMeasure project_unchecked(const EmpiricalMeasure& m, std::span<const double> v) {
  const std::size_t n = m.size();
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = m.point(i);
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += v[k] * x[k];
    raw[i] = s;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
  ProjectedMeasure out;
  out.values.resize(n);
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = raw[order[i]];
    out.weights[i] = m.weight(order[i]);
  }
  return out;
}

// 2 * integral of (F_mu - F_nu)^2 over the merged breakpoints.
double cramer_sq(const ProjectedMeasure& a, const ProjectedMeasure& b) {
  std::size_t i = 0, j = 0;
  double gap = 0.0;
  double prev = 0.0;
  bool started = false;
  CompensatedSum acc;
  while (i < a.values.size() || j < b.values.size()) {
    const double t = (j == b.values.size() || (i < a.values.size() && a.values[i] <= b.values[j]))
                         ? a.values[i]
                         : b.values[j];
    if (started) acc += gap * gap * (t - prev);
    while (i < a.values.size() && a.values[i] == t) gap += a.weights[i++];
    while (j < b.values.size() && b.values[j] == t) gap -= b.weights[j++];
    prev = t;
    started = true;
  }
  return 2.0 * acc.value();
}

// Sum_{i,j} w_i w_j |x_i - x_j|^gamma for sorted x (each unordered pair once, doubled).
double self_sum_sorted(const ProjectedMeasure& a, double gamma) {
  CompensatedSum acc;
  for (std::size_t i = 1; i < a.values.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      row += a.weights[j] * abs_pow(a.values[i] - a.values[j], gamma);
    }
    acc += a.weights[i] * row;
  }
  return 2.0 * acc.value();
}

double cross_sum(const ProjectedMeasure& a, const ProjectedMeasure& b, double gamma) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < b.values.size(); ++j) {
      row += b.weights[j] * abs_pow(std::abs(a.values[i] - b.values[j]), gamma);
    }
    acc += a.weights[i] * row;
  }
  return acc.value();
}

}  // namespace

ProjectedMeasure project(const EmpiricalMeasure& m, std::span<const double> v) {
  const auto dir = checked_direction(v, m.dim());
  return project_unchecked(m, dir);
}

Projection1D project(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     std::span<const double> v) {
  if (mu.dim() != nu.dim()) throw DimensionMismatch("measures have different dimensions");
  Projection1D p;
  p.direction = checked_direction(v, mu.dim());
  p.mu = project_unchecked(mu, p.direction);
  p.nu = project_unchecked(nu, p.direction);
  return p;
}

Projection1D as_projection(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) throw DimensionMismatch("expected one-dimensional measures");
  const double one = 1.0;
  return project(mu, nu, std::span<const double>(&one, 1));
}

double energy_sq_1d_exact(const Projection1D& p, const GammaOrder& g) {
  const double gm = g.gamma();
  if (gm == 1.0) return cramer_sq(p.mu, p.nu);
  CompensatedSum s;
  s += 2.0 * cross_sum(p.mu, p.nu, gm);
  s += -self_sum_sorted(p.mu, gm);
  s += -self_sum_sorted(p.nu, gm);
  return std::max(0.0, s.value());
}

double psi_gamma(double x, double gamma) noexcept {
  if (gamma == 1.0) return x >= 0.0 ? 1.0 : 0.0;
  if (x == 0.0) return 0.0;
  return std::pow(std::abs(x), (gamma - 1.0) / 2.0);
}

double psi_feature_gap(const Projection1D& p, double b, const GammaOrder& g) {
  const double gm = g.gamma();
  CompensatedSum s;
  for (std::size_t i = 0; i < p.mu.values.size(); ++i) s += p.mu.weights[i] * psi_gamma(p.mu.values[i] - b, gm);
  for (std::size_t j = 0; j < p.nu.values.size(); ++j) s += -p.nu.weights[j] * psi_gamma(p.nu.values[j] - b, gm);
  return s.value();
}

double slice_scale(double gamma, std::size_t dim) {
  const GammaOrder line(gamma, 1);
  const GammaOrder space(gamma, dim);
  return sphere_area(dim) * line.slice_constant() / (2.0 * space.slice_constant());
}

SlicedEstimate sliced_energy_sq_mc(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   const GammaOrder& g, std::size_t n_dirs, std::uint64_t seed,
                                   const Executor& ex) {
  if (n_dirs == 0) throw InvalidArgument("n_dirs must be at least 1");
  if (mu.dim() != nu.dim()) throw DimensionMismatch("measures have different dimensions");
  const std::size_t d = mu.dim();
  const auto slices = ex.map<double>(n_dirs, [&](std::size_t i) {
    const auto v = stream_direction(seed, i, d);
    Projection1D p;
    p.mu = project_unchecked(mu, v);
    p.nu = project_unchecked(nu, v);
    return energy_sq_1d_exact(p, g);
  });
  CompensatedSum sum;
  for (double s : slices) sum += s;
  const double mean = sum.value() / static_cast<double>(n_dirs);
  CompensatedSum dev;
  for (double s : slices) dev += (s - mean) * (s - mean);
  const double scale = slice_scale(g.gamma(), d);
  SlicedEstimate out;
  out.n_dirs = n_dirs;
  out.value = scale * mean;
  out.std_error =
      n_dirs > 1 ? scale * std::sqrt(dev.value() / static_cast<double>(n_dirs - 1) / static_cast<double>(n_dirs))
                 : 0.0;
  return out;
}

}  // namespace edist
