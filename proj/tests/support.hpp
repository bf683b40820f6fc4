#pragma once

// Shared fixtures: hand-rolled random generators for property tests and
// small independent oracles.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edist/measures.hpp"
#include "edist/rng.hpp"

namespace edist::testing_support {

/// Uniform-weight measure of n points with i.i.d. N(0, scale^2) coordinates.
inline EmpiricalMeasure random_measure(Rng& rng, std::size_t n, std::size_t dim,
                                       double scale = 1.0, double shift = 0.0) {
  std::vector<double> c(n * dim);
  for (auto& v : c) v = shift + scale * rng.normal();
  return EmpiricalMeasure(std::move(c), dim);
}

/// Random weights drawn from a flat Dirichlet.
inline std::vector<double> random_pmf(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& v : w) {
    v = -std::log(1.0 - rng.uniform());
    s += v;
  }
  for (auto& v : w) v /= s;
  return w;
}

inline EmpiricalMeasure random_weighted_measure(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<double> c(n * dim);
  for (auto& v : c) v = rng.normal();
  return EmpiricalMeasure(std::move(c), dim, random_pmf(rng, n));
}

/// Points uniform in the unit ball by rejection from the cube (independent of
/// the library sampler).
inline EmpiricalMeasure ball_by_rejection(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<double> c;
  c.reserve(n * dim);
  std::vector<double> p(dim);
  while (c.size() < n * dim) {
    double s = 0.0;
    for (auto& v : p) {
      v = 2.0 * rng.uniform() - 1.0;
      s += v * v;
    }
    if (s <= 1.0) c.insert(c.end(), p.begin(), p.end());
  }
  return EmpiricalMeasure(std::move(c), dim);
}

/// Plain triple-loop V-statistic, no compensation and no shared helpers.
inline double naive_energy_sq(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double gamma) {
  auto dist = [&](std::span<const double> x, std::span<const double> y) {
    long double s = 0.0L;
    for (std::size_t k = 0; k < x.size(); ++k) s += (long double)(x[k] - y[k]) * (x[k] - y[k]);
    return std::pow(std::sqrt(s), (long double)gamma);
  };
  long double xy = 0, xx = 0, yy = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) xy += a.weight(i) * b.weight(j) * dist(a.point(i), b.point(j));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) xx += a.weight(i) * a.weight(j) * dist(a.point(i), a.point(j));
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) yy += b.weight(i) * b.weight(j) * dist(b.point(i), b.point(j));
  return static_cast<double>(2 * xy - xx - yy);
}

inline std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("edist_test_" + name);
}

}  // namespace edist::testing_support
