#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edist/measures.hpp"
#include "edist/parallel.hpp"

namespace edist {

/// A closed halfspace {x : <direction, x> >= threshold} together with the
/// mass difference mu(H) - nu(H) it achieves (always >= 0 when returned by
/// the d-bar routines, which maximize over both orientations).
struct HalfspaceWitness {
  std::vector<double> direction;
  double threshold = 0.0;
  double value = 0.0;
  bool exact = false;
};

/// Exact perceptron discrepancy for one-dimensional measures: the largest
/// |mu(R) - nu(R)| over closed rays R, i.e. the two-sided
/// Kolmogorov-Smirnov statistic, from one sorted merge.
HalfspaceWitness dhbar_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Best closed halfspace with normal `direction` (both orientations are
/// tried). The direction need not be normalized.
HalfspaceWitness best_threshold(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                std::span<const double> direction);

struct ExactSweepOptions {
  /// Largest n + m accepted by the O(N^2 log N) sweep.
  std::size_t cap = 4000;
};

/// Exact perceptron discrepancy in the plane by a rotational sweep around
/// every point. Throws InvalidArgument above the size cap.
HalfspaceWitness dhbar_2d_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                const ExactSweepOptions& opts = {},
                                const Executor& ex = Executor::global());

/// Exact enumeration over halfspaces through point triples in R^3. Meant as
/// a reference for small instances in general position (n + m <= 120).
HalfspaceWitness dhbar_3d_enumerate(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Lower bound on the perceptron discrepancy: the exact one-dimensional
/// sweep along directions 0..n_dirs-1 of the stream rooted at `seed`.
/// Nested prefixes of the stream make the value nondecreasing in n_dirs.
HalfspaceWitness dhbar_heuristic(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                 std::size_t n_dirs, std::uint64_t seed,
                                 const Executor& ex = Executor::global());

/// Exact sweep for d <= 2 (within the cap), heuristic with `n_dirs`
/// directions otherwise.
HalfspaceWitness dhbar(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       std::size_t n_dirs = 512, std::uint64_t seed = 0,
                       const Executor& ex = Executor::global());

/// max over sampled directions w (each with its opposite -w) and thresholds
/// b >= 0 of |E_mu (w.X - b)_+^k - E_nu (w.Y - b)_+^k|, with (a)_+^0 = 1{a >= 0}.
/// Exact in b for k in {0, 1, 2}; other k throw.
double t_stat_dk(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int k,
                 std::size_t n_dirs, std::uint64_t seed, const Executor& ex = Executor::global());

/// Same objective for any k >= 0 with b restricted to `n_grid` equally spaced
/// thresholds on [0, largest projected value].
double t_stat_dk_grid(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int k,
                      std::size_t n_dirs, std::uint64_t seed, std::size_t n_grid = 2048,
                      const Executor& ex = Executor::global());

/// Per-direction exact objective of t_stat_dk for values t_i with signed
/// masses s_i (k in {0, 1, 2}).
double ramp_gap_max(std::span<const double> t, std::span<const double> s, int k);

}  // namespace edist
