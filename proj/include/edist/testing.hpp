#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "edist/estimation.hpp"
#include "edist/measures.hpp"
#include "edist/parallel.hpp"

namespace edist {

enum class StatisticKind { kEnergy, kDhbar, kTdk, kChiSquare };

/// Which two-sample statistic to compute, and how.
struct StatisticSpec {
  StatisticKind kind = StatisticKind::kEnergy;
  /// Energy exponent; replaced by schedule(n) when a schedule is set.
  double gamma = 1.0;
  std::optional<GammaSchedule> schedule;
  /// Ramp power of T_{d,k}.
  int k = 0;
  /// Directions for the heuristic d_H search (d >= 3) and for T_{d,k}.
  std::size_t n_dirs = 512;
  std::uint64_t direction_seed = 0;
  /// One-dimensional energy with gamma != 1: when positive, points are snapped
  /// to this many bins over the pooled range and the pair sum is done by FFT.
  std::size_t grid_bins = 0;
  /// Bins of the chi-square baseline.
  std::size_t chi_bins = 20;

  /// Exponent actually used at sample size n.
  double gamma_at(std::size_t n) const;
  /// e.g. "energy(gamma=1)", "energy(gamma=1/log n)", "dhbar", "t_dk(k=1)".
  std::string name() const;
};

StatisticKind parse_statistic_kind(const std::string& name);

/// The statistic on a pair of uniform-weight samples.
double evaluate_statistic(const StatisticSpec& spec, const EmpiricalMeasure& x,
                          const EmpiricalMeasure& y, const Executor& ex = Executor::global());

/// E_gamma^2 of two 1-D samples after snapping every point to the centre of
/// one of `bins` equal cells spanning the pooled range (FFT pair sum).
double grid_energy_sq_1d(const EmpiricalMeasure& x, const EmpiricalMeasure& y, double gamma,
                         std::size_t bins);

/// Naive binned two-sample chi-square on 1-D data (equal-width bins over the
/// pooled range).
double chi_square_1d(const EmpiricalMeasure& x, const EmpiricalMeasure& y, std::size_t bins);

struct TestReport {
  std::string statistic_name;
  double observed = 0.0;
  double threshold = 0.0;
  std::optional<double> p_value;
  bool reject = false;
  std::size_t n = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::size_t permutations = 0;
  double level = 0.0;
  /// "permutation" or "schedule".
  std::string calibration;
  /// How d_H was computed ("exact" or "heuristic"); empty otherwise.
  std::string method;
};

/// Permutation calibration of a spec'd statistic. p = (1 + #{T_b >= T}) / (B + 1)
/// (ties within 1e-12 relative count as >=); reject iff p <= level.
TestReport permutation_test(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                            const StatisticSpec& spec, double level, std::size_t permutations,
                            std::uint64_t seed, const Executor& ex = Executor::global());

using StatisticFn = std::function<double(const EmpiricalMeasure&, const EmpiricalMeasure&)>;

/// The same calibration for an arbitrary statistic.
TestReport permutation_test(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                            const StatisticFn& statistic, const std::string& name, double level,
                            std::size_t permutations, std::uint64_t seed,
                            const Executor& ex = Executor::global());

/// t_n = n^(-exponent), exponent in (0, 1/2).
double threshold_schedule(std::size_t n, double exponent = 0.25);

/// Reject iff the statistic is at least t_n, n = min(|x|, |y|).
TestReport threshold_test(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                          const StatisticSpec& spec, double exponent = 0.25,
                          const Executor& ex = Executor::global());

/// Sample-size budget (log 1/eps)^c * eps^(-(2 beta + d + 1) / beta) below
/// which d_H-type statistics cannot separate the construction pair.
double tst_bad_budget(double epsilon, double beta, std::size_t dim = 1, double c = 1.0);

struct PowerRecord {
  std::string statistic;
  std::size_t n = 0;
  std::size_t trials = 0;
  double power = 0.0;
  double mean_stat = 0.0;
  double se_stat = 0.0;
  std::uint64_t seed = 0;
};

struct PowerOptions {
  double level = 0.05;
  std::size_t permutations = 99;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
};

/// Rejection frequency and mean statistic for each (statistic, n). Samples
/// of size n are drawn from p and q with common random numbers across
/// statistics. Records are ordered by statistic, then n.
std::vector<PowerRecord> power_curve(const DistributionSpec& p, const DistributionSpec& q,
                                     const std::vector<StatisticSpec>& statistics,
                                     const std::vector<std::size_t>& n_list,
                                     const PowerOptions& opts,
                                     const Executor& ex = Executor::global());

}  // namespace edist
