#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "edist/energy.hpp"
#include "edist/measures.hpp"
#include "edist/parallel.hpp"

namespace edist {

/// Projected values <v, x_i> sorted ascending, carrying the original weights.
struct ProjectedMeasure {
  std::vector<double> values;
  std::vector<double> weights;
};

/// Both measures projected onto the same unit direction.
struct Projection1D {
  std::vector<double> direction;
  ProjectedMeasure mu;
  ProjectedMeasure nu;
};

/// Projects onto v. A direction whose norm is within 1e-6 of one is
/// renormalized (with a warning on stderr); anything further off throws.
ProjectedMeasure project(const EmpiricalMeasure& m, std::span<const double> v);
Projection1D project(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     std::span<const double> v);

/// Wraps one-dimensional measures without a direction.
Projection1D as_projection(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Squared energy distance of the two projected measures. For gamma == 1 this
/// is 2 * integral (F_mu - F_nu)^2 from one merge of the sorted values;
/// other exponents use the pairwise V-statistic on the sorted values.
double energy_sq_1d_exact(const Projection1D& p, const GammaOrder& g);

/// psi_gamma(x) = |x|^((gamma-1)/2) for gamma != 1 (psi(0) = 0 by
/// convention), and 1{x >= 0} for gamma == 1.
double psi_gamma(double x, double gamma) noexcept;

/// Signed feature gap sum_i w_i psi(p_i - b) - sum_j u_j psi(q_j - b).
double psi_feature_gap(const Projection1D& p, double b, const GammaOrder& g);

struct SlicedEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_dirs = 0;
};

/// Monte Carlo estimate of energy_sq_vstat(mu, nu) from random slices:
///   |S^{d-1}| S_gamma(1) / (2 S_gamma(d)) * mean_v E^2(v.mu, v.nu),
/// which reduces to the plain average of slice energies times
/// Gamma((d+gamma)/2) sqrt(pi) / (Gamma((1+gamma)/2) Gamma(d/2)).
/// Direction i comes from stream_direction(seed, i); since the slice energy
/// is even in v, the antithetic partner -v is never evaluated separately.
SlicedEstimate sliced_energy_sq_mc(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   const GammaOrder& g, std::size_t n_dirs, std::uint64_t seed,
                                   const Executor& ex = Executor::global());

/// Factor multiplying the mean slice energy in sliced_energy_sq_mc.
double slice_scale(double gamma, std::size_t dim);

}  // namespace edist
