#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "edist/measures.hpp"
#include "edist/parallel.hpp"

namespace edist {

/// Exponent gamma in (0, 2) of the generalized energy distance, together with
/// the dimension it is used in and the special-function constants that the
/// Fourier, sliced and halfspace representations need.
class GammaOrder {
 public:
  GammaOrder(double gamma, std::size_t dim);

  double gamma() const noexcept { return gamma_; }
  std::size_t dim() const noexcept { return dim_; }

  /// F_gamma(d) = gamma 2^(gamma-1) Gamma((d+gamma)/2) / (pi^(d/2) Gamma(1-gamma/2)),
  /// the weight of the Fourier representation.
  double fourier_constant() const noexcept { return fourier_; }
  /// S_gamma(d) of the sliced representation (gamma == 1 uses the closed form
  /// pi^((d-1)/2) / (4 Gamma((d+1)/2))).
  double slice_constant() const noexcept { return slice_; }
  /// C_psi: normalizer of the Fourier integral representation of psi_gamma.
  double psi_constant() const noexcept { return psi_; }
  /// pi^((d-1)/4) / sqrt(Gamma((d+1)/2)); d_H = dh_factor * E_1.
  double dh_factor() const noexcept { return dh_; }

  GammaOrder with_dim(std::size_t dim) const { return GammaOrder(gamma_, dim); }

 private:
  double gamma_;
  std::size_t dim_;
  double fourier_;
  double slice_;
  double psi_;
  double dh_;
};

enum class Constant { kFourier, kSlice, kPsi, kDhFactor };

double constants(const GammaOrder& g, Constant which);

/// Surface area of the unit sphere S^(dim-1): 2 pi^(d/2) / Gamma(d/2).
double sphere_area(std::size_t dim);

/// a^gamma for a >= 0, with sqrt-based paths for gamma in {1/2, 1, 3/2}.
inline double abs_pow(double a, double gamma) noexcept {
  if (gamma == 1.0) return a;
  if (gamma == 0.5) return std::sqrt(a);
  if (gamma == 1.5) return a * std::sqrt(a);
  return std::pow(a, gamma);
}

/// ||x - y||^gamma.
double distance_pow(std::span<const double> x, std::span<const double> y, double gamma) noexcept;

/// k_gamma(x, y) = ||x||^gamma + ||y||^gamma - ||x - y||^gamma.
double kernel_gamma(std::span<const double> x, std::span<const double> y, const GammaOrder& g);

/// Sum_i Sum_j a_i b_j ||x_i - y_j||^gamma with compensated accumulation.
/// Rows are processed in parallel and reduced in index order.
double weighted_pair_sum(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double gamma,
                         const Executor& ex = Executor::global());

/// Weighted V-statistic of the squared generalized energy distance,
///   2 E||X-Y||^g - E||X-X'||^g - E||Y-Y'||^g,
/// clamped below at zero.
double energy_sq_vstat(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const GammaOrder& g,
                       const Executor& ex = Executor::global());

/// The same quantity written as the squared MMD of the kernel k_gamma
/// (not clamped; used as an independent route).
double energy_sq_mmd(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const GammaOrder& g,
                     const Executor& ex = Executor::global());

/// Unbiased U-statistic (diagonal excluded within samples). Requires uniform
/// weights and at least two points per sample; may be negative.
double energy_sq_ustat(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const GammaOrder& g,
                       const Executor& ex = Executor::global());

struct GradientOptions {
  /// Per-point gradient norm cap, applied only for gamma < 1 where the
  /// gradient is unbounded near collisions.
  double clip = 1e6;
};

/// Gradient of energy_sq_vstat(mu, nu) with respect to each point of mu
/// (uniform weights on mu). Returned row-major, mu.size() x dim. Coincident
/// pairs contribute zero.
std::vector<double> grad_energy_sq(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   const GammaOrder& g, const GradientOptions& opts = {});

}  // namespace edist
