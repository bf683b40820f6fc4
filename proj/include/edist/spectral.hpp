#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "edist/energy.hpp"
#include "edist/measures.hpp"
#include "edist/parallel.hpp"
#include "edist/quadrature.hpp"
#include "edist/regression.hpp"

namespace edist {

/// Fourier transform (convention integral f(x) e^{-i w x} dx) of
/// f(x) = 1{|x| <= pi} sin(r x):
///   2 (-1)^r / i * r sin(w pi) / (w^2 - r^2).
/// Within 1e-6 of w = +-r a series branch replaces the removable 0/0.
std::complex<double> fhat_base(int r, double omega);

/// f sampled on u_k = -pi + k h, k = 0..M with M = 2 pi / h.
std::vector<double> sample_base(int r, std::size_t m);

/// beta_bar-fold self-convolution of the sampled base function by FFT,
/// scaled by h^(beta_bar - 1). Returns values on -beta_bar*pi + k h.
std::vector<double> convolution_power(const std::vector<double>& base, int beta_bar, double h);

struct ConstructionOptions {
  /// Samples per unit of u per unit of r: spacing h_u = pi / (oversample * r).
  int oversample = 64;
};

/// Adversarial pair p = p0 + D/2, q = p0 - D/2 on a uniform grid, with
/// D(x) = epsilon * kappa * f_{beta_bar}(beta_bar x) and kappa fixed so that
/// TV(p, q) = epsilon on the grid. p0 is the normalized bump
/// exp(-1 / (1 - (x/B)^2)) on |x| < B, B = beta_bar * pi + 1.
class Construction1D {
 public:
  Construction1D(int r, int beta_bar, double epsilon, const ConstructionOptions& opts = {});

  int r() const noexcept { return r_; }
  int beta_bar() const noexcept { return beta_bar_; }
  double epsilon() const noexcept { return epsilon_; }
  double kappa() const noexcept { return kappa_; }
  double spacing() const noexcept { return h_; }
  double support_radius() const noexcept { return radius_; }

  const std::vector<double>& grid() const noexcept { return x_; }
  const std::vector<double>& p0() const noexcept { return p0_; }
  const std::vector<double>& p() const noexcept { return p_; }
  const std::vector<double>& q() const noexcept { return q_; }
  /// D = p - q on the grid.
  const std::vector<double>& difference() const noexcept { return d_; }

  /// Fourier transform of f_{beta_bar}: fhat_base^beta_bar.
  std::complex<double> fhat(double omega) const;
  /// Fourier transform of D.
  std::complex<double> difference_hat(double omega) const;

  /// Inverse-CDF samplers of the tabulated densities.
  Tabulated1D sampler_p() const;
  Tabulated1D sampler_q() const;
  Tabulated1D sampler_p0() const;

  /// 1/2 integral |p - q| on the grid.
  double tv() const noexcept { return tv_; }
  /// E_1(p, q) = sqrt(2 integral (P - Q)^2) from the grid cumulative.
  double energy1() const noexcept { return energy1_; }
  /// sup over rays of |P(R) - Q(R)| = max |P - Q|.
  double dhbar() const noexcept { return dhbar_; }
  /// Largest |integral f_{beta_bar}| on the grid relative to its L1 norm.
  double mean_residual() const noexcept { return mean_residual_; }

 private:
  int r_;
  int beta_bar_;
  double epsilon_;
  double kappa_ = 0.0;
  double h_ = 0.0;
  double radius_ = 0.0;
  std::vector<double> x_, p0_, p_, q_, d_;
  double tv_ = 0.0, energy1_ = 0.0, dhbar_ = 0.0, mean_residual_ = 0.0;
};

/// beta_bar = ceil(beta) + 1, r = ceil(epsilon^(-1/beta)) (r = 1 when epsilon = 0).
Construction1D build_construction_pair(double beta, double epsilon,
                                       const ConstructionOptions& opts = {});

/// fhat_{beta_bar} of the construction at omega.
std::complex<double> fhat_construction(const Construction1D& c, double omega);

/// Integrand and cutoff description for weighted_fourier_norm_sq.
struct SpectrumQuadrature {
  /// Upper cutoff of the integration range [0, omega_max].
  double omega_max = 0.0;
  /// Panel edges inside (0, omega_max); panels also split at these points.
  std::vector<double> breakpoints;
  /// Bound on the integral of the integrand over [omega_max, inf) (one side).
  std::function<double(double omega_max)> tail_bound;
  QuadratureConfig config{};
};

struct WeightedNorm {
  double value = 0.0;
  double error_estimate = 0.0;
  double tail_bound = 0.0;
};

/// 2 * integral_0^omega_max |fhat(w)|^2 |w|^(2t) dw for an even |fhat|^2.
WeightedNorm weighted_fourier_norm_sq(const std::function<std::complex<double>(double)>& fhat,
                                      double exponent_t, const SpectrumQuadrature& quad);

/// weighted_fourier_norm_sq of f_{beta_bar} for a given r with cutoff
/// 64 r, panels at the integers and the analytic tail bound.
WeightedNorm construction_norm_sq(int r, int beta_bar, double exponent_t, double tolerance = 1e-8);

/// The same for D = p - q of a construction.
WeightedNorm difference_norm_sq(const Construction1D& c, double exponent_t, double tolerance = 1e-8);

/// E_gamma^2 of two 1-D measures in Fourier form,
///   F_gamma(1) * integral |mu^ - nu^|^2 |w|^(-1-gamma) dw,
/// by quadrature on [0, Omega] (Omega = 2 pi panels / spread) plus the exact
/// tail of each pair term.
double energy_sq_fourier_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                            const GammaOrder& g, std::size_t panels = 256,
                            double tolerance = 1e-10);

/// integral_z^inf cos(u) u^(-1-gamma) du for z > 0.
double cosine_tail(double z, double gamma);

struct ScalingReport {
  int beta_bar = 0;
  std::vector<int> r_list;
  std::vector<double> t_list;
  /// norms[i][j]: ||f_beta||_{t_i,2} at r_j (square root of the weighted norm).
  std::vector<std::vector<double>> norms;
  std::vector<double> l1;
  std::vector<double> dhbar;
  std::vector<LogLogFit> norm_fits;
  LogLogFit l1_fit;
  LogLogFit dhbar_fit;
};

/// Norms, L1 masses and ray discrepancies of f_{beta_bar} across r, with
/// log-log slopes.
ScalingReport verify_scaling(int beta_bar, const std::vector<double>& t_list,
                             const std::vector<int>& r_list, const ConstructionOptions& opts = {},
                             const Executor& ex = Executor::global());

}  // namespace edist
