#include "edist/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include "edist/error.hpp"
#include "edist/summation.hpp"

namespace edist {
namespace {

constexpr double kPi = std::numbers::pi;
using cd = std::complex<double>;

// sin(pi x) with exact reduction of x to [-1/2, 1/2].
double sin_pi(double x) {
  const double n = std::nearbyint(x);
  const double f = x - n;
  const double s = std::sin(kPi * f);
  return std::fmod(std::abs(n), 2.0) == 1.0 ? -s : s;
}

// fhat_base for omega within 1e-6 of +r (y = omega - r).
cd fhat_near_pole(int r, double y) {
  const double py = kPi * y;
  const double sinc = kPi * (1.0 - py * py / 6.0 + py * py * py * py / 120.0);
  return cd(0.0, -2.0 * r * sinc / (2.0 * r + y));
}

// FFTW planning is not thread safe.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> trapezoid_cumulative(const std::vector<double>& f, double h) {
  std::vector<double> c(f.size(), 0.0);
  CompensatedSum acc;
  for (std::size_t k = 1; k < f.size(); ++k) {
    acc += 0.5 * (f[k - 1] + f[k]) * h;
    c[k] = acc.value();
  }
  return c;
}

double trapezoid(const std::vector<double>& f, double h) {
  CompensatedSum acc;
  for (std::size_t k = 0; k < f.size(); ++k) {
    acc += (k == 0 || k + 1 == f.size() ? 0.5 : 1.0) * f[k];
  }
  return acc.value() * h;
}

Tabulated1D tabulate(const std::vector<double>& x, const std::vector<double>& density, double h) {
  auto cdf = trapezoid_cumulative(density, h);
  const double total = cdf.back();
  for (double& v : cdf) v /= total;
  // Guard monotonicity against rounding and pin the end points.
  for (std::size_t k = 1; k < cdf.size(); ++k) cdf[k] = std::max(cdf[k], cdf[k - 1]);
  cdf.front() = 0.0;
  cdf.back() = 1.0;
  return Tabulated1D{x, std::move(cdf)};
}

struct RayStats {
  double l1 = 0.0;
  double dhbar = 0.0;
  double cramer = 0.0;  // 2 integral C^2
  double mean_residual = 0.0;
};

RayStats ray_stats(const std::vector<double>& f, double h) {
  RayStats s;
  CompensatedSum abs_sum;
  for (double v : f) abs_sum += std::abs(v) * h;
  s.l1 = abs_sum.value();
  const auto c = trapezoid_cumulative(f, h);
  CompensatedSum sq;
  for (double v : c) {
    s.dhbar = std::max(s.dhbar, std::abs(v));
    sq += v * v * h;
  }
  s.cramer = 2.0 * sq.value();
  s.mean_residual = s.l1 > 0.0 ? std::abs(c.back()) / s.l1 : 0.0;
  return s;
}

// Bound on |fhat_base(w)| for w >= 2r: 2r / (w^2 - r^2) <= (8/3) r / w^2.
double tail_of_power(double scale, int beta_bar, double t, double omega) {
  const double e = 4.0 * beta_bar - 2.0 * t - 1.0;
  if (!(e > 0.0)) return std::numeric_limits<double>::infinity();
  return std::pow(scale, 2.0 * beta_bar) * std::pow(omega, -e) / e;
}

std::vector<double> integer_breakpoints(double step, double omega_max) {
  std::vector<double> b;
  for (double w = step; w < omega_max; w += step) b.push_back(w);
  return b;
}

}  // namespace

cd fhat_base(int r, double omega) {
  if (r < 1) throw InvalidArgument("frequency r must be a positive integer");
  const double rd = static_cast<double>(r);
  if (std::abs(omega - rd) < 1e-6) return fhat_near_pole(r, omega - rd);
  if (std::abs(omega + rd) < 1e-6) return -fhat_near_pole(r, -omega - rd);
  const double sign = (r % 2 == 0) ? 1.0 : -1.0;
  const double value = 2.0 * sign * rd * sin_pi(omega) / ((omega - rd) * (omega + rd));
  return cd(0.0, -value);  // 1/i = -i
}

std::vector<double> sample_base(int r, std::size_t m) {
  if (r < 1 || m < 2 || m % 2 != 0) throw InvalidArgument("sample_base needs r >= 1 and even m");
  std::vector<double> f(m + 1);
  const long long two_m = 2 * static_cast<long long>(m);
  for (std::size_t k = 0; k <= m; ++k) {
    // r u / pi = r (2k - m) / m, reduced exactly modulo 2.
    long long num = static_cast<long long>(r) * (2 * static_cast<long long>(k) - static_cast<long long>(m));
    num %= two_m;
    f[k] = sin_pi(static_cast<double>(num) / static_cast<double>(m));
  }
  f.front() = 0.0;
  f.back() = 0.0;
  return f;
}

std::vector<double> convolution_power(const std::vector<double>& base, int beta_bar, double h) {
  if (beta_bar < 1) throw InvalidArgument("beta_bar must be at least 1");
  if (beta_bar == 1) return base;
  const std::size_t m = base.size() - 1;
  const std::size_t out_len = static_cast<std::size_t>(beta_bar) * m + 1;
  const std::size_t n = next_pow2(out_len);
  std::vector<double> buf(n, 0.0);
  std::copy(base.begin(), base.end(), buf.begin());
  auto* spec = fftw_alloc_complex(n / 2 + 1);
  fftw_plan fwd, inv;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf.data(), spec, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, buf.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const cd z = std::pow(cd(spec[k][0], spec[k][1]), beta_bar);
    spec[k][0] = z.real();
    spec[k][1] = z.imag();
  }
  fftw_execute(inv);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  fftw_free(spec);
  const double scale = std::pow(h, beta_bar - 1) / static_cast<double>(n);
  std::vector<double> out(out_len);
  for (std::size_t k = 0; k < out_len; ++k) out[k] = buf[k] * scale;
  return out;
}

Construction1D::Construction1D(int r, int beta_bar, double epsilon, const ConstructionOptions& opts)
    : r_(r), beta_bar_(beta_bar), epsilon_(epsilon) {
  if (r < 1) throw InvalidArgument("r must be a positive integer");
  if (beta_bar < 1) throw InvalidArgument("beta_bar must be at least 1");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in [0, 1)");
  if (opts.oversample < 16) throw InvalidArgument("oversample below 16 violates the grid spacing bound");

  const std::size_t m = 2 * static_cast<std::size_t>(opts.oversample) * static_cast<std::size_t>(r);
  const double hu = 2.0 * kPi / static_cast<double>(m);
  const auto table = convolution_power(sample_base(r, m), beta_bar, hu);
  const long long center = static_cast<long long>(table.size() / 2);

  h_ = hu / beta_bar;
  radius_ = beta_bar * kPi + 1.0;
  const long long half = static_cast<long long>(std::ceil(radius_ / h_));
  const std::size_t len = static_cast<std::size_t>(2 * half + 1);
  x_.resize(len);
  std::vector<double> fs(len, 0.0);
  p0_.assign(len, 0.0);
  for (std::size_t k = 0; k < len; ++k) {
    const long long off = static_cast<long long>(k) - half;
    x_[k] = static_cast<double>(off) * h_;
    const long long j = off + center;
    if (j >= 0 && j < static_cast<long long>(table.size())) fs[k] = table[static_cast<std::size_t>(j)];
    const double z = x_[k] / radius_;
    if (z * z < 1.0) p0_[k] = std::exp(-1.0 / (1.0 - z * z));
  }
  const double p0_mass = trapezoid(p0_, h_);
  for (double& v : p0_) v /= p0_mass;

  const auto stats = ray_stats(fs, h_);
  mean_residual_ = stats.mean_residual;
  kappa_ = 2.0 / stats.l1;
  d_.resize(len);
  p_.resize(len);
  q_.resize(len);
  double worst = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    d_[k] = epsilon * kappa_ * fs[k];
    p_[k] = p0_[k] + 0.5 * d_[k];
    q_[k] = p0_[k] - 0.5 * d_[k];
    worst = std::min({worst, p_[k], q_[k]});
  }
  if (worst < 0.0) {
    throw InvalidArgument("epsilon = " + std::to_string(epsilon) +
                          " is too large: the construction density goes negative (" +
                          std::to_string(worst) + ")");
  }
  if (mean_residual_ > 1e-8 || std::abs(trapezoid(p_, h_) - 1.0) > 1e-8 ||
      std::abs(trapezoid(q_, h_) - 1.0) > 1e-8) {
    throw NumericalError("construction grid too coarse: densities do not integrate to one");
  }
  const auto dstats = ray_stats(d_, h_);
  tv_ = 0.5 * dstats.l1;
  energy1_ = std::sqrt(dstats.cramer);
  dhbar_ = dstats.dhbar;
}

cd Construction1D::fhat(double omega) const { return std::pow(fhat_base(r_, omega), beta_bar_); }

cd Construction1D::difference_hat(double omega) const {
  return epsilon_ * kappa_ / beta_bar_ * fhat(omega / beta_bar_);
}

Tabulated1D Construction1D::sampler_p() const { return tabulate(x_, p_, h_); }
Tabulated1D Construction1D::sampler_q() const { return tabulate(x_, q_, h_); }
Tabulated1D Construction1D::sampler_p0() const { return tabulate(x_, p0_, h_); }

Construction1D build_construction_pair(double beta, double epsilon, const ConstructionOptions& opts) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in [0, 1)");
  const int beta_bar = static_cast<int>(std::ceil(beta)) + 1;
  const int r = epsilon == 0.0 ? 1 : static_cast<int>(std::ceil(std::pow(epsilon, -1.0 / beta) - 1e-9));
  return Construction1D(r, beta_bar, epsilon, opts);
}

cd fhat_construction(const Construction1D& c, double omega) { return c.fhat(omega); }

WeightedNorm weighted_fourier_norm_sq(const std::function<cd(double)>& fhat, double exponent_t,
                                      const SpectrumQuadrature& quad) {
  if (!(quad.omega_max > 0.0)) throw InvalidArgument("omega_max must be positive");
  auto integrand = [&](double w) {
    const double a = std::norm(fhat(w));
    if (a == 0.0) return 0.0;
    return a * std::pow(std::abs(w), 2.0 * exponent_t);
  };
  std::vector<double> edges{0.0};
  for (double b : quad.breakpoints) {
    if (b > edges.back() && b < quad.omega_max) edges.push_back(b);
  }
  edges.push_back(quad.omega_max);
  const auto res = integrate_panels(integrand, edges, quad.config);
  WeightedNorm out;
  out.value = 2.0 * res.value;
  out.error_estimate = 2.0 * res.error_estimate;
  out.tail_bound = quad.tail_bound ? 2.0 * quad.tail_bound(quad.omega_max) : 0.0;
  return out;
}

WeightedNorm construction_norm_sq(int r, int beta_bar, double exponent_t, double tolerance) {
  if (!(exponent_t > -(beta_bar + 0.5))) {
    throw InvalidArgument("exponent t must exceed -(beta_bar + 1/2)");
  }
  SpectrumQuadrature q;
  q.omega_max = 64.0 * r;
  q.breakpoints = integer_breakpoints(1.0, q.omega_max);
  q.config.tolerance = tolerance;
  q.tail_bound = [=](double w) { return tail_of_power(8.0 * r / 3.0, beta_bar, exponent_t, w); };
  return weighted_fourier_norm_sq(
      [=](double w) { return std::pow(fhat_base(r, w), beta_bar); }, exponent_t, q);
}

WeightedNorm difference_norm_sq(const Construction1D& c, double exponent_t, double tolerance) {
  const int bb = c.beta_bar();
  if (!(exponent_t > -(bb + 0.5))) throw InvalidArgument("exponent t must exceed -(beta_bar + 1/2)");
  SpectrumQuadrature q;
  q.omega_max = 64.0 * c.r() * bb;
  q.breakpoints = integer_breakpoints(static_cast<double>(bb), q.omega_max);
  q.config.tolerance = tolerance;
  const double amp = c.epsilon() * c.kappa() / bb;
  q.tail_bound = [=](double w) {
    // |D^(w)| <= amp ((8/3) r)^bb (bb / w)^(2 bb).
    const double e = 4.0 * bb - 2.0 * exponent_t - 1.0;
    if (!(e > 0.0)) return std::numeric_limits<double>::infinity();
    return amp * amp * std::pow(8.0 * c.r() / 3.0 * bb * bb, 2.0 * bb) * std::pow(w, -e) / e;
  };
  return weighted_fourier_norm_sq([&](double w) { return c.difference_hat(w); }, exponent_t, q);
}

double cosine_tail(double z, double gamma) {
  if (!(z > 0.0)) throw InvalidArgument("cosine_tail needs z > 0");
  const double a = 1.0 + gamma;
  if (z < 2.0) {
    // K - sum_{k>=1} (-1)^k z^(2k-g) / ((2k)! (2k-g)) + z^(-g)/g with
    // K = integral_0^inf (cos u - 1) u^(-1-g) du = -pi / (2 Gamma(1+g) sin(pi g / 2)).
    const long double zl = z, g = gamma;
    const long double k_const = -std::numbers::pi_v<long double> /
                                (2.0L * std::tgamma(1.0L + g) * std::sin(std::numbers::pi_v<long double> * g / 2.0L));
    long double series = 0.0L;
    long double power = 1.0L;  // z^(2k) / (2k)!
    for (int k = 1; k < 60; ++k) {
      power *= -zl * zl / ((2.0L * k - 1.0L) * (2.0L * k));
      const long double term = power / (2.0L * k - g);
      series += term;
      if (std::abs(term) < 1e-21L * std::abs(series)) break;
    }
    const long double zg = std::pow(zl, -g);
    return static_cast<double>(k_const - series * zg + zg / g);
  }
  // integral_z^inf e^{iu} u^{-a} du = z^{1-a} E_a(-iz), with E_a from the
  // continued fraction of the incomplete gamma function (modified Lentz).
  const cd x(0.0, -z);
  const double tiny = 1e-300;
  cd b = x + a;
  cd c = 1.0 / tiny;
  cd d = 1.0 / b;
  cd h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -static_cast<double>(i) * (a + i - 1.0);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const cd del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) {
      const cd ea = h * std::exp(-x);
      return (std::pow(z, 1.0 - a) * ea).real();
    }
  }
  throw ConvergenceError("cosine_tail continued fraction did not converge");
}

double energy_sq_fourier_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                            const GammaOrder& g, std::size_t panels, double tolerance) {
  if (mu.dim() != 1 || nu.dim() != 1) throw DimensionMismatch("Fourier route is one-dimensional");
  if (panels == 0) throw InvalidArgument("need at least one panel");
  const double gm = g.gamma();
  std::vector<double> x, s;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    x.push_back(mu.point(i)[0]);
    s.push_back(mu.weight(i));
  }
  for (std::size_t j = 0; j < nu.size(); ++j) {
    x.push_back(nu.point(j)[0]);
    s.push_back(-nu.weight(j));
  }
  // Merge coincident atoms so equal measures cancel exactly.
  {
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> mx, ms;
    for (std::size_t i : order) {
      if (!mx.empty() && mx.back() == x[i]) {
        ms.back() += s[i];
      } else {
        mx.push_back(x[i]);
        ms.push_back(s[i]);
      }
    }
    x.clear();
    s.clear();
    for (std::size_t i = 0; i < mx.size(); ++i) {
      if (ms[i] != 0.0) {
        x.push_back(mx[i]);
        s.push_back(ms[i]);
      }
    }
  }
  if (x.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double spread = *hi - *lo;
  if (spread == 0.0) return 0.0;
  const double mid = 0.5 * (*hi + *lo);
  for (double& v : x) v -= mid;

  auto gap_sq = [&](double w) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double half = std::sin(0.5 * w * x[i]);
      re -= 2.0 * s[i] * half * half;  // cos - 1; the weights sum to zero
      im -= s[i] * std::sin(w * x[i]);
    }
    return re * re + im * im;
  };
  const double width = 2.0 * kPi / spread;
  const double omega = width * static_cast<double>(panels);
  QuadratureConfig cfg;
  cfg.tolerance = tolerance;
  // Rounding floor: |gap|^2 <= 4, so noise is relative to 4 integral w^(-1-gamma).
  cfg.absolute_floor = 1e-15 * 4.0 * std::pow(width, -gm) / gm;
  // First panel: w = width s^4 tames the |w|^(1-gamma) behaviour at 0.
  auto first = [&](double t) {
    if (t == 0.0) return 0.0;
    const double w = width * t * t * t * t;
    return gap_sq(w) * std::pow(w, -1.0 - gm) * 4.0 * width * t * t * t;
  };
  CompensatedSum head;
  head += integrate(first, 0.0, 1.0, cfg).value;
  if (panels > 1) {
    std::vector<double> edges;
    for (std::size_t k = 1; k <= panels; ++k) edges.push_back(width * static_cast<double>(k));
    head += integrate_panels([&](double w) { return gap_sq(w) * std::pow(w, -1.0 - gm); }, edges, cfg)
                .value;
  }
  // Exact tail: |gap|^2 = sum_ij s_i s_j cos(w (x_i - x_j)).
  CompensatedSum tail;
  const double diag = std::pow(omega, -gm) / gm;
  for (std::size_t i = 0; i < x.size(); ++i) {
    tail += s[i] * s[i] * diag;
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double delta = std::abs(x[i] - x[j]);
      const double t = delta == 0.0 ? diag : std::pow(delta, gm) * cosine_tail(delta * omega, gm);
      tail += 2.0 * s[i] * s[j] * t;
    }
  }
  return GammaOrder(gm, 1).fourier_constant() * 2.0 * (head.value() + tail.value());
}

ScalingReport verify_scaling(int beta_bar, const std::vector<double>& t_list,
                             const std::vector<int>& r_list, const ConstructionOptions& opts,
                             const Executor& ex) {
  if (r_list.size() < 2) throw InvalidArgument("r_list needs at least two values");
  for (std::size_t i = 1; i < r_list.size(); ++i) {
    if (r_list[i] <= r_list[i - 1]) throw InvalidArgument("r_list must be strictly increasing");
  }
  if (r_list.front() < 1) throw InvalidArgument("r values must be positive");
  ScalingReport rep;
  rep.beta_bar = beta_bar;
  rep.r_list = r_list;
  rep.t_list = t_list;
  struct Entry {
    std::vector<double> norms;
    double l1 = 0.0, dhbar = 0.0;
  };
  const auto entries = ex.map<Entry>(r_list.size(), [&](std::size_t i) {
    const int r = r_list[i];
    const std::size_t m = 2 * static_cast<std::size_t>(opts.oversample) * static_cast<std::size_t>(r);
    const double h = 2.0 * kPi / static_cast<double>(m);
    const auto stats = ray_stats(convolution_power(sample_base(r, m), beta_bar, h), h);
    Entry e;
    e.l1 = stats.l1;
    e.dhbar = stats.dhbar;
    for (double t : t_list) e.norms.push_back(std::sqrt(construction_norm_sq(r, beta_bar, t).value));
    return e;
  });
  std::vector<double> rx(r_list.begin(), r_list.end());
  rep.norms.assign(t_list.size(), std::vector<double>(r_list.size()));
  for (std::size_t i = 0; i < r_list.size(); ++i) {
    rep.l1.push_back(entries[i].l1);
    rep.dhbar.push_back(entries[i].dhbar);
    for (std::size_t j = 0; j < t_list.size(); ++j) rep.norms[j][i] = entries[i].norms[j];
  }
  for (const auto& row : rep.norms) rep.norm_fits.push_back(fit_loglog(rx, row));
  rep.l1_fit = fit_loglog(rx, rep.l1);
  rep.dhbar_fit = fit_loglog(rx, rep.dhbar);
  return rep;
}

}  // namespace edist
