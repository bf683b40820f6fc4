#include "edist/testing.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <sstream>

#include "edist/error.hpp"
#include "edist/halfspace.hpp"
#include "edist/rng.hpp"
#include "edist/sliced.hpp"
#include "edist/summation.hpp"

namespace edist {

// ---------------------------------------------------------------------------
// Statistic specs

double StatisticSpec::gamma_at(std::size_t n) const {
  const double g = schedule ? gamma_for(*schedule, n) : gamma;
  if (!(g > 0.0 && g < 2.0)) throw InvalidArgument("energy exponent must lie in (0, 2)");
  return g;
}

std::string StatisticSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case StatisticKind::kEnergy:
      os << "energy(gamma=";
      if (schedule) {
        os << (*schedule == GammaSchedule::kOne           ? "1"
               : *schedule == GammaSchedule::kInverseLog ? "1/log n"
                                                         : "1/log log n");
      } else {
        os << gamma;
      }
      os << ")";
      break;
    case StatisticKind::kDhbar:
      os << "dhbar";
      break;
    case StatisticKind::kTdk:
      os << "t_dk(k=" << k << ")";
      break;
    case StatisticKind::kChiSquare:
      os << "chi2(bins=" << chi_bins << ")";
      break;
  }
  return os.str();
}

StatisticKind parse_statistic_kind(const std::string& name) {
  if (name == "energy") return StatisticKind::kEnergy;
  if (name == "dhbar") return StatisticKind::kDhbar;
  if (name == "t_dk" || name == "tdk") return StatisticKind::kTdk;
  if (name == "chi2") return StatisticKind::kChiSquare;
  throw InvalidArgument("unknown statistic '" + name + "' (energy, dhbar, t_dk, chi2)");
}

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// Pair sums of a signed histogram against |l h|^gamma by zero-padded FFT.
class GridKernel {
 public:
  GridKernel(std::size_t bins, double h, double gamma) : bins_(bins) {
    n_ = 1;
    while (n_ < 2 * bins) n_ <<= 1;
    std::vector<double> k(n_, 0.0);
    for (std::size_t l = 1; l < bins; ++l) {
      const double v = std::pow(static_cast<double>(l) * h, gamma);
      k[l] = v;
      k[n_ - l] = v;
    }
    kernel_hat_.resize(n_ / 2 + 1);
    {
      std::lock_guard<std::mutex> lock(plan_mutex());
      fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), k.data(),
                                  reinterpret_cast<fftw_complex*>(kernel_hat_.data()),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
      std::vector<std::complex<double>> tmp(n_ / 2 + 1);
      inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), reinterpret_cast<fftw_complex*>(tmp.data()),
                                  k.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    fftw_execute_dft_r2c(fwd_, k.data(), reinterpret_cast<fftw_complex*>(kernel_hat_.data()));
  }
  GridKernel(const GridKernel&) = delete;
  GridKernel& operator=(const GridKernel&) = delete;
  ~GridKernel() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }

  /// -sum_ij s_i s_j |i - j|^gamma h^gamma.
  double energy(const std::vector<double>& s) const {
    std::vector<double> buf(n_, 0.0);
    std::copy(s.begin(), s.end(), buf.begin());
    std::vector<std::complex<double>> spec(n_ / 2 + 1);
    fftw_execute_dft_r2c(fwd_, buf.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= kernel_hat_[i];
    fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(spec.data()), buf.data());
    CompensatedSum acc;
    for (std::size_t i = 0; i < bins_; ++i) acc += s[i] * buf[i];
    return std::max(0.0, -acc.value() / static_cast<double>(n_));
  }

 private:
  std::size_t bins_;
  std::size_t n_;
  std::vector<std::complex<double>> kernel_hat_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

struct Binning {
  double lo = 0.0;
  double h = 1.0;
  std::vector<std::size_t> index;
};

Binning bin_pooled(const std::vector<double>& values, std::size_t bins) {
  if (bins < 2) throw InvalidArgument("need at least two bins");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  Binning b;
  b.lo = *mn;
  const double span = *mx - *mn;
  b.h = span > 0.0 ? span / static_cast<double>(bins) : 1.0;
  b.index.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = (values[i] - b.lo) / b.h;
    b.index[i] = std::min<std::size_t>(bins - 1, static_cast<std::size_t>(std::max(0.0, t)));
  }
  return b;
}

std::vector<double> pooled_values(const EmpiricalMeasure& x, const EmpiricalMeasure& y) {
  std::vector<double> v(x.coords().begin(), x.coords().end());
  v.insert(v.end(), y.coords().begin(), y.coords().end());
  return v;
}

void require_uniform(const EmpiricalMeasure& x, const EmpiricalMeasure& y) {
  if (x.dim() != y.dim()) throw DimensionMismatch("samples have different dimensions");
  if (!x.has_uniform_weights() || !y.has_uniform_weights()) {
    throw InvalidArgument("two-sample tests need uniform weights");
  }
}

double chi_square_counts(const std::vector<std::size_t>& idx, const std::vector<char>& in_x,
                         std::size_t bins, std::size_t n, std::size_t m) {
  std::vector<double> a(bins, 0.0), b(bins, 0.0);
  for (std::size_t i = 0; i < idx.size(); ++i) (in_x[i] ? a : b)[idx[i]] += 1.0;
  const double kn = std::sqrt(static_cast<double>(m) / static_cast<double>(n));
  double chi = 0.0;
  for (std::size_t j = 0; j < bins; ++j) {
    if (a[j] + b[j] == 0.0) continue;
    const double d = kn * a[j] - b[j] / kn;
    chi += d * d / (a[j] + b[j]);
  }
  return chi;
}

// Evaluates the statistic for a relabeling of the pooled sample.
using LabelStatistic = std::function<double(const std::vector<char>& in_x)>;

LabelStatistic generic_engine(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                              StatisticFn stat) {
  const std::size_t d = x.dim(), n = x.size(), total = x.size() + y.size();
  auto coords = std::make_shared<std::vector<double>>(x.coords().begin(), x.coords().end());
  coords->insert(coords->end(), y.coords().begin(), y.coords().end());
  return [=](const std::vector<char>& in_x) {
    std::vector<double> cx, cy;
    cx.reserve(n * d);
    cy.reserve((total - n) * d);
    for (std::size_t i = 0; i < total; ++i) {
      auto& dst = in_x[i] ? cx : cy;
      dst.insert(dst.end(), coords->begin() + static_cast<std::ptrdiff_t>(i * d),
                 coords->begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    }
    return stat(EmpiricalMeasure(std::move(cx), d), EmpiricalMeasure(std::move(cy), d));
  };
}

// 1-D statistics driven by the sorted pooled order: KS and the gamma = 1
// energy (2 integral (F - G)^2).
LabelStatistic sorted_engine(const EmpiricalMeasure& x, const EmpiricalMeasure& y, bool ks) {
  auto values = pooled_values(x, y);
  auto order = std::make_shared<std::vector<std::size_t>>(values.size());
  std::iota(order->begin(), order->end(), std::size_t{0});
  std::stable_sort(order->begin(), order->end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  auto sorted = std::make_shared<std::vector<double>>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) (*sorted)[i] = values[(*order)[i]];
  const double wn = 1.0 / static_cast<double>(x.size());
  const double wm = 1.0 / static_cast<double>(y.size());
  return [=](const std::vector<char>& in_x) {
    double gap = 0.0, best = 0.0;
    CompensatedSum area;
    const std::size_t total = sorted->size();
    for (std::size_t i = 0; i < total; ++i) {
      gap += in_x[(*order)[i]] ? wn : -wm;
      if (i + 1 < total && (*sorted)[i + 1] == (*sorted)[i]) continue;  // inside a tie group
      if (ks) {
        best = std::max(best, std::abs(gap));
      } else if (i + 1 < total) {
        area += gap * gap * ((*sorted)[i + 1] - (*sorted)[i]);
      }
    }
    return ks ? best : 2.0 * area.value();
  };
}

LabelStatistic grid_engine(const EmpiricalMeasure& x, const EmpiricalMeasure& y, double gamma,
                           std::size_t bins) {
  const auto values = pooled_values(x, y);
  auto binning = std::make_shared<Binning>(bin_pooled(values, bins));
  auto kernel = std::make_shared<GridKernel>(bins, binning->h, gamma);
  const double wn = 1.0 / static_cast<double>(x.size());
  const double wm = 1.0 / static_cast<double>(y.size());
  return [=](const std::vector<char>& in_x) {
    std::vector<double> s(bins, 0.0);
    for (std::size_t i = 0; i < in_x.size(); ++i) s[binning->index[i]] += in_x[i] ? wn : -wm;
    return kernel->energy(s);
  };
}

LabelStatistic chi_engine(const EmpiricalMeasure& x, const EmpiricalMeasure& y, std::size_t bins) {
  auto binning = std::make_shared<Binning>(bin_pooled(pooled_values(x, y), bins));
  const std::size_t n = x.size(), m = y.size();
  return [=](const std::vector<char>& in_x) {
    return chi_square_counts(binning->index, in_x, bins, n, m);
  };
}

LabelStatistic make_engine(const StatisticSpec& spec, const EmpiricalMeasure& x,
                           const EmpiricalMeasure& y, const Executor& ex) {
  const bool one_d = x.dim() == 1;
  switch (spec.kind) {
    case StatisticKind::kEnergy: {
      const double g = spec.gamma_at(std::min(x.size(), y.size()));
      if (one_d && g == 1.0) return sorted_engine(x, y, false);
      if (one_d && spec.grid_bins > 0) return grid_engine(x, y, g, spec.grid_bins);
      break;
    }
    case StatisticKind::kDhbar:
      if (one_d) return sorted_engine(x, y, true);
      break;
    case StatisticKind::kChiSquare:
      if (!one_d) throw DimensionMismatch("chi-square baseline is one-dimensional");
      return chi_engine(x, y, spec.chi_bins);
    case StatisticKind::kTdk:
      break;
  }
  return generic_engine(x, y, [spec, &ex](const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    return evaluate_statistic(spec, a, b, ex);
  });
}

std::string dhbar_method(const StatisticSpec& spec, const EmpiricalMeasure& x,
                         const EmpiricalMeasure& y) {
  if (spec.kind != StatisticKind::kDhbar) return "";
  if (x.dim() == 1) return "exact";
  if (x.dim() == 2 && x.size() + y.size() <= ExactSweepOptions{}.cap) return "exact";
  return "heuristic";
}

TestReport run_permutations(const LabelStatistic& engine, std::size_t n, std::size_t m,
                            double level, std::size_t permutations, std::uint64_t seed,
                            const Executor& ex) {
  if (permutations < 99) throw InvalidArgument("need at least 99 permutations");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("level must lie in (0, 1)");
  const std::size_t total = n + m;
  std::vector<char> identity(total, 0);
  std::fill(identity.begin(), identity.begin() + static_cast<std::ptrdiff_t>(n), 1);
  TestReport rep;
  rep.observed = engine(identity);
  const std::uint64_t perm_seed = substream(seed, "permutations");
  const auto stats = ex.map<double>(permutations, [&](std::size_t b) {
    std::vector<char> labels = identity;
    Rng rng(substream(perm_seed, b));
    rng.shuffle(std::span<char>(labels));
    return engine(labels);
  });
  const double cut = rep.observed - 1e-12 * std::abs(rep.observed);
  std::size_t exceed = 0;
  for (double s : stats) exceed += s >= cut;
  rep.p_value = static_cast<double>(1 + exceed) / static_cast<double>(permutations + 1);
  rep.reject = *rep.p_value <= level;
  rep.n = n;
  rep.m = m;
  rep.seed = seed;
  rep.permutations = permutations;
  rep.level = level;
  rep.calibration = "permutation";
  // Smallest statistic value that would be rejected at this level.
  std::vector<double> sorted = stats;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto allowed = static_cast<std::size_t>(std::floor(level * static_cast<double>(permutations + 1))) - 1;
  rep.threshold = allowed < sorted.size() ? std::nextafter(sorted[allowed], HUGE_VAL) : HUGE_VAL;
  return rep;
}

}  // namespace

double grid_energy_sq_1d(const EmpiricalMeasure& x, const EmpiricalMeasure& y, double gamma,
                         std::size_t bins) {
  if (x.dim() != 1 || y.dim() != 1) throw DimensionMismatch("grid energy is one-dimensional");
  (void)GammaOrder(gamma, 1);
  const auto values = pooled_values(x, y);
  const auto b = bin_pooled(values, bins);
  std::vector<double> s(bins, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) s[b.index[i]] += x.weight(i);
  for (std::size_t j = 0; j < y.size(); ++j) s[b.index[x.size() + j]] -= y.weight(j);
  return GridKernel(bins, b.h, gamma).energy(s);
}

double chi_square_1d(const EmpiricalMeasure& x, const EmpiricalMeasure& y, std::size_t bins) {
  if (x.dim() != 1 || y.dim() != 1) throw DimensionMismatch("chi-square baseline is one-dimensional");
  const auto b = bin_pooled(pooled_values(x, y), bins);
  std::vector<char> in_x(x.size() + y.size(), 0);
  std::fill(in_x.begin(), in_x.begin() + static_cast<std::ptrdiff_t>(x.size()), 1);
  return chi_square_counts(b.index, in_x, bins, x.size(), y.size());
}

double evaluate_statistic(const StatisticSpec& spec, const EmpiricalMeasure& x,
                          const EmpiricalMeasure& y, const Executor& ex) {
  if (x.dim() != y.dim()) throw DimensionMismatch("samples have different dimensions");
  switch (spec.kind) {
    case StatisticKind::kEnergy: {
      const double g = spec.gamma_at(std::min(x.size(), y.size()));
      if (x.dim() == 1 && spec.grid_bins > 0 && g != 1.0) {
        return grid_energy_sq_1d(x, y, g, spec.grid_bins);
      }
      const GammaOrder go(g, x.dim());
      if (x.dim() == 1) return energy_sq_1d_exact(as_projection(x, y), go);
      return energy_sq_vstat(x, y, go, ex);
    }
    case StatisticKind::kDhbar:
      return dhbar(x, y, spec.n_dirs, spec.direction_seed, ex).value;
    case StatisticKind::kTdk:
      return t_stat_dk(x, y, spec.k, spec.n_dirs, spec.direction_seed, ex);
    case StatisticKind::kChiSquare:
      return chi_square_1d(x, y, spec.chi_bins);
  }
  throw InvalidArgument("unknown statistic");
}

TestReport permutation_test(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                            const StatisticSpec& spec, double level, std::size_t permutations,
                            std::uint64_t seed, const Executor& ex) {
  require_uniform(x, y);
  // Parallelism goes to the permutations; each statistic runs serially.
  const Executor& serial = Executor::global();
  auto rep = run_permutations(make_engine(spec, x, y, serial), x.size(), y.size(), level,
                              permutations, seed, ex);
  rep.statistic_name = spec.name();
  rep.method = dhbar_method(spec, x, y);
  return rep;
}

TestReport permutation_test(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                            const StatisticFn& statistic, const std::string& name, double level,
                            std::size_t permutations, std::uint64_t seed, const Executor& ex) {
  require_uniform(x, y);
  auto rep = run_permutations(generic_engine(x, y, statistic), x.size(), y.size(), level,
                              permutations, seed, ex);
  rep.statistic_name = name;
  return rep;
}

double threshold_schedule(std::size_t n, double exponent) {
  if (!(exponent > 0.0 && exponent < 0.5)) {
    throw InvalidArgument("threshold exponent must lie in (0, 1/2)");
  }
  if (n == 0) throw InvalidArgument("n must be positive");
  return std::pow(static_cast<double>(n), -exponent);
}

TestReport threshold_test(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                          const StatisticSpec& spec, double exponent, const Executor& ex) {
  require_uniform(x, y);
  TestReport rep;
  rep.statistic_name = spec.name();
  rep.n = x.size();
  rep.m = y.size();
  rep.threshold = threshold_schedule(std::min(x.size(), y.size()), exponent);
  rep.observed = evaluate_statistic(spec, x, y, ex);
  rep.reject = rep.observed >= rep.threshold;
  rep.calibration = "schedule";
  rep.method = dhbar_method(spec, x, y);
  return rep;
}

double tst_bad_budget(double epsilon, double beta, std::size_t dim, double c) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  const double d = static_cast<double>(dim);
  return std::pow(std::log(1.0 / epsilon), c) * std::pow(epsilon, -(2.0 * beta + d + 1.0) / beta);
}

std::vector<PowerRecord> power_curve(const DistributionSpec& p, const DistributionSpec& q,
                                     const std::vector<StatisticSpec>& statistics,
                                     const std::vector<std::size_t>& n_list,
                                     const PowerOptions& opts, const Executor& ex) {
  validate_spec(p);
  validate_spec(q);
  if (spec_dim(p) != spec_dim(q)) throw DimensionMismatch("p and q live in different dimensions");
  if (statistics.empty() || n_list.empty() || opts.trials == 0) {
    throw InvalidArgument("power curve needs statistics, sizes and trials");
  }
  const std::size_t ns = statistics.size();
  std::vector<PowerRecord> out;
  std::vector<std::vector<std::pair<double, bool>>> cells(ns * n_list.size());
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const std::size_t n = n_list[ni];
    if (n < 2) throw InvalidArgument("sample sizes must be at least 2");
    // One trial per task; statistics inside a trial share the samples.
    const auto rows = ex.map<std::vector<std::pair<double, bool>>>(opts.trials, [&](std::size_t t) {
      const std::uint64_t ts = substream(substream(opts.seed, ni), t);
      const auto x = sample(p, n, substream(ts, "p"));
      const auto y = sample(q, n, substream(ts, "q"));
      std::vector<std::pair<double, bool>> r;
      for (std::size_t s = 0; s < ns; ++s) {
        const auto rep = permutation_test(x, y, statistics[s], opts.level, opts.permutations,
                                          substream(ts, s), Executor::global());
        r.emplace_back(rep.observed, rep.reject);
      }
      return r;
    });
    for (std::size_t s = 0; s < ns; ++s) {
      auto& cell = cells[s * n_list.size() + ni];
      for (const auto& r : rows) cell.push_back(r[s]);
    }
  }
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
      const auto& cell = cells[s * n_list.size() + ni];
      CompensatedSum sum, sq;
      std::size_t rejections = 0;
      for (const auto& [v, r] : cell) {
        sum += v;
        rejections += r;
      }
      const double tn = static_cast<double>(cell.size());
      const double mean = sum.value() / tn;
      for (const auto& c : cell) sq += (c.first - mean) * (c.first - mean);
      const double var = cell.size() > 1 ? sq.value() / (tn - 1.0) : 0.0;
      out.push_back({statistics[s].name(), n_list[ni], opts.trials,
                     static_cast<double>(rejections) / tn, mean, std::sqrt(var / tn), opts.seed});
    }
  }
  return out;
}

}  // namespace edist
