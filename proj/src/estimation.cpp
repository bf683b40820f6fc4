#include "edist/estimation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "edist/error.hpp"
#include "edist/rng.hpp"
#include "edist/sliced.hpp"
#include "edist/summation.hpp"

namespace edist {

// ---------------------------------------------------------------------------
// GeneratorModel

GeneratorModel::GeneratorModel(GeneratorKind kind, std::size_t dim, std::size_t components,
                               std::vector<double> theta)
    : kind_(kind), dim_(dim), components_(components), theta_(std::move(theta)) {
  if (dim == 0) throw InvalidArgument("generator dimension must be positive");
  validate_theta(theta_);
}

GeneratorModel GeneratorModel::gaussian_mixture(std::size_t dim, std::size_t components) {
  if (components == 0) throw InvalidArgument("mixture needs at least one component");
  return GeneratorModel(GeneratorKind::kGaussianMixture, dim, components,
                        std::vector<double>(components * (1 + dim), 0.0));
}

GeneratorModel GeneratorModel::gaussian_mixture(std::size_t dim, const std::vector<double>& logits,
                                                const std::vector<std::vector<double>>& means) {
  if (logits.empty() || logits.size() != means.size()) {
    throw InvalidArgument("mixture needs one logit per mean vector");
  }
  std::vector<double> theta = logits;
  for (const auto& mu : means) {
    if (mu.size() != dim) throw DimensionMismatch("mixture mean has the wrong dimension");
    theta.insert(theta.end(), mu.begin(), mu.end());
  }
  return GeneratorModel(GeneratorKind::kGaussianMixture, dim, logits.size(), std::move(theta));
}

GeneratorModel GeneratorModel::affine(std::size_t dim) {
  std::vector<double> theta(dim * dim + dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) theta[i * dim + i] = 1.0;
  return GeneratorModel(GeneratorKind::kAffine, dim, 0, std::move(theta));
}

GeneratorModel GeneratorModel::affine(std::size_t dim, const std::vector<double>& a,
                                      const std::vector<double>& b) {
  if (a.size() != dim * dim || b.size() != dim) {
    throw DimensionMismatch("affine generator needs a d x d matrix and a d-vector");
  }
  std::vector<double> theta = a;
  theta.insert(theta.end(), b.begin(), b.end());
  return GeneratorModel(GeneratorKind::kAffine, dim, 0, std::move(theta));
}

std::string GeneratorModel::kind_name() const {
  return kind_ == GeneratorKind::kGaussianMixture ? "gaussian-mixture" : "affine";
}

void GeneratorModel::validate_theta(const std::vector<double>& theta) const {
  const std::size_t expected =
      kind_ == GeneratorKind::kAffine ? dim_ * dim_ + dim_ : components_ * (1 + dim_);
  if (theta.size() != expected) {
    throw DimensionMismatch("parameter vector has length " + std::to_string(theta.size()) +
                            ", expected " + std::to_string(expected));
  }
  for (double v : theta) {
    if (!std::isfinite(v)) throw InvalidArgument("parameters must be finite");
  }
}

void GeneratorModel::set_theta(std::vector<double> theta) {
  validate_theta(theta);
  theta_ = std::move(theta);
}

namespace {

std::vector<double> softmax(const double* logits, std::size_t k) {
  const double top = *std::max_element(logits, logits + k);
  std::vector<double> w(k);
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) total += (w[c] = std::exp(logits[c] - top));
  for (double& v : w) v /= total;
  return w;
}

// Component index for each uniform draw.
std::vector<std::size_t> choose_components(const std::vector<double>& theta, std::size_t k,
                                           const FrozenNoise& noise) {
  const auto w = softmax(theta.data(), k);
  std::vector<double> cdf(k);
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  std::vector<std::size_t> out(noise.m);
  for (std::size_t j = 0; j < noise.m; ++j) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), noise.u[j]);
    out[j] = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), k - 1);
  }
  return out;
}

}  // namespace

std::vector<double> GeneratorModel::mixture_weights() const {
  if (kind_ != GeneratorKind::kGaussianMixture) throw InvalidArgument("not a mixture generator");
  return softmax(theta_.data(), components_);
}

FrozenNoise GeneratorModel::draw_noise(std::size_t m, std::uint64_t seed) const {
  if (m == 0) throw InvalidArgument("batch size must be positive");
  FrozenNoise noise{m, dim_, std::vector<double>(m * dim_), std::vector<double>(m)};
  Rng rng(seed);
  for (double& v : noise.z) v = rng.normal();
  for (double& v : noise.u) v = rng.uniform();
  return noise;
}

EmpiricalMeasure GeneratorModel::push(const std::vector<double>& theta,
                                      const FrozenNoise& noise) const {
  validate_theta(theta);
  if (noise.dim != dim_) throw DimensionMismatch("noise dimension differs from the generator");
  const std::size_t d = dim_;
  std::vector<double> x(noise.m * d);
  if (kind_ == GeneratorKind::kAffine) {
    const double* a = theta.data();
    const double* b = theta.data() + d * d;
    for (std::size_t j = 0; j < noise.m; ++j) {
      for (std::size_t r = 0; r < d; ++r) {
        double s = b[r];
        for (std::size_t c = 0; c < d; ++c) s += a[r * d + c] * noise.z[j * d + c];
        x[j * d + r] = s;
      }
    }
  } else {
    const auto comp = choose_components(theta, components_, noise);
    const double* means = theta.data() + components_;
    for (std::size_t j = 0; j < noise.m; ++j) {
      for (std::size_t r = 0; r < d; ++r) x[j * d + r] = means[comp[j] * d + r] + noise.z[j * d + r];
    }
  }
  return EmpiricalMeasure(std::move(x), d);
}

std::vector<double> GeneratorModel::vjp(const std::vector<double>& theta, const FrozenNoise& noise,
                                        const std::vector<double>& upstream) const {
  validate_theta(theta);
  const std::size_t d = dim_;
  if (upstream.size() != noise.m * d) throw DimensionMismatch("upstream gradient has the wrong size");
  std::vector<double> g(theta.size(), 0.0);
  if (kind_ == GeneratorKind::kAffine) {
    for (std::size_t j = 0; j < noise.m; ++j) {
      for (std::size_t r = 0; r < d; ++r) {
        const double up = upstream[j * d + r];
        for (std::size_t c = 0; c < d; ++c) g[r * d + c] += up * noise.z[j * d + c];
        g[d * d + r] += up;
      }
    }
  } else {
    const auto comp = choose_components(theta, components_, noise);
    for (std::size_t j = 0; j < noise.m; ++j) {
      for (std::size_t r = 0; r < d; ++r) g[components_ + comp[j] * d + r] += upstream[j * d + r];
    }
  }
  return g;
}

std::vector<double> GeneratorModel::jacobian(const std::vector<double>& theta,
                                             const FrozenNoise& noise) const {
  const std::size_t rows = noise.m * dim_;
  const std::size_t p = theta.size();
  std::vector<double> jac(rows * p, 0.0);
  std::vector<double> unit(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    unit[i] = 1.0;
    const auto row = vjp(theta, noise, unit);
    std::copy(row.begin(), row.end(), jac.begin() + static_cast<std::ptrdiff_t>(i * p));
    unit[i] = 0.0;
  }
  return jac;
}

double GeneratorModel::jacobian_check(const FrozenNoise& noise, double h) const {
  const auto jac = jacobian(theta_, noise);
  const std::size_t rows = noise.m * dim_;
  const std::size_t p = theta_.size();
  double scale = 1.0;
  for (double v : jac) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  std::vector<double> plus = theta_, minus = theta_;
  for (std::size_t k = 0; k < p; ++k) {
    plus[k] += h;
    minus[k] -= h;
    const auto xp = push(plus, noise);
    const auto xm = push(minus, noise);
    for (std::size_t i = 0; i < rows; ++i) {
      const double fd = (xp.coords()[i] - xm.coords()[i]) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - jac[i * p + k]) / scale);
    }
    plus[k] = minus[k] = theta_[k];
  }
  return worst;
}

// ---------------------------------------------------------------------------
// SGD

EnergyObjective::EnergyObjective(const EmpiricalMeasure& data, const GammaOrder& g,
                                 const Executor& ex)
    : data_(data), g_(g), ex_(ex) {
  data_self_ = weighted_pair_sum(data_, data_, g_.gamma(), ex_);
}

double EnergyObjective::loss(const EmpiricalMeasure& batch) const {
  CompensatedSum s;
  s += 2.0 * weighted_pair_sum(batch, data_, g_.gamma(), ex_);
  s += -weighted_pair_sum(batch, batch, g_.gamma(), ex_);
  s += -data_self_;
  return s.value();
}

LossAndGradient EnergyObjective::evaluate(const GeneratorModel& model,
                                          const std::vector<double>& theta,
                                          const FrozenNoise& noise) const {
  const auto batch = model.push(theta, noise);
  LossAndGradient out;
  out.loss = loss(batch);
  out.gradient = model.vjp(theta, noise, grad_energy_sq(batch, data_, g_));
  return out;
}

SgdResult fit_min_energy_sgd(const EmpiricalMeasure& data, const GeneratorModel& model,
                             const GammaOrder& g, const SgdOptions& opts, const Executor& ex) {
  if (data.dim() != model.dim()) throw DimensionMismatch("model and data dimensions differ");
  if (opts.batch_m < 2) throw InvalidArgument("batch_m must be at least 2");
  if (!(opts.learning_rate >= 0.0) || !std::isfinite(opts.learning_rate)) {
    throw InvalidArgument("learning rate must be finite and nonnegative");
  }
  SgdResult result{model, {}};
  if (opts.self_check_tolerance >= 0.0) {
    const auto probe = model.draw_noise(std::min<std::size_t>(opts.batch_m, 16),
                                        substream(opts.seed, "self-check"));
    const double gap = model.jacobian_check(probe);
    if (gap > opts.self_check_tolerance) {
      throw NumericalError("generator Jacobian self-check failed: relative gap " +
                           std::to_string(gap));
    }
  }
  const EnergyObjective objective(data, g, ex);
  std::vector<double> theta = model.theta();
  const std::uint64_t steps_seed = substream(opts.seed, "steps");
  result.trace.reserve(opts.steps);
  for (std::size_t step = 0; step < opts.steps; ++step) {
    const auto noise = model.draw_noise(opts.batch_m, substream(steps_seed, step));
    const auto lg = objective.evaluate(result.model, theta, noise);
    bool finite = std::isfinite(lg.loss);
    for (double v : lg.gradient) finite = finite && std::isfinite(v);
    if (!finite) throw NumericalError("SGD diverged at step " + std::to_string(step));
    result.trace.push_back(lg.loss);
    for (std::size_t k = 0; k < theta.size(); ++k) {
      theta[k] -= opts.learning_rate * lg.gradient[k];
      if (!std::isfinite(theta[k])) {
        throw NumericalError("SGD diverged at step " + std::to_string(step) + ": parameters overflowed");
      }
    }
  }
  result.model.set_theta(theta);
  return result;
}

double gamma_for(GammaSchedule s, std::size_t n) {
  const double nd = static_cast<double>(n);
  switch (s) {
    case GammaSchedule::kOne:
      return 1.0;
    case GammaSchedule::kInverseLog:
      if (n < 3) throw InvalidArgument("1/log n needs n >= 3");
      return 1.0 / std::log(nd);
    case GammaSchedule::kInverseLogLog:
      if (n < 6) throw InvalidArgument("1/log log n needs n >= 6");
      return 1.0 / std::log(std::log(nd));
  }
  throw InvalidArgument("unknown gamma schedule");
}

GammaSchedule parse_gamma_schedule(const std::string& name) {
  if (name == "one") return GammaSchedule::kOne;
  if (name == "inv-log") return GammaSchedule::kInverseLog;
  if (name == "inv-loglog") return GammaSchedule::kInverseLogLog;
  throw InvalidArgument("unknown gamma schedule '" + name + "' (one, inv-log, inv-loglog)");
}

// ---------------------------------------------------------------------------
// Codebook

EmpiricalMeasure Codebook::as_measure(const std::vector<double>& pmf) const {
  if (pmf.size() != k()) throw DimensionMismatch("pmf length differs from the codebook size");
  std::vector<double> coords;
  coords.reserve(k() * dim);
  for (const auto& c : codewords) coords.insert(coords.end(), c.begin(), c.end());
  return EmpiricalMeasure(std::move(coords), dim, pmf);
}

Codebook build_codebook(std::size_t k, double delta_target, std::uint64_t seed,
                        const CodebookOptions& opts) {
  if (k < 2) throw InvalidArgument("codebook needs k >= 2");
  if (!(delta_target > 0.0 && delta_target < std::sqrt(2.0))) {
    throw InvalidArgument("delta_target must lie in (0, sqrt 2)");
  }
  std::size_t dim = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(opts.c_dim * std::log(static_cast<double>(k)))));
  double best = 0.0;
  for (int attempt = 0; attempt <= opts.max_doublings; ++attempt, dim *= 2) {
    const std::size_t words = (dim + 63) / 64;
    std::vector<std::uint64_t> bits(k * words, 0);
    Rng rng(substream(seed, static_cast<std::uint64_t>(attempt)));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t w = 0; w < words; ++w) {
        std::uint64_t v = rng.bits();
        const std::size_t used = std::min<std::size_t>(64, dim - 64 * w);
        if (used < 64) v &= (std::uint64_t{1} << used) - 1;
        bits[i * words + w] = v;
      }
    }
    std::size_t min_hamming = dim;
    for (std::size_t i = 0; i < k && min_hamming > 0; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        std::size_t h = 0;
        for (std::size_t w = 0; w < words; ++w) {
          h += static_cast<std::size_t>(std::popcount(bits[i * words + w] ^ bits[j * words + w]));
        }
        min_hamming = std::min(min_hamming, h);
      }
    }
    const double dmin = 2.0 * std::sqrt(static_cast<double>(min_hamming) / static_cast<double>(dim));
    best = std::max(best, dmin);
    if (min_hamming > 0 && dmin >= delta_target) {
      Codebook cb;
      cb.dim = dim;
      cb.min_dist = dmin;
      cb.seed = seed;
      const double s = 1.0 / std::sqrt(static_cast<double>(dim));
      cb.codewords.assign(k, std::vector<double>(dim));
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t t = 0; t < dim; ++t) {
          const bool bit = (bits[i * words + t / 64] >> (t % 64)) & 1u;
          cb.codewords[i][t] = bit ? s : -s;
        }
      }
      return cb;
    }
  }
  throw ConvergenceError("codebook construction failed for k = " + std::to_string(k) +
                         ": best minimum distance " + std::to_string(best) + " < " +
                         std::to_string(delta_target));
}

// ---------------------------------------------------------------------------
// Simplex-constrained quadratic

std::vector<double> project_simplex(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgument("cannot project an empty vector");
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
  return out;
}

namespace {

std::vector<double> distance_matrix(const Codebook& cb, double gamma) {
  const std::size_t k = cb.k();
  std::vector<double> d(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      d[i * k + j] = d[j * k + i] = distance_pow(cb.codewords[i], cb.codewords[j], gamma);
    }
  }
  return d;
}

// Restricted problem on the support S: f(x) = -(x - p)^T D (x - p).
struct FaceProblem {
  std::size_t s = 0;
  std::vector<double> d;  // s x s
  std::vector<double> p;  // empirical pmf on S
  std::vector<double> dp_out;  // (D_{S, not S} p_{not S}), a constant shift of the gradient
  double off_mass = 0.0;

  std::vector<double> residual_product(const std::vector<double>& x) const {
    // D_SS (x - p_S) - dp_out
    std::vector<double> r(s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
      double acc = -dp_out[i];
      for (std::size_t j = 0; j < s; ++j) acc += d[i * s + j] * (x[j] - p[j]);
      r[i] = acc;
    }
    return r;
  }
  std::vector<double> gradient(const std::vector<double>& x) const {
    auto r = residual_product(x);
    for (double& v : r) v *= -2.0;
    return r;
  }
};

double fw_gap(const std::vector<double>& x, const std::vector<double>& grad) {
  double inner = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) inner += grad[i] * x[i];
  return inner - *std::min_element(grad.begin(), grad.end());
}

}  // namespace

double code_quadratic_form(const Codebook& cb, const std::vector<double>& w, double gamma) {
  if (w.size() != cb.k()) throw DimensionMismatch("vector length differs from the codebook size");
  CompensatedSum acc;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      acc += -2.0 * w[i] * w[j] * distance_pow(cb.codewords[i], cb.codewords[j], gamma);
    }
  }
  return acc.value();
}

SimplexResult fit_discrete_simplex(const std::vector<std::size_t>& counts, const Codebook& cb,
                                   const std::vector<std::size_t>& support,
                                   const SimplexOptions& opts) {
  const std::size_t k = cb.k();
  if (counts.size() != k) throw DimensionMismatch("counts length differs from the codebook size");
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (n == 0) throw InvalidArgument("counts must sum to at least one");
  std::vector<std::size_t> sup = support;
  if (sup.empty()) {
    sup.resize(k);
    std::iota(sup.begin(), sup.end(), std::size_t{0});
  }
  std::sort(sup.begin(), sup.end());
  if (std::adjacent_find(sup.begin(), sup.end()) != sup.end() || sup.back() >= k) {
    throw InvalidArgument("support must list distinct symbol indices below k");
  }
  const auto dfull = distance_matrix(cb, opts.gamma);
  std::vector<double> pfull(k);
  for (std::size_t i = 0; i < k; ++i) pfull[i] = static_cast<double>(counts[i]) / static_cast<double>(n);

  FaceProblem fp;
  fp.s = sup.size();
  fp.d.resize(fp.s * fp.s);
  fp.p.resize(fp.s);
  fp.dp_out.assign(fp.s, 0.0);
  std::vector<bool> in_support(k, false);
  for (std::size_t i : sup) in_support[i] = true;
  for (std::size_t a = 0; a < fp.s; ++a) {
    fp.p[a] = pfull[sup[a]];
    for (std::size_t b = 0; b < fp.s; ++b) fp.d[a * fp.s + b] = dfull[sup[a] * k + sup[b]];
    for (std::size_t j = 0; j < k; ++j) {
      if (!in_support[j]) fp.dp_out[a] += dfull[sup[a] * k + j] * pfull[j];
    }
  }

  // Objective on the full vector, written via the restricted pieces.
  auto objective = [&](const std::vector<double>& x) {
    std::vector<double> w(k);
    for (std::size_t j = 0; j < k; ++j) w[j] = -pfull[j];
    for (std::size_t a = 0; a < fp.s; ++a) w[sup[a]] += x[a];
    return code_quadratic_form(cb, w, opts.gamma);
  };

  double lip = 0.0;
  for (std::size_t a = 0; a < fp.s; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < fp.s; ++b) row += fp.d[a * fp.s + b];
    lip = std::max(lip, 2.0 * row);
  }
  if (lip == 0.0) lip = 1.0;

  SimplexResult res;
  std::vector<double> x(fp.s, 1.0 / static_cast<double>(fp.s));
  std::vector<double> y = x, x_prev = x;
  double t = 1.0;
  double fx = objective(x);
  double gap = fw_gap(x, fp.gradient(x));
  std::size_t it = 0;
  for (; it < opts.max_iterations && gap >= opts.gap_tolerance; ++it) {
    const auto gy = fp.gradient(y);
    std::vector<double> step(fp.s);
    for (std::size_t a = 0; a < fp.s; ++a) step[a] = y[a] - gy[a] / lip;
    x_prev = x;
    x = project_simplex(step);
    const double fnew = objective(x);
    if (fnew > fx) {
      // Adaptive restart: drop momentum and take a plain projected step.
      t = 1.0;
      y = x_prev;
      x = x_prev;
      const auto gx = fp.gradient(x);
      for (std::size_t a = 0; a < fp.s; ++a) step[a] = x[a] - gx[a] / lip;
      x = project_simplex(step);
      fx = objective(x);
      y = x;
    } else {
      fx = fnew;
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      for (std::size_t a = 0; a < fp.s; ++a) y[a] = x[a] + (t - 1.0) / t_next * (x[a] - x_prev[a]);
      t = t_next;
    }
    gap = fw_gap(x, fp.gradient(x));
  }

  // Exact solve on the active face: stationarity of the quadratic under
  // sum x = 1, accepted if it stays feasible and does not increase f.
  std::vector<std::size_t> active;
  for (std::size_t a = 0; a < fp.s; ++a) {
    if (x[a] > 1e-12) active.push_back(a);
  }
  if (!active.empty()) {
    const std::size_t na = active.size();
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(na + 1),
                                                static_cast<Eigen::Index>(na + 1));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(na + 1));
    for (std::size_t a = 0; a < na; ++a) {
      const auto ia = static_cast<Eigen::Index>(a);
      double dp = fp.dp_out[active[a]];
      for (std::size_t b = 0; b < fp.s; ++b) dp += fp.d[active[a] * fp.s + b] * fp.p[b];
      for (std::size_t b = 0; b < na; ++b) {
        kkt(ia, static_cast<Eigen::Index>(b)) = -2.0 * fp.d[active[a] * fp.s + active[b]];
      }
      kkt(ia, static_cast<Eigen::Index>(na)) = -1.0;
      kkt(static_cast<Eigen::Index>(na), ia) = 1.0;
      rhs(ia) = -2.0 * dp;
    }
    rhs(static_cast<Eigen::Index>(na)) = 1.0;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    std::vector<double> cand(fp.s, 0.0);
    bool feasible = sol.allFinite();
    for (std::size_t a = 0; a < na && feasible; ++a) {
      const double v = sol(static_cast<Eigen::Index>(a));
      if (v < -1e-14) feasible = false;
      cand[active[a]] = std::max(0.0, v);
    }
    if (feasible) {
      const double total = std::accumulate(cand.begin(), cand.end(), 0.0);
      for (double& v : cand) v /= total;
      const double fc = objective(cand);
      const double gc = fw_gap(cand, fp.gradient(cand));
      if (fc <= fx + 1e-15 && gc <= std::max(gap, opts.gap_tolerance)) {
        x = cand;
        fx = fc;
        gap = gc;
      }
    }
  }

  res.pmf.assign(k, 0.0);
  for (std::size_t a = 0; a < fp.s; ++a) res.pmf[sup[a]] = x[a];
  res.objective = std::max(0.0, fx);
  res.fw_gap = gap;
  res.iterations = it;
  res.converged = gap < opts.gap_tolerance;
  return res;
}

std::vector<std::size_t> multinomial_counts(const std::vector<double>& pmf, std::size_t n,
                                            std::uint64_t seed) {
  if (pmf.empty()) throw InvalidArgument("empty pmf");
  std::vector<double> cdf(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
  std::vector<std::size_t> counts(pmf.size(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    ++counts[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), pmf.size() - 1)];
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Stopping criterion

void StoppingConfig::validate() const {
  if (n < 2) throw InvalidArgument("stopping: n must be at least 2");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("stopping: delta must lie in (0, 1)");
  if (!(c_cal > 0.0)) throw InvalidArgument("stopping: c_cal must be positive");
  if (!(tau > 0.0)) throw InvalidArgument("stopping: tau must be positive");
  if (!(gamma > 0.0 && gamma < 2.0)) throw InvalidArgument("stopping: gamma must lie in (0, 2)");
}

std::size_t StoppingConfig::samples_for(std::size_t k) const {
  if (k == 0) throw InvalidArgument("candidate index is 1-based");
  const double kd = static_cast<double>(k);
  const double v = c_cal * static_cast<double>(n) * std::log(kd * kd / delta) / std::log(1.0 / delta);
  return static_cast<std::size_t>(std::ceil(v));
}

double StoppingConfig::threshold() const {
  return tau * std::sqrt(std::log(1.0 / delta) / static_cast<double>(n));
}

StopReport stopping_verifier(const EmpiricalMeasure& data,
                             const std::function<std::optional<GeneratorModel>(std::size_t)>& candidates,
                             const StoppingConfig& cfg, const Executor& ex) {
  StoppingConfig c = cfg;
  if (c.n == 0) c.n = data.size();
  c.validate();
  if (c.n != data.size()) throw InvalidArgument("stopping: n differs from the data size");
  const GammaOrder g(c.gamma, data.dim());
  StopReport rep;
  rep.threshold = c.threshold();
  for (std::size_t k = 1; k <= c.max_candidates; ++k) {
    const auto cand = candidates(k);
    if (!cand) break;
    if (cand->dim() != data.dim()) throw DimensionMismatch("candidate dimension differs from data");
    const std::size_t mk = c.samples_for(k);
    const auto draws = cand->sample(mk, substream(c.seed, k));
    const double e2 = data.dim() == 1 ? energy_sq_1d_exact(as_projection(draws, data), g)
                                      : energy_sq_vstat(draws, data, g, ex);
    const double value = std::sqrt(std::max(0.0, e2));
    rep.values.push_back(value);
    rep.sample_sizes.push_back(mk);
    if (value <= rep.threshold) {
      rep.stopped = true;
      rep.k_star = k;
      rep.certificate = value;
      break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Rate experiments

namespace {

RatePoint summarize(std::size_t n, const std::vector<double>& v, double reference) {
  CompensatedSum s, sq;
  for (double x : v) s += x;
  const double mean = s.value() / static_cast<double>(v.size());
  for (double x : v) sq += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? sq.value() / static_cast<double>(v.size() - 1) : 0.0;
  return {n, mean, std::sqrt(var / static_cast<double>(v.size())), reference};
}

void check_n_list(const std::vector<std::size_t>& n_list, std::size_t trials) {
  if (n_list.size() < 2) throw InvalidArgument("n_list needs at least two sizes");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] == 0 || (i > 0 && n_list[i] <= n_list[i - 1])) {
      throw InvalidArgument("n_list must be positive and strictly increasing");
    }
  }
  if (trials == 0) throw InvalidArgument("trials must be positive");
}

LogLogFit fit_points(const std::vector<RatePoint>& pts) {
  std::vector<double> x, y;
  for (const auto& p : pts) {
    x.push_back(static_cast<double>(p.n));
    y.push_back(p.mean);
  }
  return fit_loglog(x, y);
}

}  // namespace

RateReport discrete_rate_experiment(std::size_t k, const std::vector<std::size_t>& n_list,
                                    std::size_t trials, std::uint64_t seed, const Executor& ex) {
  check_n_list(n_list, trials);
  const Codebook cb = build_codebook(k, 1.0, substream(seed, "codebook"));
  std::vector<double> truth(k);
  {
    Rng rng(substream(seed, "truth"));
    double total = 0.0;
    for (double& v : truth) total += (v = -std::log(1.0 - rng.uniform()));
    for (double& v : truth) v /= total;
  }
  RateReport rep;
  rep.quantity = "tv_sq";
  rep.trials = trials;
  rep.seed = seed;
  const double kd = static_cast<double>(k);
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const std::size_t n = n_list[ni];
    const auto vals = ex.map<double>(trials, [&](std::size_t t) {
      const auto counts = multinomial_counts(truth, n, substream(substream(seed, ni), t));
      const auto fit = fit_discrete_simplex(counts, cb);
      double tv = 0.0;
      for (std::size_t i = 0; i < k; ++i) tv += std::abs(fit.pmf[i] - truth[i]);
      tv *= 0.5;
      return tv * tv;
    });
    rep.points.push_back(summarize(n, vals, kd * std::log(kd) / static_cast<double>(n)));
  }
  rep.fit = fit_points(rep.points);
  return rep;
}

RateReport concentration_experiment(std::size_t dim, double gamma,
                                    const std::vector<std::size_t>& n_list, std::size_t trials,
                                    std::size_t reference_n, std::uint64_t seed,
                                    const Executor& ex) {
  check_n_list(n_list, trials);
  if (reference_n < 2) throw InvalidArgument("reference sample needs at least two points");
  (void)GammaOrder(gamma, dim);  // validates gamma and dim
  const UniformBall ball{dim};
  const double bound_const =
      10.0 * std::pow(static_cast<double>(dim), gamma / 2.0) * uniform_ball_moment(dim, gamma);
  // Per trial: a fresh reference sample Y stands in for nu. With V the
  // V-statistic, E V(nu_n, Y) = A/n + A/N where A = E||X - X'||^gamma, and the
  // U-statistic of Y estimates A without bias, so V - U(Y)/N is unbiased for
  // E[E^2(nu, nu_n)] = A/n.
  const auto per_trial = ex.map<std::vector<double>>(trials, [&](std::size_t t) {
    const std::uint64_t ts = substream(seed, t);
    const auto ref = sample(ball, reference_n, substream(ts, "reference"));
    const double nn = static_cast<double>(reference_n);
    const double ref_self = weighted_pair_sum(ref, ref, gamma);
    const double ustat = ref_self * nn / (nn - 1.0);
    std::vector<double> out;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
      const auto x = sample(ball, n_list[ni], substream(ts, ni));
      CompensatedSum s;
      s += 2.0 * weighted_pair_sum(x, ref, gamma);
      s += -weighted_pair_sum(x, x, gamma);
      s += -ref_self;
      s += -ustat / nn;
      out.push_back(s.value());
    }
    return out;
  });
  RateReport rep;
  rep.quantity = "energy_sq";
  rep.trials = trials;
  rep.seed = seed;
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    std::vector<double> v(trials);
    for (std::size_t t = 0; t < trials; ++t) v[t] = per_trial[t][ni];
    rep.points.push_back(summarize(n_list[ni], v, bound_const / static_cast<double>(n_list[ni])));
  }
  rep.fit = fit_points(rep.points);
  return rep;
}

}  // namespace edist
