#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "edist/energy.hpp"
#include "edist/measures.hpp"
#include "edist/parallel.hpp"
#include "edist/regression.hpp"

namespace edist {

// ---------------------------------------------------------------------------
// Parametric generators

enum class GeneratorKind { kGaussianMixture, kAffine };

/// Noise that fully determines one generator batch. Freezing it makes the
/// pushforward a deterministic function of theta.
struct FrozenNoise {
  std::size_t m = 0;
  std::size_t dim = 0;
  /// m x dim standard normal draws, row-major.
  std::vector<double> z;
  /// m uniforms on [0, 1) selecting mixture components.
  std::vector<double> u;
};

/// theta -> T_theta(Z) with a pathwise parameter Jacobian.
///
/// Gaussian mixture(d, K): theta = [logits (K), means (K x d)], unit
/// covariance. A sample picks component c by inverting the softmax CDF at u
/// and returns means[c] + z.
/// Affine(d): theta = [A (d x d, row-major), b (d)], a sample is A z + b.
class GeneratorModel {
 public:
  static GeneratorModel gaussian_mixture(std::size_t dim, std::size_t components);
  static GeneratorModel gaussian_mixture(std::size_t dim, const std::vector<double>& logits,
                                         const std::vector<std::vector<double>>& means);
  /// Identity map (A = I, b = 0).
  static GeneratorModel affine(std::size_t dim);
  static GeneratorModel affine(std::size_t dim, const std::vector<double>& a,
                               const std::vector<double>& b);

  GeneratorKind kind() const noexcept { return kind_; }
  std::string kind_name() const;
  std::size_t dim() const noexcept { return dim_; }
  /// K for mixtures, 0 for affine maps.
  std::size_t components() const noexcept { return components_; }
  std::size_t parameter_count() const noexcept { return theta_.size(); }
  const std::vector<double>& theta() const noexcept { return theta_; }
  void set_theta(std::vector<double> theta);

  /// Softmax of the logits (mixtures only).
  std::vector<double> mixture_weights() const;

  FrozenNoise draw_noise(std::size_t m, std::uint64_t seed) const;
  /// T_theta applied to frozen noise; uniform weights.
  EmpiricalMeasure push(const std::vector<double>& theta, const FrozenNoise& noise) const;
  EmpiricalMeasure push(const FrozenNoise& noise) const { return push(theta_, noise); }
  EmpiricalMeasure sample(std::size_t m, std::uint64_t seed) const {
    return push(draw_noise(m, seed));
  }

  /// sum_j <upstream_j, d x_j / d theta>: the parameter gradient of a loss
  /// whose gradient with respect to the batch points is `upstream` (m x dim).
  /// The component choice is piecewise constant in the logits, so their
  /// pathwise derivative is zero.
  std::vector<double> vjp(const std::vector<double>& theta, const FrozenNoise& noise,
                          const std::vector<double>& upstream) const;

  /// Dense Jacobian, (m * dim) x parameter_count, row-major.
  std::vector<double> jacobian(const std::vector<double>& theta, const FrozenNoise& noise) const;

  /// Largest relative gap between the analytic Jacobian and central finite
  /// differences (step h) on the given batch.
  double jacobian_check(const FrozenNoise& noise, double h = 1e-6) const;

 private:
  GeneratorModel(GeneratorKind kind, std::size_t dim, std::size_t components,
                 std::vector<double> theta);
  void validate_theta(const std::vector<double>& theta) const;

  GeneratorKind kind_;
  std::size_t dim_;
  std::size_t components_;
  std::vector<double> theta_;
};

/// E_gamma^2(T_theta(noise), data) and its gradient in theta.
struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Caches the data self-interaction term across calls.
class EnergyObjective {
 public:
  EnergyObjective(const EmpiricalMeasure& data, const GammaOrder& g,
                  const Executor& ex = Executor::global());
  /// Unclamped V-statistic of the batch against the data.
  double loss(const EmpiricalMeasure& batch) const;
  LossAndGradient evaluate(const GeneratorModel& model, const std::vector<double>& theta,
                           const FrozenNoise& noise) const;

 private:
  const EmpiricalMeasure& data_;
  GammaOrder g_;
  const Executor& ex_;
  double data_self_ = 0.0;
};

struct SgdOptions {
  std::size_t steps = 2000;
  std::size_t batch_m = 64;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  /// Jacobian self-check tolerance at startup; negative disables the check.
  double self_check_tolerance = 1e-5;
};

struct SgdResult {
  GeneratorModel model;
  /// Minibatch loss before each update.
  std::vector<double> trace;
};

/// Plain constant-step gradient descent on the minibatch energy loss.
/// Throws NumericalError on a non-finite loss or a failed self-check.
SgdResult fit_min_energy_sgd(const EmpiricalMeasure& data, const GeneratorModel& model,
                             const GammaOrder& g, const SgdOptions& opts,
                             const Executor& ex = Executor::global());

/// Preset gamma(n) schedules.
enum class GammaSchedule { kOne, kInverseLog, kInverseLogLog };
double gamma_for(GammaSchedule s, std::size_t n);
GammaSchedule parse_gamma_schedule(const std::string& name);

// ---------------------------------------------------------------------------
// Discrete estimation on a hypercube code

struct Codebook {
  /// k codewords with entries +-1/sqrt(dim).
  std::vector<std::vector<double>> codewords;
  std::size_t dim = 0;
  /// Certified minimum pairwise Euclidean distance.
  double min_dist = 0.0;
  std::uint64_t seed = 0;
  std::size_t k() const noexcept { return codewords.size(); }
  /// Codewords as a point set carrying the given pmf.
  EmpiricalMeasure as_measure(const std::vector<double>& pmf) const;
};

struct CodebookOptions {
  /// Initial dimension ceil(c_dim * ln k).
  double c_dim = 4.0;
  /// Dimension doublings before giving up.
  int max_doublings = 8;
};

/// Random code with min pairwise distance >= delta_target. Throws
/// ConvergenceError (with the achieved distance) when retries run out.
Codebook build_codebook(std::size_t k, double delta_target, std::uint64_t seed,
                        const CodebookOptions& opts = {});

struct SimplexOptions {
  std::size_t max_iterations = 100000;
  double gap_tolerance = 1e-10;
  /// Exponent of the distance kernel in the quadratic form.
  double gamma = 1.0;
};

struct SimplexResult {
  std::vector<double> pmf;
  /// E_gamma^2 between the fitted pmf and the empirical pmf on the code.
  double objective = 0.0;
  double fw_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// min over pmfs w supported on `support` (all symbols when empty) of
///   -sum_ij (w - p)_i (w - p)_j ||a_i - a_j||^gamma,  p = counts / n,
/// by accelerated projected gradient with adaptive restart, followed by an
/// exact solve on the detected active face.
SimplexResult fit_discrete_simplex(const std::vector<std::size_t>& counts, const Codebook& cb,
                                   const std::vector<std::size_t>& support = {},
                                   const SimplexOptions& opts = {});

/// The quadratic form -w^T D w on the code (D_ij = ||a_i - a_j||^gamma).
double code_quadratic_form(const Codebook& cb, const std::vector<double>& w, double gamma = 1.0);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(const std::vector<double>& v);

/// Multinomial counts of n draws from pmf.
std::vector<std::size_t> multinomial_counts(const std::vector<double>& pmf, std::size_t n,
                                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Stopping criterion

struct StoppingConfig {
  std::size_t n = 0;
  double delta = 0.05;
  double gamma = 1.0;
  double c_cal = 1.0;
  double tau = 1.5;
  std::size_t max_candidates = 20;
  std::uint64_t seed = 0;

  /// m_k = ceil(c_cal n log(k^2 / delta) / log(1 / delta)), k >= 1.
  std::size_t samples_for(std::size_t k) const;
  /// tau * sqrt(log(1 / delta) / n).
  double threshold() const;
  void validate() const;
};

struct StopReport {
  bool stopped = false;
  /// 1-based index of the accepted candidate (0 when none was accepted).
  std::size_t k_star = 0;
  double certificate = 0.0;
  double threshold = 0.0;
  std::vector<double> values;
  std::vector<std::size_t> sample_sizes;
};

/// Candidate k (1-based) is requested from `candidates`; std::nullopt ends the
/// stream. Each candidate is sampled m_k times and compared with the data by
/// sqrt(E_gamma^2); the first value within the threshold stops the search.
StopReport stopping_verifier(const EmpiricalMeasure& data,
                             const std::function<std::optional<GeneratorModel>(std::size_t)>& candidates,
                             const StoppingConfig& cfg, const Executor& ex = Executor::global());

// ---------------------------------------------------------------------------
// Rate experiments

struct RatePoint {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  /// Optional reference value (bound) at this n; 0 when not applicable.
  double reference = 0.0;
};

struct RateReport {
  std::string quantity;
  std::vector<RatePoint> points;
  LogLogFit fit;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

/// E TV^2(fitted, truth) of the discrete estimator for a random pmf on k
/// symbols. The reference column is k log(k) / n.
RateReport discrete_rate_experiment(std::size_t k, const std::vector<std::size_t>& n_list,
                                    std::size_t trials, std::uint64_t seed,
                                    const Executor& ex = Executor::global());

/// E[E_gamma^2(nu, nu_n)] for nu uniform on the unit ball in R^dim, with the
/// population cross terms replaced by an independent reference sample of size
/// `reference_n`. The reference column is 10 d^(gamma/2) M_gamma / n.
RateReport concentration_experiment(std::size_t dim, double gamma,
                                    const std::vector<std::size_t>& n_list, std::size_t trials,
                                    std::size_t reference_n, std::uint64_t seed,
                                    const Executor& ex = Executor::global());

}  // namespace edist
