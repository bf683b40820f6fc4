#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "edist/error.hpp"

namespace edist {

/// A weighted finite point set in R^d.
///
/// Points are stored row-major in one contiguous buffer. Weights are always
/// stored explicitly (uniform ones included), are nonnegative, and sum to one
/// within 1e-12. Instances are immutable after construction.
class EmpiricalMeasure {
 public:
  /// Uniform weights 1/n.
  EmpiricalMeasure(std::vector<double> coords, std::size_t dim);
  EmpiricalMeasure(std::vector<double> coords, std::size_t dim, std::vector<double> weights);

  static EmpiricalMeasure from_points(const std::vector<std::vector<double>>& points);
  /// One-dimensional measure with uniform weights.
  static EmpiricalMeasure on_line(std::vector<double> values);

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  double weight(std::size_t i) const noexcept { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> coords() const noexcept { return coords_; }

  /// True when every weight equals 1/n (bitwise, as produced by the
  /// uniform constructor, or within 1e-15 otherwise).
  bool has_uniform_weights() const noexcept { return uniform_; }

  /// Every coordinate multiplied by c.
  EmpiricalMeasure scaled(double c) const;

 private:
  void validate() const;

  std::vector<double> coords_;
  std::size_t dim_;
  std::vector<double> weights_;
  bool uniform_ = false;
};

/// Raised by load_csv; `kind` tells the failure classes apart.
class CsvError : public Error {
 public:
  enum class Kind { kEmpty, kMalformed, kDimensionMismatch, kNonFinite, kNegativeWeight, kIo };

  CsvError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Reads a CSV with header `x0,...,x{d-1}` and an optional trailing `w`.
EmpiricalMeasure load_csv(const std::filesystem::path& path,
                          std::optional<std::size_t> expected_dim = std::nullopt);

/// Writes the measure with a `w` column; values use round-trip precision.
void save_csv(const EmpiricalMeasure& m, const std::filesystem::path& path);

// Reference distributions.

/// Uniform distribution on the closed unit ball of R^dim.
struct UniformBall {
  std::size_t dim = 1;
};

/// N(mean, scale^2 I).
struct Gaussian {
  std::vector<double> mean;
  double scale = 1.0;
};

/// Sum_c weights[c] N(means[c], scale^2 I).
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  double scale = 1.0;
};

/// Point masses at `points` with probabilities `pmf` (e.g. codewords).
struct DiscreteOnPoints {
  std::vector<std::vector<double>> points;
  std::vector<double> pmf;
};

/// A one-dimensional density tabulated on a grid; sampled by inverting the
/// piecewise-linear CDF. `cdf` is nondecreasing, starts at 0 and ends at 1.
struct Tabulated1D {
  std::vector<double> grid;
  std::vector<double> cdf;
};

using DistributionSpec =
    std::variant<UniformBall, Gaussian, GaussianMixture, DiscreteOnPoints, Tabulated1D>;

/// Dimension of the space the distribution lives in.
std::size_t spec_dim(const DistributionSpec& spec);

/// Throws InvalidArgument if the parameters are inconsistent.
void validate_spec(const DistributionSpec& spec);

/// n i.i.d. draws with uniform weights. Identical (spec, n, seed) give
/// bit-identical results.
EmpiricalMeasure sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed);

/// Sum_i w_i ||x_i||^gamma.
double moment_gamma(const EmpiricalMeasure& m, double gamma);

/// M_gamma of the uniform distribution on the unit ball in R^d: d / (d + gamma).
double uniform_ball_moment(std::size_t dim, double gamma);

/// Concatenation of two samples (used by permutation calibration).
EmpiricalMeasure pooled(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace edist
