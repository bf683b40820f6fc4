#include "edist/measures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "edist/rng.hpp"
#include "edist/summation.hpp"

namespace edist {

namespace {

constexpr double kWeightSumTolerance = 1e-12;

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> coords, std::size_t dim)
    : coords_(std::move(coords)), dim_(dim) {
  if (dim_ == 0) throw InvalidArgument("EmpiricalMeasure: dimension must be positive");
  if (coords_.size() % dim_ != 0) {
    throw DimensionMismatch("EmpiricalMeasure: coordinate count is not a multiple of dim");
  }
  weights_ = uniform_weights(coords_.size() / dim_);
  uniform_ = true;
  validate();
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> coords, std::size_t dim,
                                   std::vector<double> weights)
    : coords_(std::move(coords)), dim_(dim), weights_(std::move(weights)) {
  if (dim_ == 0) throw InvalidArgument("EmpiricalMeasure: dimension must be positive");
  if (coords_.size() != weights_.size() * dim_) {
    throw DimensionMismatch("EmpiricalMeasure: " + std::to_string(weights_.size()) +
                            " weights for " + std::to_string(coords_.size()) +
                            " coordinates in dimension " + std::to_string(dim_));
  }
  const double target = weights_.empty() ? 0.0 : 1.0 / static_cast<double>(weights_.size());
  uniform_ = std::all_of(weights_.begin(), weights_.end(),
                         [&](double w) { return std::abs(w - target) <= 1e-15; });
  validate();
}

void EmpiricalMeasure::validate() const {
  if (weights_.empty()) throw InvalidArgument("EmpiricalMeasure: at least one point is required");
  for (double c : coords_) {
    if (!std::isfinite(c)) throw InvalidArgument("EmpiricalMeasure: non-finite coordinate");
  }
  CompensatedSum sum;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidArgument("EmpiricalMeasure: weights must be finite and nonnegative");
    }
    sum += w;
  }
  const double total = sum.value();
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "EmpiricalMeasure: weights sum to " << total << ", expected 1";
    throw InvalidArgument(msg.str());
  }
}

EmpiricalMeasure EmpiricalMeasure::from_points(const std::vector<std::vector<double>>& points) {
  if (points.empty()) throw InvalidArgument("EmpiricalMeasure: at least one point is required");
  const std::size_t dim = points.front().size();
  std::vector<double> coords;
  coords.reserve(points.size() * dim);
  for (const auto& p : points) {
    if (p.size() != dim) throw DimensionMismatch("EmpiricalMeasure: ragged point list");
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return EmpiricalMeasure(std::move(coords), dim);
}

EmpiricalMeasure EmpiricalMeasure::on_line(std::vector<double> values) {
  return EmpiricalMeasure(std::move(values), 1);
}

EmpiricalMeasure EmpiricalMeasure::scaled(double c) const {
  std::vector<double> coords(coords_);
  for (auto& x : coords) x *= c;
  if (uniform_) return EmpiricalMeasure(std::move(coords), dim_);
  return EmpiricalMeasure(std::move(coords), dim_, weights_);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string where(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no) + ": ";
}

double parse_value(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw CsvError(CsvError::Kind::kMalformed,
                   where(path, line_no) + "cannot parse '" + std::string(field) + "' as a number");
  }
  if (!std::isfinite(value)) {
    throw CsvError(CsvError::Kind::kNonFinite,
                   where(path, line_no) + "non-finite value '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

EmpiricalMeasure load_csv(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  std::ifstream in(path);
  if (!in) throw CsvError(CsvError::Kind::kIo, "cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw CsvError(CsvError::Kind::kEmpty, path.string() + ": empty file");

  const auto header = split_fields(line);
  bool weighted = !header.empty() && header.back() == "w";
  const std::size_t dim = header.size() - (weighted ? 1 : 0);
  if (dim == 0) throw CsvError(CsvError::Kind::kMalformed, path.string() + ": no coordinate columns");
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j] != "x" + std::to_string(j)) {
      throw CsvError(CsvError::Kind::kMalformed, where(path, line_no) + "expected column 'x" +
                                                     std::to_string(j) + "', found '" +
                                                     std::string(header[j]) + "'");
    }
  }
  if (expected_dim && *expected_dim != dim) {
    throw CsvError(CsvError::Kind::kDimensionMismatch,
                   path.string() + ": file has dimension " + std::to_string(dim) + ", expected " +
                       std::to_string(*expected_dim));
  }

  std::vector<double> coords;
  std::vector<double> weights;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw CsvError(CsvError::Kind::kDimensionMismatch,
                     where(path, line_no) + "expected " + std::to_string(header.size()) +
                         " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < dim; ++j) coords.push_back(parse_value(fields[j], path, line_no));
    if (weighted) {
      const double w = parse_value(fields[dim], path, line_no);
      if (w < 0.0) {
        throw CsvError(CsvError::Kind::kNegativeWeight,
                       where(path, line_no) + "negative weight " + std::string(fields[dim]));
      }
      weights.push_back(w);
    }
  }
  if (coords.empty()) throw CsvError(CsvError::Kind::kEmpty, path.string() + ": no data rows");

  if (!weighted) return EmpiricalMeasure(std::move(coords), dim);
  try {
    return EmpiricalMeasure(std::move(coords), dim, std::move(weights));
  } catch (const InvalidArgument& e) {
    throw CsvError(CsvError::Kind::kMalformed, path.string() + ": " + e.what());
  }
}

void save_csv(const EmpiricalMeasure& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw CsvError(CsvError::Kind::kIo, "cannot write " + path.string());
  for (std::size_t j = 0; j < m.dim(); ++j) out << "x" << j << ',';
  out << "w\n";
  char buf[32];
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (double c : m.point(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", c);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", m.weight(i));
    out << buf << '\n';
  }
  if (!out) throw CsvError(CsvError::Kind::kIo, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Reference distributions

namespace {

void check_simplex(const std::vector<double>& p, const char* what) {
  if (p.empty()) throw InvalidArgument(std::string(what) + ": empty probability vector");
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(std::string(what) + ": probabilities must be nonnegative");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument(std::string(what) + ": probabilities must sum to 1");
  }
}

std::size_t draw_index(Rng& rng, const std::vector<double>& pmf) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    acc += pmf[i];
    if (u < acc) return i;
  }
  // u landed in the rounding gap above the last cumulative sum.
  for (std::size_t i = pmf.size(); i-- > 0;) {
    if (pmf[i] > 0.0) return i;
  }
  return pmf.size() - 1;
}

struct DimVisitor {
  std::size_t operator()(const UniformBall& s) const { return s.dim; }
  std::size_t operator()(const Gaussian& s) const { return s.mean.size(); }
  std::size_t operator()(const GaussianMixture& s) const {
    return s.means.empty() ? 0 : s.means.front().size();
  }
  std::size_t operator()(const DiscreteOnPoints& s) const {
    return s.points.empty() ? 0 : s.points.front().size();
  }
  std::size_t operator()(const Tabulated1D&) const { return 1; }
};

}  // namespace

std::size_t spec_dim(const DistributionSpec& spec) { return std::visit(DimVisitor{}, spec); }

void validate_spec(const DistributionSpec& spec) {
  struct Validator {
    void operator()(const UniformBall& s) const {
      if (s.dim == 0) throw InvalidArgument("uniform-ball: dimension must be positive");
    }
    void operator()(const Gaussian& s) const {
      if (s.mean.empty()) throw InvalidArgument("gaussian: empty mean");
      if (!(s.scale > 0.0)) throw InvalidArgument("gaussian: scale must be positive");
    }
    void operator()(const GaussianMixture& s) const {
      if (s.means.empty() || s.means.size() != s.weights.size()) {
        throw InvalidArgument("gaussian-mixture: need one weight per component");
      }
      check_simplex(s.weights, "gaussian-mixture");
      for (const auto& m : s.means) {
        if (m.size() != s.means.front().size() || m.empty()) {
          throw InvalidArgument("gaussian-mixture: component means differ in dimension");
        }
      }
      if (!(s.scale > 0.0)) throw InvalidArgument("gaussian-mixture: scale must be positive");
    }
    void operator()(const DiscreteOnPoints& s) const {
      if (s.points.empty() || s.points.size() != s.pmf.size()) {
        throw InvalidArgument("discrete: need one probability per point");
      }
      check_simplex(s.pmf, "discrete");
      for (const auto& p : s.points) {
        if (p.size() != s.points.front().size() || p.empty()) {
          throw InvalidArgument("discrete: points differ in dimension");
        }
      }
    }
    void operator()(const Tabulated1D& s) const {
      if (s.grid.size() < 2 || s.grid.size() != s.cdf.size()) {
        throw InvalidArgument("tabulated: grid and cdf must have equal length >= 2");
      }
      if (s.cdf.front() != 0.0 || std::abs(s.cdf.back() - 1.0) > 1e-12) {
        throw InvalidArgument("tabulated: cdf must run from 0 to 1");
      }
      for (std::size_t i = 1; i < s.grid.size(); ++i) {
        if (!(s.grid[i] > s.grid[i - 1]) || s.cdf[i] < s.cdf[i - 1]) {
          throw InvalidArgument("tabulated: grid must increase and cdf must not decrease");
        }
      }
    }
  };
  std::visit(Validator{}, spec);
}

EmpiricalMeasure sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample: n must be at least 1");
  validate_spec(spec);
  const std::size_t dim = spec_dim(spec);
  Rng rng(seed);
  std::vector<double> coords;
  coords.reserve(n * dim);

  struct Sampler {
    Rng& rng;
    std::vector<double>& out;
    std::size_t n;

    void operator()(const UniformBall& s) {
      const double inv_dim = 1.0 / static_cast<double>(s.dim);
      for (std::size_t i = 0; i < n; ++i) {
        auto v = rng.unit_vector(s.dim);
        const double radius = std::pow(rng.uniform(), inv_dim);
        double norm2 = 0.0;
        for (double& c : v) {
          c *= radius;
          norm2 += c * c;
        }
        // Rounding in the normalization can push the norm one ulp past 1.
        const double shrink = norm2 > 1.0 ? 1.0 / std::sqrt(norm2) : 1.0;
        for (double c : v) out.push_back(c * shrink);
      }
    }
    void operator()(const Gaussian& s) {
      for (std::size_t i = 0; i < n; ++i) {
        for (double m : s.mean) out.push_back(m + s.scale * rng.normal());
      }
    }
    void operator()(const GaussianMixture& s) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& mean = s.means[draw_index(rng, s.weights)];
        for (double m : mean) out.push_back(m + s.scale * rng.normal());
      }
    }
    void operator()(const DiscreteOnPoints& s) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& p = s.points[draw_index(rng, s.pmf)];
        out.insert(out.end(), p.begin(), p.end());
      }
    }
    void operator()(const Tabulated1D& s) {
      for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        auto it = std::upper_bound(s.cdf.begin(), s.cdf.end(), u);
        std::size_t hi = static_cast<std::size_t>(it - s.cdf.begin());
        hi = std::clamp<std::size_t>(hi, 1, s.cdf.size() - 1);
        const std::size_t lo = hi - 1;
        const double span = s.cdf[hi] - s.cdf[lo];
        const double t = span > 0.0 ? (u - s.cdf[lo]) / span : 0.0;
        out.push_back(s.grid[lo] + t * (s.grid[hi] - s.grid[lo]));
      }
    }
  };
  std::visit(Sampler{rng, coords, n}, spec);
  return EmpiricalMeasure(std::move(coords), dim);
}

double moment_gamma(const EmpiricalMeasure& m, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("moment_gamma: gamma must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double norm2 = 0.0;
    for (double c : m.point(i)) norm2 += c * c;
    total += m.weight(i) * std::pow(norm2, 0.5 * gamma);
  }
  return total;
}

double uniform_ball_moment(std::size_t dim, double gamma) {
  const double d = static_cast<double>(dim);
  return d / (d + gamma);
}

EmpiricalMeasure pooled(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("pooled: dimensions differ");
  std::vector<double> coords(a.coords().begin(), a.coords().end());
  coords.insert(coords.end(), b.coords().begin(), b.coords().end());
  return EmpiricalMeasure(std::move(coords), a.dim());
}

}  // namespace edist
