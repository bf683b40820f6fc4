#include "edist/halfspace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "edist/error.hpp"
#include "edist/rng.hpp"

namespace edist {
namespace {

struct Signed1D {
  std::vector<double> t;  // sorted ascending
  std::vector<double> s;  // signed mass, mu positive
};

void require_same_dim(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != nu.dim()) throw DimensionMismatch("measures have different dimensions");
}

Signed1D signed_projection(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                           std::span<const double> v) {
  const std::size_t n = mu.size(), m = nu.size(), d = mu.dim();
  std::vector<double> raw(n + m), mass(n + m);
  for (std::size_t i = 0; i < n + m; ++i) {
    const auto x = i < n ? mu.point(i) : nu.point(i - n);
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) acc += v[k] * x[k];
    raw[i] = acc;
    mass[i] = i < n ? mu.weight(i) : -nu.weight(i - n);
  }
  std::vector<std::size_t> order(n + m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
  Signed1D out;
  out.t.reserve(n + m);
  out.s.reserve(n + m);
  for (std::size_t i : order) {
    out.t.push_back(raw[i]);
    out.s.push_back(mass[i]);
  }
  return out;
}

// Best ray on sorted signed data. Returns value and the ray as
// (orientation, cut): orientation +1 means {t >= cut}, -1 means {t <= cut}.
// Cuts sit halfway between distinct values so that small perturbations of
// the projections do not change the selected set.
struct RayBest {
  double value = 0.0;
  int orientation = 1;
  double cut = 0.0;
};

RayBest best_ray(const Signed1D& p) {
  RayBest best;
  const std::size_t n = p.t.size();
  if (n == 0) return best;
  best.cut = p.t.back() + 1.0;  // empty ray
  double suffix = 0.0;
  std::size_t i = n;
  while (i > 0) {
    const double t = p.t[i - 1];
    while (i > 0 && p.t[i - 1] == t) suffix += p.s[--i];
    if (i == 0) break;  // the full set and its empty complement carry no mass
    // {x >= t} and its complement {x <= next lower value} share this cut.
    const double cut = 0.5 * (t + p.t[i - 1]);
    if (suffix > best.value) best = {suffix, 1, cut};
    if (-suffix > best.value) best = {-suffix, -1, cut};
  }
  return best;
}

HalfspaceWitness ray_witness(const RayBest& r, std::span<const double> dir, bool exact) {
  double s = 0.0;
  for (double x : dir) s += x * x;
  const double norm = std::sqrt(s);
  HalfspaceWitness w;
  w.direction.resize(dir.size());
  for (std::size_t k = 0; k < dir.size(); ++k) w.direction[k] = r.orientation * dir[k] / norm;
  w.threshold = r.orientation * r.cut / norm;
  w.value = r.value;
  w.exact = exact;
  return w;
}

std::vector<double> normalized(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (!(s > 0.0)) throw InvalidArgument("direction must be nonzero");
  std::vector<double> out(v.begin(), v.end());
  const double inv = 1.0 / std::sqrt(s);
  for (double& x : out) x *= inv;
  return out;
}

// Same direction test, exact for inputs whose cross products are exact.
int half_plane(double x, double y) { return (y < 0.0 || (y == 0.0 && x < 0.0)) ? 1 : 0; }

bool angle_equal(double ax, double ay, double bx, double by) {
  return half_plane(ax, ay) == half_plane(bx, by) && ax * by - ay * bx == 0.0;
}

struct SweepEvent {
  double key;  // angle of the normal in (-pi, pi]
  double nx, ny;
  std::uint32_t point;
  bool enter;
};

constexpr double kPi = 3.14159265358979323846;

double angle_key(double x, double y) {
  const double a = std::atan2(y, x);
  return a == -kPi ? kPi : a;
}

struct AnchorResult {
  double max_value = 0.0;
  double min_value = 0.0;
  double max_nx = 1.0, max_ny = 0.0;
  double min_nx = 1.0, min_ny = 0.0;
};

}  // namespace

HalfspaceWitness best_threshold(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                std::span<const double> direction) {
  require_same_dim(mu, nu);
  if (direction.size() != mu.dim()) throw DimensionMismatch("direction has the wrong dimension");
  normalized(direction);  // rejects the zero vector
  // Projecting on the raw direction keeps exact ties for lattice data.
  return ray_witness(best_ray(signed_projection(mu, nu, direction)), direction, false);
}

HalfspaceWitness dhbar_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) {
    throw DimensionMismatch("dhbar_1d needs one-dimensional measures");
  }
  const double one = 1.0;
  auto w = best_threshold(mu, nu, std::span<const double>(&one, 1));
  w.exact = true;
  return w;
}

HalfspaceWitness dhbar_2d_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                const ExactSweepOptions& opts, const Executor& ex) {
  if (mu.dim() != 2 || nu.dim() != 2) {
    throw DimensionMismatch("dhbar_2d_exact needs two-dimensional measures");
  }
  const std::size_t n = mu.size(), m = nu.size(), total = n + m;
  if (total > opts.cap) {
    throw InvalidArgument("dhbar_2d_exact: n + m = " + std::to_string(total) +
                          " exceeds the cap " + std::to_string(opts.cap) +
                          "; use dhbar_heuristic");
  }
  std::vector<double> px(total), py(total), mass(total);
  for (std::size_t i = 0; i < total; ++i) {
    const auto x = i < n ? mu.point(i) : nu.point(i - n);
    px[i] = x[0];
    py[i] = x[1];
    mass[i] = i < n ? mu.weight(i) : -nu.weight(i - n);
  }

  const auto per_anchor = ex.map<AnchorResult>(total, [&](std::size_t a) {
    std::vector<SweepEvent> events;
    events.reserve(2 * total);
    double base = 0.0;  // anchor and its exact duplicates are always on the boundary
    for (std::size_t q = 0; q < total; ++q) {
      const double dx = px[q] - px[a], dy = py[q] - py[a];
      if (dx == 0.0 && dy == 0.0) {
        base += mass[q];
        continue;
      }
      // q is inside {u : u.(q - a) >= 0}: from normal (dy, -dx) through (-dy, dx).
      events.push_back({angle_key(dy, -dx), dy, -dx, static_cast<std::uint32_t>(q), true});
      events.push_back({angle_key(-dy, dx), -dy, dx, static_cast<std::uint32_t>(q), false});
    }
    AnchorResult r;  // the empty set (value 0) is always available
    if (events.empty()) return r;
    std::sort(events.begin(), events.end(), [](const SweepEvent& e, const SweepEvent& f) {
      if (e.key != f.key) return e.key < f.key;
      return e.enter && !f.enter;
    });
    // Membership at the start of the sweep: the exit of q precedes its entry.
    std::vector<char> seen_exit(total, 0);
    double inside = 0.0;
    for (const auto& e : events) {
      if (!e.enter) {
        seen_exit[e.point] = 1;
      } else if (seen_exit[e.point]) {
        inside += mass[e.point];
      }
    }
    auto record = [&](double value, double nx, double ny) {
      if (value > r.max_value) {
        r.max_value = value;
        r.max_nx = nx;
        r.max_ny = ny;
      }
      if (value < r.min_value) {
        r.min_value = value;
        r.min_nx = nx;
        r.min_ny = ny;
      }
    };
    std::size_t i = 0;
    while (i < events.size()) {
      std::size_t j = i;
      // Collinear directions are grouped exactly when coordinates allow it.
      while (j < events.size() &&
             (events[j].key == events[i].key ||
              angle_equal(events[i].nx, events[i].ny, events[j].nx, events[j].ny))) {
        ++j;
      }
      for (std::size_t k = i; k < j; ++k) {
        if (events[k].enter) inside += mass[events[k].point];
      }
      record(base + inside, events[i].nx, events[i].ny);
      for (std::size_t k = i; k < j; ++k) {
        if (!events[k].enter) inside -= mass[events[k].point];
      }
      // Open interval up to the next angle; represented by its bisector.
      const auto& next = events[j % events.size()];
      const double a0 = events[i].key;
      double a1 = next.key;
      if (a1 <= a0) a1 += 2.0 * kPi;
      const double mid = 0.5 * (a0 + a1);
      record(base + inside, std::cos(mid), std::sin(mid));
      i = j;
    }
    return r;
  });

  // Deterministic reduction: first anchor wins ties.
  double best = 0.0;
  double bx = 1.0, by = 0.0;
  for (const auto& r : per_anchor) {
    if (r.max_value > best) {
      best = r.max_value;
      bx = r.max_nx;
      by = r.max_ny;
    }
    if (-r.min_value > best) {
      best = -r.min_value;
      bx = -r.min_nx;
      by = -r.min_ny;
    }
  }
  const std::vector<double> dir{bx, by};
  HalfspaceWitness w = best_threshold(mu, nu, dir);
  w.value = best;
  w.exact = true;
  return w;
}

HalfspaceWitness dhbar_3d_enumerate(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != 3 || nu.dim() != 3) {
    throw DimensionMismatch("dhbar_3d_enumerate needs three-dimensional measures");
  }
  const std::size_t n = mu.size(), total = n + nu.size();
  if (total > 120) throw InvalidArgument("dhbar_3d_enumerate is limited to n + m <= 120");
  std::vector<std::array<double, 3>> p(total);
  std::vector<double> mass(total);
  for (std::size_t i = 0; i < total; ++i) {
    const auto x = i < n ? mu.point(i) : nu.point(i - n);
    p[i] = {x[0], x[1], x[2]};
    mass[i] = i < n ? mu.weight(i) : -nu.weight(i - n);
  }
  double best = 0.0;
  std::array<double, 3> best_dir{1.0, 0.0, 0.0};
  if (total < 3) {
    // Two points are separated along their difference.
    std::vector<double> dir{1.0, 0.0, 0.0};
    if (total == 2 && p[0] != p[1]) dir = {p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]};
    auto w = best_threshold(mu, nu, dir);
    w.exact = true;
    return w;
  }
  for (std::size_t a = 0; a < total; ++a) {
    for (std::size_t b = a + 1; b < total; ++b) {
      for (std::size_t c = b + 1; c < total; ++c) {
        const std::array<double, 3> u{p[b][0] - p[a][0], p[b][1] - p[a][1], p[b][2] - p[a][2]};
        const std::array<double, 3> v{p[c][0] - p[a][0], p[c][1] - p[a][1], p[c][2] - p[a][2]};
        const std::array<double, 3> nrm{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                                        u[0] * v[1] - u[1] * v[0]};
        if (nrm[0] == 0.0 && nrm[1] == 0.0 && nrm[2] == 0.0) continue;
        const double off = nrm[0] * p[a][0] + nrm[1] * p[a][1] + nrm[2] * p[a][2];
        double strict = 0.0;
        for (std::size_t q = 0; q < total; ++q) {
          if (q == a || q == b || q == c) continue;
          const double h = nrm[0] * p[q][0] + nrm[1] * p[q][1] + nrm[2] * p[q][2] - off;
          if (h > 0.0) strict += mass[q];
        }
        const double ma = mass[a], mb = mass[b], mc = mass[c];
        for (int subset = 0; subset < 8; ++subset) {
          const double on = (subset & 1 ? ma : 0.0) + (subset & 2 ? mb : 0.0) + (subset & 4 ? mc : 0.0);
          // Signed masses sum to zero, so the opposite side gives the same |value|.
          const double value = std::abs(strict + on);
          if (value > best) {
            best = value;
            best_dir = nrm;
          }
        }
      }
    }
  }
  HalfspaceWitness w = best_threshold(mu, nu, std::vector<double>(best_dir.begin(), best_dir.end()));
  w.value = best;
  w.exact = true;
  return w;
}

HalfspaceWitness dhbar_heuristic(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                 std::size_t n_dirs, std::uint64_t seed, const Executor& ex) {
  require_same_dim(mu, nu);
  if (n_dirs == 0) throw InvalidArgument("n_dirs must be at least 1");
  const std::size_t d = mu.dim();
  const auto per_dir = ex.map<HalfspaceWitness>(n_dirs, [&](std::size_t i) {
    const auto v = stream_direction(seed, i, d);
    return ray_witness(best_ray(signed_projection(mu, nu, v)), v, false);
  });
  std::size_t arg = 0;
  for (std::size_t i = 1; i < n_dirs; ++i) {
    if (per_dir[i].value > per_dir[arg].value) arg = i;
  }
  return per_dir[arg];
}

HalfspaceWitness dhbar(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t n_dirs,
                       std::uint64_t seed, const Executor& ex) {
  require_same_dim(mu, nu);
  if (mu.dim() == 1) return dhbar_1d(mu, nu);
  if (mu.dim() == 2 && mu.size() + nu.size() <= ExactSweepOptions{}.cap) {
    return dhbar_2d_exact(mu, nu, {}, ex);
  }
  return dhbar_heuristic(mu, nu, n_dirs, seed, ex);
}

double ramp_gap_max(std::span<const double> t, std::span<const double> s, int k) {
  if (k < 0 || k > 2) throw InvalidArgument("exact ramp statistic supports k in {0, 1, 2}");
  // Sweep b from +inf down to 0. On (t_next, t_cur] the active set is
  // {t_i > b} (k >= 1) and the objective is A0 b^2 - 2 A1 b + A2 with
  // A0 = sum s, A1 = sum s t, A2 = sum s t^2 over the active set.
  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t[a] > t[b]; });
  double a0 = 0.0, a1 = 0.0, a2 = 0.0;
  double best = 0.0;
  auto value_at = [&](double b) {
    switch (k) {
      case 0:
        return a0;
      case 1:
        return a1 - b * a0;
      default:
        return a2 - 2.0 * b * a1 + b * b * a0;
    }
  };
  std::size_t i = 0;
  while (i < order.size()) {
    const double cur = t[order[i]];
    if (cur < 0.0) break;
    if (k == 0) {
      // {t >= cur} includes the tied group.
      while (i < order.size() && t[order[i]] == cur) {
        a0 += s[order[i]];
        ++i;
      }
      best = std::max(best, std::abs(a0));
      continue;
    }
    // For k >= 1 points at t == b contribute zero, so evaluate before adding.
    best = std::max(best, std::abs(value_at(cur)));
    while (i < order.size() && t[order[i]] == cur) {
      const double x = t[order[i]], w = s[order[i]];
      a0 += w;
      a1 += w * x;
      a2 += w * x * x;
      ++i;
    }
    const double lo = (i < order.size()) ? std::max(0.0, t[order[i]]) : 0.0;
    if (k == 2 && a0 != 0.0) {
      const double vertex = a1 / a0;
      if (vertex > lo && vertex < cur) best = std::max(best, std::abs(value_at(vertex)));
    }
    best = std::max(best, std::abs(value_at(lo)));
  }
  if (k == 0) {
    // b = 0 with the group at exactly 0 already included; also cover b in (0, smallest t >= 0).
    best = std::max(best, std::abs(a0));
  }
  return best;
}

double t_stat_dk(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int k,
                 std::size_t n_dirs, std::uint64_t seed, const Executor& ex) {
  require_same_dim(mu, nu);
  if (k < 0 || k > 2) {
    throw InvalidArgument("t_stat_dk supports k in {0, 1, 2}; use t_stat_dk_grid for k = " +
                          std::to_string(k));
  }
  if (n_dirs == 0) throw InvalidArgument("n_dirs must be at least 1");
  const std::size_t d = mu.dim();
  const auto per_dir = ex.map<double>(n_dirs, [&](std::size_t i) {
    auto v = stream_direction(seed, i, d);
    double best = 0.0;
    for (int sign : {1, -1}) {
      if (sign < 0) {
        for (double& x : v) x = -x;
      }
      const auto p = signed_projection(mu, nu, v);
      best = std::max(best, ramp_gap_max(p.t, p.s, k));
    }
    return best;
  });
  return *std::max_element(per_dir.begin(), per_dir.end());
}

double t_stat_dk_grid(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int k,
                      std::size_t n_dirs, std::uint64_t seed, std::size_t n_grid,
                      const Executor& ex) {
  require_same_dim(mu, nu);
  if (k < 0) throw InvalidArgument("k must be nonnegative");
  if (n_dirs == 0 || n_grid < 2) throw InvalidArgument("need n_dirs >= 1 and n_grid >= 2");
  const std::size_t d = mu.dim();
  const auto per_dir = ex.map<double>(n_dirs, [&](std::size_t i) {
    auto v = stream_direction(seed, i, d);
    double best = 0.0;
    for (int sign : {1, -1}) {
      if (sign < 0) {
        for (double& x : v) x = -x;
      }
      const auto p = signed_projection(mu, nu, v);
      const double top = std::max(0.0, p.t.back());
      for (std::size_t g = 0; g < n_grid; ++g) {
        const double b = top * static_cast<double>(g) / static_cast<double>(n_grid - 1);
        double acc = 0.0;
        for (std::size_t j = 0; j < p.t.size(); ++j) {
          const double a = p.t[j] - b;
          if (a < 0.0) continue;
          acc += p.s[j] * (k == 0 ? 1.0 : std::pow(a, k));
        }
        best = std::max(best, std::abs(acc));
      }
    }
    return best;
  });
  return *std::max_element(per_dir.begin(), per_dir.end());
}

}  // namespace edist
