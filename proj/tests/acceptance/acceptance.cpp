// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
//
//   acceptance <path-to-edist-cli> [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edist/energy.hpp"
#include "edist/estimation.hpp"
#include "edist/halfspace.hpp"
#include "edist/measures.hpp"
#include "edist/rng.hpp"
#include "edist/sliced.hpp"
#include "edist/spectral.hpp"
#include "edist/testing.hpp"

using namespace edist;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

const Executor& pool() {
  static const Executor ex = Executor::hardware();
  return ex;
}

EmpiricalMeasure gaussian_cloud(Rng& rng, std::size_t n, std::size_t dim, double shift, bool weighted) {
  std::vector<double> c(n * dim);
  for (auto& v : c) v = shift + rng.normal();
  if (!weighted) return EmpiricalMeasure(std::move(c), dim);
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& v : w) s += (v = 0.1 + rng.uniform());
  for (auto& v : w) v /= s;
  return EmpiricalMeasure(std::move(c), dim, std::move(w));
}

// Uniform on the unit ball by rejection from the cube.
EmpiricalMeasure ball_points(Rng& rng, std::size_t n, std::size_t dim, double radius, double offset) {
  std::vector<double> c;
  std::vector<double> p(dim);
  while (c.size() < n * dim) {
    double s = 0.0;
    for (auto& v : p) {
      v = 2.0 * rng.uniform() - 1.0;
      s += v * v;
    }
    if (s > 1.0) continue;
    for (std::size_t k = 0; k < dim; ++k) c.push_back(radius * p[k] + (k == 0 ? offset : 0.0));
  }
  return EmpiricalMeasure(std::move(c), dim);
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Rng rng(101);
  const double gammas[] = {0.5, 1.0, 1.5};
  double worst_kernel = 0.0, worst_quad = 0.0, worst_z = 0.0, worst_line = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t dim = 1 + static_cast<std::size_t>(i % 3);
    const double gamma = gammas[(i / 3) % 3];
    const std::size_t n = 2 + rng.below(199), m = 2 + rng.below(199);
    const auto x = gaussian_cloud(rng, n, dim, 0.0, i % 2 == 0);
    const auto y = gaussian_cloud(rng, m, dim, 0.3 * rng.uniform(), i % 4 == 1);
    const GammaOrder g(gamma, dim);
    const double v = energy_sq_vstat(x, y, g, pool());
    worst_kernel = std::max(worst_kernel, std::abs(v - energy_sq_mmd(x, y, g, pool())));
    if (dim == 1) {
      worst_quad = std::max(worst_quad, std::abs(energy_sq_fourier_1d(x, y, g) - v) / v);
    }
    const auto s = sliced_energy_sq_mc(x, y, g, 10000, substream(202, static_cast<std::uint64_t>(i)), pool());
    const double gap = std::abs(s.value - v);
    if (dim == 1) {
      // Both directions of the line give the exact value; only rounding remains.
      worst_line = std::max(worst_line, gap / v);
    } else {
      worst_z = std::max(worst_z, gap / s.std_error);
    }
  }
  return {worst_kernel <= 1e-10 && worst_quad <= 1e-4 && worst_z <= 3.0 && worst_line <= 1e-12,
          "max |vstat-mmd| " + num(worst_kernel) + ", max rel fourier " + num(worst_quad) +
              ", max sliced |z| " + num(worst_z) + " (d > 1), max rel sliced gap " + num(worst_line) + " (d = 1)"};
}

Outcome criterion2() {
  const std::vector<std::size_t> ns{32, 64, 128, 256, 512};
  bool ok = true;
  double worst_ratio = 0.0, min_slope = 0.0, max_slope = -10.0;
  int combo = 0;
  for (std::size_t d : {1, 2, 3}) {
    for (double gamma : {0.5, 1.0, 1.5}) {
      const auto rep = concentration_experiment(d, gamma, ns, 200, 1024, substream(303, combo++), pool());
      for (const auto& p : rep.points) {
        worst_ratio = std::max(worst_ratio, p.mean / p.reference);
        ok = ok && p.mean <= p.reference;
      }
      min_slope = std::min(min_slope, rep.fit.slope);
      max_slope = std::max(max_slope, rep.fit.slope);
      ok = ok && std::abs(rep.fit.slope + 1.0) <= 0.15;
    }
  }
  return {ok, "max mean/bound " + num(worst_ratio) + ", slopes in [" + num(min_slope) + ", " + num(max_slope) + "]"};
}

// Two-sided KS from one merge of the sorted samples.
double ks_merge(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  auto sorted = [](const EmpiricalMeasure& m) {
    std::vector<std::pair<double, double>> v;
    for (std::size_t i = 0; i < m.size(); ++i) v.emplace_back(m.point(i)[0], m.weight(i));
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto sa = sorted(a), sb = sorted(b);
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, best = 0.0;
  while (i < sa.size() || j < sb.size()) {
    const double t = std::min(i < sa.size() ? sa[i].first : INFINITY, j < sb.size() ? sb[j].first : INFINITY);
    while (i < sa.size() && sa[i].first == t) fa += sa[i++].second;
    while (j < sb.size() && sb[j].first == t) fb += sb[j++].second;
    best = std::max(best, std::abs(fa - fb));
  }
  return best;
}

// Halfspaces bounded by the line through each pair of points, with every
// subset of the two boundary points.
double pair_boundary_2d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  struct P { double x, y, s; };
  std::vector<P> p;
  for (std::size_t i = 0; i < mu.size(); ++i) p.push_back({mu.point(i)[0], mu.point(i)[1], mu.weight(i)});
  for (std::size_t i = 0; i < nu.size(); ++i) p.push_back({nu.point(i)[0], nu.point(i)[1], -nu.weight(i)});
  double best = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    for (std::size_t b = a + 1; b < p.size(); ++b) {
      const double nx = p[a].y - p[b].y, ny = p[b].x - p[a].x;
      double pos = 0.0, neg = 0.0;
      for (std::size_t c = 0; c < p.size(); ++c) {
        if (c == a || c == b) continue;
        const double h = nx * (p[c].x - p[a].x) + ny * (p[c].y - p[a].y);
        (h > 0 ? pos : neg) += p[c].s;
      }
      for (double side : {pos, neg}) {
        for (double extra : {0.0, p[a].s, p[b].s, p[a].s + p[b].s}) best = std::max(best, std::abs(side + extra));
      }
    }
  }
  return best;
}

Outcome criterion3() {
  Rng rng(404);
  double worst1 = 0.0, worst2 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.below(60), m = 1 + rng.below(60);
    std::vector<double> a(n), b(m);
    // A third of the instances sit on a coarse lattice so that ties occur.
    const bool lattice = i % 3 == 0;
    for (auto& v : a) v = lattice ? static_cast<double>(rng.below(9)) : rng.normal();
    for (auto& v : b) v = lattice ? static_cast<double>(rng.below(9)) : rng.normal() + 0.2;
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) total += (v = 0.1 + rng.uniform());
    for (auto& v : w) v /= total;
    const auto x = i % 2 ? EmpiricalMeasure(a, 1) : EmpiricalMeasure(a, 1, w);
    const auto y = EmpiricalMeasure(b, 1);
    worst1 = std::max(worst1, std::abs(dhbar_1d(x, y).value - ks_merge(x, y)));
  }
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng.below(29), m = 2 + rng.below(29);
    const auto x = gaussian_cloud(rng, n, 2, 0.0, i % 2 == 0);
    const auto y = gaussian_cloud(rng, m, 2, 0.4, false);
    worst2 = std::max(worst2, std::abs(dhbar_2d_exact(x, y).value - pair_boundary_2d(x, y)));
  }
  return {worst1 <= 1e-12 && worst2 <= 1e-12,
          "max |dhbar_1d - KS| " + num(worst1) + " (1000), max |dhbar_2d - brute| " + num(worst2) + " (100)"};
}

Outcome criterion4() {
  Rng rng(505);
  double worst = -INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 1 + static_cast<std::size_t>(i % 2);
    const std::size_t n = 5 + rng.below(80), m = 5 + rng.below(80);
    const auto x = ball_points(rng, n, d, 1.0, 0.0);
    // Smaller ball shifted inside the unit ball.
    const double r = 0.2 + 0.8 * rng.uniform();
    const auto y = ball_points(rng, m, d, r, (1.0 - r) * (2.0 * rng.uniform() - 1.0));
    const GammaOrder g(1.0, d);
    const double dh = g.dh_factor() * std::sqrt(energy_sq_vstat(x, y, g));
    const double half = 0.5 * static_cast<double>(d);
    const double lower = std::sqrt(std::tgamma(half) / (4.0 * std::pow(std::numbers::pi, half))) * dh;
    worst = std::max(worst, lower - dhbar(x, y).value);
  }
  return {worst <= 1e-10, "max (lower - dhbar) " + num(worst)};
}

Outcome criterion5() {
  const std::vector<double> ts{-1.0, 0.0, 1.0, 2.0};
  const auto rep = verify_scaling(3, ts, {16, 32, 64, 128, 256, 512}, {}, pool());
  bool ok = true;
  std::string d = "beta_bar 3;";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ok = ok && std::abs(rep.norm_fits[i].slope - ts[i]) <= 0.1;
    d += " t=" + num(ts[i]) + ":" + num(rep.norm_fits[i].slope);
  }
  ok = ok && std::abs(rep.dhbar_fit.slope + 1.0) <= 0.1 && std::abs(rep.l1_fit.slope) <= 0.1;
  return {ok, d + "; dhbar " + num(rep.dhbar_fit.slope) + "; L1 " + num(rep.l1_fit.slope)};
}

Outcome criterion6() {
  const double beta = 1.0;
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  std::vector<double> tv, e1, dh;
  for (double e : eps) {
    const auto c = build_construction_pair(beta, e);
    tv.push_back(c.tv());
    e1.push_back(c.energy1());
    dh.push_back(c.dhbar());
  }
  const double se = fit_loglog(tv, e1).slope, sd = fit_loglog(tv, dh).slope;
  const double pe = (2 * beta + 2) / (2 * beta), pd = (beta + 1) / beta;
  return {std::abs(se - pe) <= 0.15 && std::abs(sd - pd) <= 0.15,
          "E1 slope " + num(se) + " (want " + num(pe) + "), dhbar slope " + num(sd) + " (want " + num(pd) + ")"};
}

Outcome criterion7() {
  Rng rng(707);
  double worst_l1 = 0.0;
  std::string d;
  bool ok = true;
  for (std::size_t k : {8, 32}) {
    const auto cb = build_codebook(k, 1.0, substream(708, k));
    for (int t = 0; t < 20; ++t) {
      std::vector<std::size_t> counts(k);
      std::size_t n = 0;
      for (auto& c : counts) n += (c = rng.below(40));
      if (n == 0) counts[0] = n = 1;
      const auto res = fit_discrete_simplex(counts, cb);
      double l1 = 0.0;
      for (std::size_t i = 0; i < k; ++i) l1 += std::abs(res.pmf[i] - static_cast<double>(counts[i]) / static_cast<double>(n));
      worst_l1 = std::max(worst_l1, l1);
    }
    const auto rep = discrete_rate_experiment(k, {100, 400, 1600, 6400}, 200, substream(709, k), pool());
    ok = ok && std::abs(rep.fit.slope + 1.0) <= 0.15;
    d += " k=" + std::to_string(k) + " slope " + num(rep.fit.slope) + ";";
  }
  return {ok && worst_l1 <= 1e-8, "max L1 to empirical " + num(worst_l1) + ";" + d};
}

double gradient_mismatch(const GeneratorModel& model, const EmpiricalMeasure& data, double gamma) {
  const GammaOrder g(gamma, model.dim());
  const EnergyObjective obj(data, g);
  const auto noise = model.draw_noise(48, 11);
  const auto theta = model.theta();
  const auto lg = obj.evaluate(model, theta, noise);
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[i]));
    auto up = theta, dn = theta;
    up[i] += h;
    dn[i] -= h;
    const double fd = (obj.loss(model.push(up, noise)) - obj.loss(model.push(dn, noise))) / (2 * h);
    diff = std::max(diff, std::abs(fd - lg.gradient[i]));
    scale = std::max(scale, std::abs(lg.gradient[i]));
  }
  return diff / scale;
}

Outcome criterion8() {
  Rng rng(808);
  const auto data = gaussian_cloud(rng, 300, 2, 0.5, false);
  double worst = 0.0;
  for (double gamma : {0.7, 1.0, 1.5}) {
    const auto mix = GeneratorModel::gaussian_mixture(2, {0.3, -0.2}, {{0.1, -0.4}, {1.2, 0.8}});
    const auto aff = GeneratorModel::affine(2, {1.1, 0.2, -0.3, 0.9}, {0.2, -0.1});
    worst = std::max({worst, gradient_mismatch(mix, data, gamma), gradient_mismatch(aff, data, gamma)});
  }
  const auto target = sample(Gaussian{{1.5, -0.7}, 1.0}, 2000, 809);
  SgdOptions o;
  o.seed = 810;
  const auto fit = fit_min_energy_sgd(target, GeneratorModel::gaussian_mixture(2, 1), GammaOrder(1.0, 2), o, pool());
  const auto& th = fit.model.theta();
  const double err = std::max(std::abs(th[1] - 1.5), std::abs(th[2] + 0.7));
  return {worst <= 1e-4 && err <= 0.1, "max relative gradient error " + num(worst) + "; fitted mean (" +
                                           num(th[1]) + ", " + num(th[2]) + "), error " + num(err)};
}

Outcome criterion9() {
  // Size under the null.
  const std::size_t runs = 500;
  std::vector<char> rej = pool().map<char>(runs, [](std::size_t r) {
    const auto x = sample(Gaussian{{0.0}, 1.0}, 50, substream(901, r));
    const auto y = sample(Gaussian{{0.0}, 1.0}, 50, substream(902, r));
    return static_cast<char>(permutation_test(x, y, StatisticSpec{}, 0.05, 99, substream(903, r)).reject);
  });
  const double size = static_cast<double>(std::count(rej.begin(), rej.end(), 1)) / runs;

  // Ordering on the construction pair, below the sample-size budget.
  const auto c = build_construction_pair(1.0, 0.1);
  StatisticSpec energy;
  energy.schedule = GammaSchedule::kInverseLog;
  energy.grid_bins = 8192;
  StatisticSpec dh;
  dh.kind = StatisticKind::kDhbar;
  PowerOptions o;
  o.trials = 200;
  o.seed = 904;
  const std::vector<std::size_t> ns{3000, 6000, 12000, 20000};
  const auto rec = power_curve(c.sampler_p(), c.sampler_q(), {energy, dh}, ns, o, pool());
  bool ordered = true;
  std::string d;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    ordered = ordered && rec[i].power > rec[ns.size() + i].power;
    d += " n=" + std::to_string(ns[i]) + ": " + num(rec[i].power, 3) + " vs " + num(rec[ns.size() + i].power, 3) + ";";
  }
  return {std::abs(size - 0.05) <= 0.02 && ordered,
          "null size " + num(size) + "; power energy vs dhbar (budget " + num(tst_bad_budget(0.1, 1.0), 6) + "):" + d};
}

Outcome criterion10() {
  std::size_t mismatches = 0, checked = 0;
  for (std::size_t n : {10, 100, 1000, 5000, 123457}) {
    for (double delta : {0.01, 0.05, 0.2}) {
      for (double c : {0.5, 1.0, 2.0}) {
        StoppingConfig cfg;
        cfg.n = n;
        cfg.delta = delta;
        cfg.c_cal = c;
        for (std::size_t k = 1; k <= 40; ++k) {
          const double kk = static_cast<double>(k);
          const auto want = static_cast<std::size_t>(
              std::ceil(c * static_cast<double>(n) * std::log(kk * kk / delta) / std::log(1.0 / delta)));
          mismatches += cfg.samples_for(k) != want;
          ++checked;
        }
      }
    }
  }
  const auto truth = GeneratorModel::gaussian_mixture(1, {0.0, 0.5}, {{-1.0}, {1.5}});
  const std::size_t trials = 50;
  const auto hits = pool().map<char>(trials, [&](std::size_t t) {
    const auto data = truth.sample(5000, substream(1001, t));
    auto candidates = [&](std::size_t k) -> std::optional<GeneratorModel> {
      if (k == 1) return truth;
      if (k > 4) return std::nullopt;
      return GeneratorModel::gaussian_mixture(1, {0.0, 0.5}, {{-1.0 + 0.5 * static_cast<double>(k)}, {1.5}});
    };
    StoppingConfig cfg;
    cfg.gamma = gamma_for(GammaSchedule::kInverseLog, data.size());
    cfg.seed = substream(1002, t);
    const auto rep = stopping_verifier(data, candidates, cfg);
    return static_cast<char>(rep.stopped && rep.k_star == 1);
  });
  const auto stops = static_cast<std::size_t>(std::count(hits.begin(), hits.end(), 1));
  return {mismatches == 0 && stops * 10 >= trials * 9,
          std::to_string(checked - mismatches) + "/" + std::to_string(checked) + " schedule entries exact; stopped at k=1 in " +
              std::to_string(stops) + "/" + std::to_string(trials)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome criterion11(const std::string& cli_arg) {
  const std::string cli = fs::absolute(cli_arg).string();
  const fs::path dir = fs::temp_directory_path() / "edist_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_csv(sample(Gaussian{{0.0, 0.0}, 1.0}, 120, 1), dir / "a2.csv");
  save_csv(sample(Gaussian{{0.5, 0.0}, 1.0}, 100, 2), dir / "b2.csv");
  save_csv(sample(Gaussian{{0.0}, 1.0}, 300, 3), dir / "a1.csv");
  save_csv(sample(Gaussian{{0.4}, 1.0}, 250, 4), dir / "b1.csv");
  struct Run { std::string name, args; bool csv; };
  const std::vector<Run> runs{
      {"energy", "energy a2.csv b2.csv --gamma 0.5", false},
      {"slice", "slice a2.csv b2.csv --n-dirs 500", true},
      {"halfspace", "halfspace a2.csv b2.csv", false},
      {"tstat", "tstat a2.csv b2.csv --k 1", false},
      {"fit", "fit a2.csv --steps 200 --components 2", true},
      {"discrete", "discrete --counts 5,9,3,0,7,2,4,1", true},
      {"stop", "stop a1.csv --candidate-shifts 1,0.5,0", true},
      {"test", "test a1.csv b1.csv --statistic dhbar --permutations 199", false},
      {"power", "power --pair gaussian-shift --n-list 20,60 --trials 30 --statistics energy,dhbar,t_dk:1,chi2:8 --n-dirs 32", true},
      {"construct", "construct verify --r-list 16,32,64", true},
      {"rates", "rates discrete --k 8 --trials 30", true},
      {"bench", "bench --op energy --sizes 64,128", true},
  };
  std::vector<std::string> failed;
  for (const auto& r : runs) {
    std::vector<std::string> outputs;
    for (int threads : {1, 4, 1}) {
      const std::string tag = r.name + "_" + std::to_string(outputs.size());
      const std::string cmd = "cd '" + dir.string() + "' && '" + cli + "' " + r.args + " --threads " +
                              std::to_string(threads) + " --output " + tag + ".json" +
                              (r.csv ? " --csv " + tag + ".csv" : "") + " 2>/dev/null";
      if (std::system(cmd.c_str()) != 0) {
        outputs.push_back("<exit failure>");
        continue;
      }
      outputs.push_back(slurp(dir / (tag + ".json")) + (r.csv ? slurp(dir / (tag + ".csv")) : ""));
    }
    if (outputs[0] == "<exit failure>" || outputs[0] != outputs[1] || outputs[0] != outputs[2]) failed.push_back(r.name);
  }
  fs::remove_all(dir);
  std::string d = std::to_string(runs.size() - failed.size()) + "/" + std::to_string(runs.size()) +
                  " subcommands byte-identical at 1 and 4 threads";
  for (const auto& f : failed) d += " [differs: " + f + "]";
  return {failed.empty(), d};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <edist-cli> [criteria...]\n";
    return 2;
  }
  const std::string cli = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  // Runtime budgets in seconds (0: none).
  struct Criterion { int id; double budget; std::function<Outcome()> run; };
  const std::vector<Criterion> all{
      {1, 120, criterion1},  {2, 300, criterion2}, {3, 0, criterion3},  {4, 0, criterion4},
      {5, 600, criterion5},  {6, 0, criterion6},   {7, 300, criterion7}, {8, 0, criterion8},
      {9, 0, criterion9},    {10, 0, criterion10}, {11, 0, [&] { return criterion11(cli); }},
  };
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget > 0 && secs > c.budget) {
      o.pass = false;
      o.detail += "; over the " + num(c.budget) + " s budget";
    }
    failures += !o.pass;
    std::printf("criterion %2d: %s  %s  (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
