#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numbers>
#include <set>

#include "edist/energy.hpp"
#include "edist/error.hpp"
#include "edist/estimation.hpp"
#include "edist/halfspace.hpp"
#include "edist/measures.hpp"
#include "edist/regression.hpp"
#include "edist/rng.hpp"
#include "edist/sliced.hpp"
#include "edist/spectral.hpp"
#include "edist/testing.hpp"

namespace edist::cli {

std::string cell(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string cell(std::size_t v) { return std::to_string(v); }

namespace {

std::vector<Param> with_globals(std::vector<Param> params) {
  auto g = global_params();
  params.insert(params.end(), g.begin(), g.end());
  return params;
}

Param input_param(std::string key, std::string help) {
  return string_param(std::move(key), nullptr, std::move(help)).as_positional().mandatory();
}

Param gamma_param() { return real_param("gamma", 1.0, "energy exponent in (0, 2)").in_open(0.0, 2.0); }

std::pair<EmpiricalMeasure, EmpiricalMeasure> load_pair(const Config& cfg) {
  auto x = load_csv(cfg.str("x"));
  auto y = load_csv(cfg.str("y"), x.dim());
  return {std::move(x), std::move(y)};
}

json fit_json(const LogLogFit& f) {
  return {{"slope", f.slope}, {"stderr", f.stderr_slope}, {"intercept", f.intercept}, {"ci95", f.ci95}};
}

// ---------------------------------------------------------------------------

Artifacts run_energy(const Config& cfg) {
  const auto [x, y] = load_pair(cfg);
  const GammaOrder g(cfg.real("gamma"), x.dim());
  const auto& ex = cfg.executor();
  const auto method = cfg.str("method");
  Artifacts a;
  double e2 = 0.0;
  if (method == "vstat") {
    e2 = energy_sq_vstat(x, y, g, ex);
  } else if (method == "ustat") {
    e2 = energy_sq_ustat(x, y, g, ex);
  } else if (method == "mmd") {
    e2 = energy_sq_mmd(x, y, g, ex);
  } else if (method == "fourier") {
    e2 = energy_sq_fourier_1d(x, y, g, cfg.count("panels"), cfg.real_or("tolerance", 1e-10));
  } else {
    const auto s = sliced_energy_sq_mc(x, y, g, cfg.count("n_dirs"), substream(cfg.seed(), "directions"), ex);
    e2 = s.value;
    a.result["std_error"] = s.std_error;
    a.result["n_dirs"] = s.n_dirs;
  }
  a.result["energy_sq"] = e2;
  a.result["energy"] = std::sqrt(std::max(0.0, e2));
  a.result["n"] = x.size();
  a.result["m"] = y.size();
  a.result["dim"] = x.dim();
  a.result["gamma"] = g.gamma();
  a.result["method"] = method;
  return a;
}

Artifacts run_slice(const Config& cfg) {
  const auto [x, y] = load_pair(cfg);
  const GammaOrder g(cfg.real("gamma"), x.dim());
  const std::size_t n_dirs = cfg.count("n_dirs");
  if (n_dirs == 0) throw InvalidArgument("n_dirs must be positive");
  const auto seed = substream(cfg.seed(), "directions");
  // Direction prefixes are nested, so the table shows one Monte Carlo path.
  std::vector<std::size_t> prefixes;
  for (std::size_t p = 1; p < n_dirs; p *= 2) prefixes.push_back(p);
  prefixes.push_back(n_dirs);
  Artifacts a;
  Table t{{"n_dirs", "estimate", "std_error"}, {}};
  SlicedEstimate last;
  for (std::size_t p : prefixes) {
    last = sliced_energy_sq_mc(x, y, g, p, seed, cfg.executor());
    t.rows.push_back({cell(p), cell(last.value), cell(last.std_error)});
  }
  a.result = {{"estimate", last.value}, {"std_error", last.std_error}, {"n_dirs", n_dirs},
              {"scale", slice_scale(g.gamma(), x.dim())}, {"gamma", g.gamma()}, {"dim", x.dim()},
              {"n", x.size()}, {"m", y.size()}};
  if (cfg.flag("exact")) a.result["vstat"] = energy_sq_vstat(x, y, g, cfg.executor());
  a.table = std::move(t);
  return a;
}

Artifacts run_halfspace(const Config& cfg) {
  const auto [x, y] = load_pair(cfg);
  const auto method = cfg.str("method");
  const auto seed = substream(cfg.seed(), "directions");
  const std::size_t n_dirs = cfg.count("n_dirs");
  const auto& ex = cfg.executor();
  HalfspaceWitness w;
  if (method == "auto") {
    w = dhbar(x, y, n_dirs, seed, ex);
  } else if (method == "heuristic") {
    w = dhbar_heuristic(x, y, n_dirs, seed, ex);
  } else if (x.dim() == 1) {
    w = dhbar_1d(x, y);
  } else if (x.dim() == 2) {
    w = dhbar_2d_exact(x, y, {}, ex);
  } else if (x.dim() == 3) {
    w = dhbar_3d_enumerate(x, y);
  } else {
    throw InvalidArgument("exact halfspace search is available for d <= 3 only");
  }
  const std::size_t d = x.dim();
  const GammaOrder g1(1.0, d);
  const double e1 = std::sqrt(energy_sq_vstat(x, y, g1, ex));
  const double half_d = 0.5 * static_cast<double>(d);
  Artifacts a;
  a.result = {{"dhbar", w.value},
              {"direction", w.direction},
              {"threshold", w.threshold},
              {"exact", w.exact},
              {"method", method},
              {"dh_average", g1.dh_factor() * e1},
              {"sandwich_factor", std::sqrt(std::tgamma(half_d) / (4.0 * std::pow(std::numbers::pi, half_d)))},
              {"n", x.size()},
              {"m", y.size()},
              {"dim", d}};
  return a;
}

Artifacts run_tstat(const Config& cfg) {
  const auto [x, y] = load_pair(cfg);
  const int k = static_cast<int>(cfg.integer("k"));
  const auto seed = substream(cfg.seed(), "directions");
  const std::size_t n_dirs = cfg.count("n_dirs"), n_grid = cfg.count("n_grid");
  const double v = n_grid > 0 ? t_stat_dk_grid(x, y, k, n_dirs, seed, n_grid, cfg.executor())
                              : t_stat_dk(x, y, k, n_dirs, seed, cfg.executor());
  Artifacts a;
  a.result = {{"t_stat", v}, {"k", k}, {"n_dirs", n_dirs}, {"threshold_search", n_grid > 0 ? "grid" : "exact"},
              {"n", x.size()}, {"m", y.size()}, {"dim", x.dim()}};
  return a;
}

Artifacts run_fit(const Config& cfg) {
  const auto data = load_csv(cfg.str("data"));
  const std::size_t dim = data.dim();
  GeneratorModel model = GeneratorModel::affine(dim);
  if (cfg.str("model") == "gaussian-mixture") {
    // Means start at distinct random data points; equal logits.
    const std::size_t k = cfg.count("components");
    if (k == 0 || k > data.size()) throw InvalidArgument("components must be in [1, number of data points]");
    Rng rng(substream(cfg.seed(), "init"));
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(std::span<std::size_t>(idx));
    std::vector<std::vector<double>> means;
    for (std::size_t c = 0; c < k; ++c) {
      const auto p = data.point(idx[c]);
      means.emplace_back(p.begin(), p.end());
    }
    model = GeneratorModel::gaussian_mixture(dim, std::vector<double>(k, 0.0), means);
  }
  SgdOptions o;
  o.steps = cfg.count("steps");
  o.batch_m = cfg.count("batch");
  o.learning_rate = cfg.real("learning_rate");
  o.seed = substream(cfg.seed(), "sgd");
  const GammaOrder g(cfg.real("gamma"), dim);
  const auto res = fit_min_energy_sgd(data, model, g, o, cfg.executor());

  Artifacts a;
  const auto& m = res.model;
  const auto& th = m.theta();
  a.result["model"] = m.kind_name();
  a.result["theta"] = th;
  a.result["steps"] = o.steps;
  if (m.kind() == GeneratorKind::kGaussianMixture) {
    a.result["weights"] = m.mixture_weights();
    json means = json::array();
    for (std::size_t c = 0; c < m.components(); ++c) {
      means.push_back(std::vector<double>(th.begin() + static_cast<std::ptrdiff_t>(m.components() + c * dim),
                                          th.begin() + static_cast<std::ptrdiff_t>(m.components() + (c + 1) * dim)));
    }
    a.result["means"] = means;
  } else {
    a.result["a"] = std::vector<double>(th.begin(), th.begin() + static_cast<std::ptrdiff_t>(dim * dim));
    a.result["b"] = std::vector<double>(th.begin() + static_cast<std::ptrdiff_t>(dim * dim), th.end());
  }
  const std::size_t tail = std::max<std::size_t>(1, std::min<std::size_t>(100, res.trace.size()));
  double s = 0.0;
  for (std::size_t i = res.trace.size() - std::min(tail, res.trace.size()); i < res.trace.size(); ++i) s += res.trace[i];
  a.result["final_loss"] = res.trace.empty() ? 0.0 : s / static_cast<double>(std::min(tail, res.trace.size()));
  Table t{{"step", "loss"}, {}};
  for (std::size_t i = 0; i < res.trace.size(); ++i) t.rows.push_back({cell(i), cell(res.trace[i])});
  a.table = std::move(t);
  return a;
}

Artifacts run_discrete(const Config& cfg) {
  const auto counts = cfg.counts("counts");
  if (counts.size() < 2) throw InvalidArgument("counts needs at least two symbols");
  const auto cb = build_codebook(counts.size(), cfg.real("delta"), substream(cfg.seed(), "codebook"));
  SimplexOptions o;
  o.max_iterations = cfg.count("max_iterations");
  o.gap_tolerance = cfg.real("gap_tolerance");
  o.gamma = cfg.real("gamma");
  const auto res = fit_discrete_simplex(counts, cb, cfg.counts("support"), o);
  std::size_t n = 0;
  for (auto c : counts) n += c;
  std::vector<double> emp(counts.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    emp[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    l1 += std::abs(emp[i] - res.pmf[i]);
  }
  Artifacts a;
  a.result = {{"pmf", res.pmf},
              {"empirical", emp},
              {"objective", res.objective},
              {"fw_gap", res.fw_gap},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"l1_to_empirical", l1},
              {"n", n},
              {"codebook", {{"k", cb.k()}, {"dim", cb.dim}, {"min_dist", cb.min_dist}}}};
  Table t{{"symbol", "count", "empirical", "fitted"}, {}};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    t.rows.push_back({cell(i), cell(counts[i]), cell(emp[i]), cell(res.pmf[i])});
  }
  a.table = std::move(t);
  return a;
}

Artifacts run_stop(const Config& cfg) {
  const auto data = load_csv(cfg.str("data"));
  const auto shifts = cfg.reals("candidate_shifts");
  const std::size_t dim = data.dim();
  std::vector<double> eye(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) eye[i * dim + i] = 1.0;
  auto candidates = [&](std::size_t k) -> std::optional<GeneratorModel> {
    if (k > shifts.size()) return std::nullopt;
    return GeneratorModel::affine(dim, eye, std::vector<double>(dim, shifts[k - 1]));
  };
  StoppingConfig sc;
  sc.n = cfg.count("n");
  sc.delta = cfg.real("delta");
  const std::size_t n_eff = sc.n == 0 ? data.size() : sc.n;
  sc.gamma = cfg.str("gamma_schedule") == "none" ? cfg.real("gamma")
                                                 : gamma_for(parse_gamma_schedule(cfg.str("gamma_schedule")), n_eff);
  sc.c_cal = cfg.real("c_cal");
  sc.tau = cfg.real("tau");
  sc.max_candidates = cfg.count("max_candidates");
  sc.seed = substream(cfg.seed(), "candidates");
  const auto rep = stopping_verifier(data, candidates, sc, cfg.executor());
  Artifacts a;
  a.result = {{"stopped", rep.stopped}, {"k_star", rep.k_star}, {"gamma", sc.gamma}, {"certificate", rep.certificate},
              {"threshold", rep.threshold}, {"values", rep.values}, {"sample_sizes", rep.sample_sizes}};
  Table t{{"k", "m_k", "value", "threshold"}, {}};
  for (std::size_t i = 0; i < rep.values.size(); ++i) {
    t.rows.push_back({cell(i + 1), cell(rep.sample_sizes[i]), cell(rep.values[i]), cell(rep.threshold)});
  }
  a.table = std::move(t);
  return a;
}

// "energy", "energy:0.5", "energy:inv-log", "t_dk:2", "chi2:64".
StatisticSpec statistic_from(const std::string& text, const Config& cfg) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  StatisticSpec s;
  s.kind = parse_statistic_kind(head);
  s.gamma = cfg.real("gamma");
  if (cfg.str("gamma_schedule") != "none") s.schedule = parse_gamma_schedule(cfg.str("gamma_schedule"));
  s.k = static_cast<int>(cfg.integer("k"));
  s.n_dirs = cfg.count("n_dirs");
  s.direction_seed = substream(cfg.seed(), "directions");
  s.grid_bins = cfg.count("grid_bins");
  s.chi_bins = cfg.count("chi_bins");
  if (colon == std::string::npos) return s;
  const std::string arg = text.substr(colon + 1);
  try {
    if (s.kind == StatisticKind::kEnergy) {
      if (arg.find_first_not_of("0123456789.eE+-") == std::string::npos) {
        s.gamma = std::stod(arg);
        s.schedule.reset();
      } else {
        s.schedule = parse_gamma_schedule(arg);
      }
    } else if (s.kind == StatisticKind::kTdk) {
      s.k = std::stoi(arg);
    } else if (s.kind == StatisticKind::kChiSquare) {
      s.chi_bins = static_cast<std::size_t>(std::stoul(arg));
    } else {
      throw InvalidArgument("");
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad statistic '" + text + "'");
  } catch (const InvalidArgument&) {
    throw InvalidArgument("bad statistic '" + text + "'");
  }
  return s;
}

json report_json(const TestReport& r) {
  json j = {{"statistic", r.statistic_name}, {"observed", r.observed}, {"threshold", r.threshold},
            {"reject", r.reject}, {"n", r.n}, {"m", r.m}, {"permutations", r.permutations},
            {"level", r.level}, {"calibration", r.calibration}, {"method", r.method}};
  j["p_value"] = r.p_value ? json(*r.p_value) : json();
  return j;
}

Artifacts run_test(const Config& cfg) {
  const auto [x, y] = load_pair(cfg);
  const auto spec = statistic_from(cfg.str("statistic"), cfg);
  const auto rep = cfg.str("calibration") == "permutation"
                       ? permutation_test(x, y, spec, cfg.real("level"), cfg.count("permutations"),
                                          substream(cfg.seed(), "test"), cfg.executor())
                       : threshold_test(x, y, spec, cfg.real("exponent"), cfg.executor());
  Artifacts a;
  a.result = report_json(rep);
  return a;
}

Artifacts run_power(const Config& cfg) {
  Artifacts a;
  DistributionSpec p, q;
  if (cfg.str("pair") == "construction") {
    ConstructionOptions co;
    co.oversample = static_cast<int>(cfg.integer("oversample"));
    const auto c = build_construction_pair(cfg.real("beta"), cfg.real("epsilon"), co);
    p = c.sampler_p();
    q = c.sampler_q();
    a.result["construction"] = {{"r", c.r()}, {"beta_bar", c.beta_bar()}, {"tv", c.tv()},
                                {"energy1", c.energy1()}, {"dhbar", c.dhbar()}};
    a.result["budget"] = tst_bad_budget(cfg.real("epsilon"), cfg.real("beta"));
  } else {
    const std::size_t d = cfg.count("dim");
    if (d == 0) throw InvalidArgument("dim must be positive");
    std::vector<double> shifted(d, 0.0);
    shifted[0] = cfg.real("shift");
    p = Gaussian{std::vector<double>(d, 0.0), 1.0};
    q = Gaussian{shifted, 1.0};
  }
  std::vector<StatisticSpec> stats;
  for (const auto& s : cfg.strings("statistics")) stats.push_back(statistic_from(s, cfg));
  if (stats.empty()) throw InvalidArgument("statistics must not be empty");
  PowerOptions o;
  o.level = cfg.real("level");
  o.permutations = cfg.count("permutations");
  o.trials = cfg.count("trials");
  o.seed = substream(cfg.seed(), "power");
  const auto records = power_curve(p, q, stats, cfg.counts("n_list"), o, cfg.executor());
  json rec = json::array();
  Table t{{"statistic", "n", "trials", "power", "mean_stat", "se_stat", "seed"}, {}};
  for (const auto& r : records) {
    rec.push_back({{"statistic", r.statistic}, {"n", r.n}, {"trials", r.trials}, {"power", r.power},
                   {"mean_stat", r.mean_stat}, {"se_stat", r.se_stat}, {"seed", r.seed}});
    t.rows.push_back({r.statistic, cell(r.n), cell(r.trials), cell(r.power), cell(r.mean_stat),
                      cell(r.se_stat), std::to_string(r.seed)});
  }
  a.result["records"] = rec;
  a.table = std::move(t);
  return a;
}

Artifacts run_construct(const Config& cfg) {
  const double beta = cfg.real("beta");
  ConstructionOptions co;
  co.oversample = static_cast<int>(cfg.integer("oversample"));
  const auto mode = cfg.str("mode");
  const auto& ex = cfg.executor();
  Artifacts a;
  if (mode == "verify") {
    const int beta_bar = cfg.integer("beta_bar") > 0 ? static_cast<int>(cfg.integer("beta_bar"))
                                                     : static_cast<int>(std::ceil(beta)) + 1;
    std::vector<double> t_list = cfg.reals("t_list");
    if (t_list.empty()) {
      std::set<double> ts{-1.0, 0.0, 1.0, static_cast<double>(beta_bar - 1)};
      t_list.assign(ts.begin(), ts.end());
    }
    std::vector<int> r_list;
    for (long long r : cfg.integers("r_list")) {
      if (r < 1) throw InvalidArgument("r_list entries must be positive");
      r_list.push_back(static_cast<int>(r));
    }
    const auto rep = verify_scaling(beta_bar, t_list, r_list, co, ex);
    json slopes = json::array();
    for (std::size_t i = 0; i < t_list.size(); ++i) {
      auto f = fit_json(rep.norm_fits[i]);
      f["t"] = t_list[i];
      slopes.push_back(f);
    }
    a.result = {{"beta_bar", beta_bar}, {"r_list", r_list}, {"t_list", t_list}, {"norm_slopes", slopes},
                {"l1", fit_json(rep.l1_fit)}, {"dhbar", fit_json(rep.dhbar_fit)}};
    Table t{{"r", "l1", "dhbar"}, {}};
    for (double tv : t_list) t.header.push_back("norm_t=" + cell(tv));
    for (std::size_t j = 0; j < r_list.size(); ++j) {
      std::vector<std::string> row{cell(static_cast<std::size_t>(r_list[j])), cell(rep.l1[j]), cell(rep.dhbar[j])};
      for (std::size_t i = 0; i < t_list.size(); ++i) row.push_back(cell(rep.norms[i][j]));
      t.rows.push_back(std::move(row));
    }
    a.table = std::move(t);
  } else if (mode == "pair") {
    const auto c = build_construction_pair(beta, cfg.real("epsilon"), co);
    a.result = {{"r", c.r()}, {"beta_bar", c.beta_bar()}, {"epsilon", c.epsilon()}, {"kappa", c.kappa()},
                {"tv", c.tv()}, {"energy1", c.energy1()}, {"dhbar", c.dhbar()}, {"spacing", c.spacing()},
                {"support_radius", c.support_radius()}, {"mean_residual", c.mean_residual()}};
    Table t{{"x", "p0", "p", "q"}, {}};
    for (std::size_t i = 0; i < c.grid().size(); ++i) {
      t.rows.push_back({cell(c.grid()[i]), cell(c.p0()[i]), cell(c.p()[i]), cell(c.q()[i])});
    }
    a.table = std::move(t);
  } else {
    const auto eps = cfg.reals("epsilon_list");
    if (eps.size() < 2) throw InvalidArgument("epsilon_list needs at least two values");
    struct Row { int r; double tv, e1, dh; };
    const auto rows = ex.map<Row>(eps.size(), [&](std::size_t i) {
      const auto c = build_construction_pair(beta, eps[i], co);
      return Row{c.r(), c.tv(), c.energy1(), c.dhbar()};
    });
    std::vector<double> tv, e1, dh;
    Table t{{"epsilon", "r", "tv", "energy1", "dhbar"}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      tv.push_back(rows[i].tv);
      e1.push_back(rows[i].e1);
      dh.push_back(rows[i].dh);
      t.rows.push_back({cell(eps[i]), cell(static_cast<std::size_t>(rows[i].r)), cell(rows[i].tv),
                        cell(rows[i].e1), cell(rows[i].dh)});
    }
    a.result = {{"energy1_vs_tv", fit_json(fit_loglog(tv, e1))},
                {"dhbar_vs_tv", fit_json(fit_loglog(tv, dh))},
                {"predicted_energy1_slope", (2.0 * beta + 2.0) / (2.0 * beta)},
                {"predicted_dhbar_slope", (beta + 1.0) / beta},
                {"epsilon_list", eps}};
    a.table = std::move(t);
  }
  a.result["mode"] = mode;
  return a;
}

Artifacts run_rates(const Config& cfg) {
  const auto n_list = cfg.counts("n_list");
  const auto seed = substream(cfg.seed(), "rates");
  const RateReport rep =
      cfg.str("mode") == "discrete"
          ? discrete_rate_experiment(cfg.count("k"), n_list, cfg.count("trials"), seed, cfg.executor())
          : concentration_experiment(cfg.count("dim"), cfg.real("gamma"), n_list, cfg.count("trials"),
                                     cfg.count("reference_n"), seed, cfg.executor());
  Artifacts a;
  json pts = json::array();
  Table t{{"n", "mean", "std_error", "reference"}, {}};
  for (const auto& p : rep.points) {
    pts.push_back({{"n", p.n}, {"mean", p.mean}, {"std_error", p.std_error}, {"reference", p.reference}});
    t.rows.push_back({cell(p.n), cell(p.mean), cell(p.std_error), cell(p.reference)});
  }
  // Summary row: slope, its standard error and the 95% half-width.
  t.rows.push_back({"slope", cell(rep.fit.slope), cell(rep.fit.stderr_slope), cell(rep.fit.ci95)});
  a.result = {{"quantity", rep.quantity}, {"points", pts}, {"fit", fit_json(rep.fit)},
              {"trials", rep.trials}, {"mode", cfg.str("mode")}};
  a.table = std::move(t);
  return a;
}

Artifacts run_bench(const Config& cfg) {
  const auto op = cfg.str("op");
  const std::size_t d = cfg.count("dim"), repeats = std::max<std::size_t>(1, cfg.count("repeats"));
  const auto& ex = cfg.executor();
  const GammaOrder g(cfg.real("gamma"), d);
  const bool timings = cfg.flag("record_timings");
  Artifacts a;
  json rec = json::array();
  Table t{{"op", "n", "value"}, {}};
  if (timings) t.header.push_back("median_ms");
  for (std::size_t n : cfg.counts("sizes")) {
    const auto x = sample(Gaussian{std::vector<double>(d, 0.0), 1.0}, n, substream(substream(cfg.seed(), "x"), n));
    auto shifted = std::vector<double>(d, 0.0);
    shifted[0] = 0.25;
    const auto y = sample(Gaussian{shifted, 1.0}, n, substream(substream(cfg.seed(), "y"), n));
    std::vector<double> ms;
    double value = 0.0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      if (op == "energy") {
        value = energy_sq_vstat(x, y, g, ex);
      } else if (op == "sliced") {
        value = sliced_energy_sq_mc(x, y, g, 1000, substream(cfg.seed(), "directions"), ex).value;
      } else if (op == "dhbar") {
        value = dhbar(x, y, 512, substream(cfg.seed(), "directions"), ex).value;
      } else if (op == "tstat") {
        value = t_stat_dk(x, y, 1, 512, substream(cfg.seed(), "directions"), ex);
      } else {
        value = *permutation_test(x, y, StatisticSpec{}, 0.05, 99, substream(cfg.seed(), "test"), ex).p_value;
      }
      ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    const double median = ms[ms.size() / 2];
    std::cerr << "bench " << op << " n=" << n << " median " << median << " ms\n";
    json r = {{"op", op}, {"n", n}, {"value", value}};
    std::vector<std::string> row{op, cell(n), cell(value)};
    if (timings) {
      r["median_ms"] = median;
      row.push_back(cell(median));
    }
    rec.push_back(r);
    t.rows.push_back(std::move(row));
  }
  a.result = {{"records", rec}, {"dim", d}, {"repeats", repeats}};
  a.table = std::move(t);
  return a;
}

std::vector<Command> build() {
  std::vector<Command> c;
  c.push_back({"energy", "squared generalized energy distance between two CSV samples",
               with_globals({input_param("x", "first sample CSV"), input_param("y", "second sample CSV"), gamma_param(),
                             string_param("method", "vstat", "vstat, ustat, mmd, fourier (d = 1) or sliced")
                                 .one_of({"vstat", "ustat", "mmd", "fourier", "sliced"}),
                             int_param("n_dirs", 10000, "directions for the sliced method").at_least(1),
                             int_param("panels", 256, "quadrature panels for the fourier method").at_least(1)}),
               run_energy});
  c.push_back({"slice", "Monte Carlo sliced estimate of the energy distance",
               with_globals({input_param("x", "first sample CSV"), input_param("y", "second sample CSV"), gamma_param(),
                             int_param("n_dirs", 1000, "random directions").at_least(1),
                             bool_param("exact", false, "also report the exact V-statistic")}),
               run_slice});
  c.push_back({"halfspace", "perceptron discrepancy with a witness halfspace",
               with_globals({input_param("x", "first sample CSV"), input_param("y", "second sample CSV"),
                             string_param("method", "auto", "auto, exact or heuristic").one_of({"auto", "exact", "heuristic"}),
                             int_param("n_dirs", 512, "directions of the heuristic search").at_least(1)}),
               run_halfspace});
  c.push_back({"tstat", "ramp-feature statistic T_{d,k}",
               with_globals({input_param("x", "first sample CSV"), input_param("y", "second sample CSV"),
                             int_param("k", 1, "ramp power").at_least(0),
                             int_param("n_dirs", 512, "random directions").at_least(1),
                             int_param("n_grid", 0, "threshold grid size (0: exact search, k <= 2)").at_least(0)}),
               run_tstat});
  c.push_back({"fit", "minimum-energy generator fit by SGD",
               with_globals({input_param("data", "data CSV"),
                             string_param("model", "gaussian-mixture", "gaussian-mixture or affine")
                                 .one_of({"gaussian-mixture", "affine"}),
                             int_param("components", 1, "mixture components").at_least(1), gamma_param(),
                             int_param("steps", 2000, "SGD steps").at_least(0),
                             int_param("batch", 64, "generator batch size").at_least(1),
                             real_param("learning_rate", 0.05, "constant step size").at_least(0.0)}),
               run_fit});
  c.push_back({"discrete", "discrete estimator on a random hypercube code",
               with_globals({int_list_param("counts", nullptr, "symbol counts").mandatory(),
                             int_list_param("support", json::array(), "restrict the fit to these symbols"),
                             real_param("delta", 1.0, "target minimum codeword distance").above(0.0),
                             real_param("gamma", 1.0, "distance exponent of the quadratic form").in_open(0.0, 2.0),
                             int_param("max_iterations", 100000, "solver iteration cap").at_least(1),
                             real_param("gap_tolerance", 1e-10, "Frank-Wolfe gap tolerance").above(0.0)}),
               run_discrete});
  c.push_back({"stop", "stopping verifier over shifted unit Gaussian candidates",
               with_globals({input_param("data", "data CSV"),
                             real_list_param("candidate_shifts", nullptr, "candidate k is N(shift_k * 1, I)").mandatory(),
                             int_param("n", 0, "sample size in the schedule (0: data size)").at_least(0),
                             real_param("delta", 0.05, "confidence parameter").in_open(0.0, 1.0), gamma_param(),
                             string_param("gamma_schedule", "inv-log", "exponent schedule in n ('none': use --gamma)")
                                 .one_of({"none", "one", "inv-log", "inv-loglog"}),
                             real_param("c_cal", 1.0, "schedule constant").above(0.0),
                             real_param("tau", 1.5, "threshold constant").above(0.0),
                             int_param("max_candidates", 20, "candidates examined at most").at_least(1)}),
               run_stop});
  std::vector<Param> stat_params{
      gamma_param(),
      string_param("gamma_schedule", "none", "energy exponent schedule").one_of({"none", "one", "inv-log", "inv-loglog"}),
      int_param("k", 0, "ramp power of t_dk").at_least(0),
      int_param("n_dirs", 512, "directions for t_dk and d >= 3 halfspace search").at_least(1),
      int_param("grid_bins", 0, "FFT grid bins for 1-D energy (0: exact)").at_least(0),
      int_param("chi_bins", 20, "chi-square bins").at_least(1),
      real_param("level", 0.05, "test level").in_open(0.0, 1.0)};
  {
    std::vector<Param> p{input_param("x", "first sample CSV"), input_param("y", "second sample CSV"),
                         string_param("statistic", "energy", "energy[:gamma|:schedule], dhbar, t_dk[:k], chi2[:bins]"),
                         string_param("calibration", "permutation", "permutation or schedule").one_of({"permutation", "schedule"}),
                         int_param("permutations", 999, "permutations").at_least(99),
                         real_param("exponent", 0.25, "schedule t_n = n^-exponent").in_open(0.0, 0.5)};
    p.insert(p.end(), stat_params.begin(), stat_params.end());
    c.push_back({"test", "two-sample test", with_globals(p), run_test});
  }
  {
    std::vector<Param> p{string_param("pair", "construction", "construction or gaussian-shift").one_of({"construction", "gaussian-shift"}),
                         real_param("beta", 1.0, "smoothness").above(0.0),
                         real_param("epsilon", 0.1, "TV separation of the construction pair").in_open(0.0, 1.0),
                         int_param("oversample", 64, "construction grid oversampling").at_least(16),
                         real_param("shift", 0.5, "mean shift of the Gaussian pair"),
                         int_param("dim", 1, "dimension of the Gaussian pair").at_least(1),
                         string_list_param("statistics", json::array({"energy", "dhbar"}), "statistics to compare"),
                         int_list_param("n_list", json::array({250, 1000, 4000}), "sample sizes"),
                         int_param("trials", 200, "trials per point").at_least(1),
                         int_param("permutations", 99, "permutations per test").at_least(99)};
    p.insert(p.end(), stat_params.begin(), stat_params.end());
    c.push_back({"power", "power curves of two-sample tests", with_globals(p), run_power});
  }
  c.push_back({"construct", "one-dimensional lower-bound construction",
               with_globals({string_param("mode", nullptr, "verify, pair or tightness").one_of({"verify", "pair", "tightness"})
                                 .as_positional().mandatory(),
                             real_param("beta", 1.0, "smoothness").above(0.0),
                             int_param("beta_bar", 0, "convolution power (0: ceil(beta) + 1)").at_least(0),
                             real_param("epsilon", 0.1, "TV separation").in_open(0.0, 1.0),
                             int_list_param("r_list", json::array({16, 32, 64, 128, 256}), "frequencies"),
                             real_list_param("t_list", json::array(), "norm exponents (default -1, 0, 1, beta_bar - 1)"),
                             real_list_param("epsilon_list", json::array({0.2, 0.1, 0.05, 0.025}), "tightness sweep"),
                             int_param("oversample", 64, "grid oversampling").at_least(16)}),
               run_construct});
  c.push_back({"rates", "estimation rate experiments",
               with_globals({string_param("mode", nullptr, "discrete or concentration").one_of({"discrete", "concentration"})
                                 .as_positional().mandatory(),
                             int_param("k", 32, "alphabet size").at_least(2),
                             int_param("dim", 1, "ball dimension").at_least(1), gamma_param(),
                             int_list_param("n_list", json::array({100, 400, 1600}), "sample sizes"),
                             int_param("trials", 200, "trials per n").at_least(1),
                             int_param("reference_n", 1024, "reference sample size").at_least(2)}),
               run_rates});
  c.push_back({"bench", "timing of the core statistics on Gaussian samples",
               with_globals({string_param("op", "energy", "energy, sliced, dhbar, tstat or permutation")
                                 .one_of({"energy", "sliced", "dhbar", "tstat", "permutation"}),
                             int_list_param("sizes", json::array({256, 1024}), "sample sizes"),
                             int_param("dim", 2, "dimension").at_least(1), gamma_param(),
                             int_param("repeats", 3, "repetitions per size").at_least(1),
                             bool_param("record_timings", false, "write timings into the artifacts")}),
               run_bench});
  return c;
}

}  // namespace

const std::vector<Command>& commands() {
  static const std::vector<Command> all = build();
  return all;
}

}  // namespace edist::cli
