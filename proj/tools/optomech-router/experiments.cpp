#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include <optomech/optomech.h>

#include "cli.hpp"

namespace omcli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  std::vector<double> v = linspace(std::log(lo), std::log(hi), n);
  for (auto& x : v) x = std::exp(x);
  v.front() = lo;
  v.back() = hi;
  return v;
}

std::string last_error(omr_status s) {
  std::string msg = omr_last_error();
  return std::string(omr_status_string(s)) + (msg.empty() ? "" : ": " + msg);
}

json optional_number(int has, double v) { return has ? json(v) : json(nullptr); }

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// ---- blockade-scan --------------------------------------------------------

void run_blockade(const json& cfg, const std::filesystem::path& dir, unsigned jobs, std::ostream& log,
                  RunResult& r) {
  omr_system_params params;
  omr_system_params_default(&params);
  params.J = cfg["J"];
  params.g = cfg["g"];
  params.kappa = cfg["kappa"];
  params.gamma_m = cfg["gamma_m"];
  params.n_th = cfg["n_th"];
  params.eps1 = cfg["eps1"];
  params.eps2 = cfg["eps2"];

  const auto grid = linspace(cfg["delta_minus_min"], cfg["delta_minus_max"], cfg["delta_minus_points"]);
  const std::string which = cfg["model"];
  std::vector<omr_model> models;
  if (which != "original") models.push_back(OMR_MODEL_EFFECTIVE);
  if (which != "effective") models.push_back(OMR_MODEL_ORIGINAL);

  const std::string file = "blockade_scan.csv";
  CsvWriter csv(dir / file, cfg,
                {"delta_minus", "g2_mm", "g2_pp", "g2_mp", "n_minus", "n_plus", "hamiltonian", "converged"});
  r.files.push_back(file);

  for (omr_model model : models) {
    const std::string name = model == OMR_MODEL_EFFECTIVE ? "effective" : "original";
    omr_blockade_options opt;
    omr_blockade_options_default(&opt, model);
    if (model == OMR_MODEL_EFFECTIVE) {
      opt.cavity_dim = cfg["effective_cavity_dim"];
      opt.mech_minus_dim = cfg["effective_mech_dim"];
    } else {
      opt.cavity_dim = cfg["original_cavity_dim"];
      opt.mech_minus_dim = cfg["original_mech_minus_dim"];
      opt.mech_plus_dim = cfg["original_mech_plus_dim"];
      opt.basis = cfg["basis"] == "physical" ? OMR_BASIS_PHYSICAL : OMR_BASIS_QUASI;
    }
    opt.thermal = cfg["thermal"] == "literal" ? OMR_THERMAL_LITERAL : OMR_THERMAL_STANDARD;
    const std::string probe = cfg["convergence_probe"];
    if (probe == "none") opt.probe = OMR_PROBE_NONE;
    if (probe == "minima") opt.probe = OMR_PROBE_MINIMA;
    if (probe == "all") opt.probe = OMR_PROBE_ALL;
    opt.convergence_tolerance = cfg["convergence_tolerance"];
    opt.jobs = jobs;

    log << "blockade-scan: " << name << " model, " << grid.size() << " points\n" << std::flush;
    const auto t0 = Clock::now();
    omr_blockade_scan* raw = nullptr;
    const omr_status st = omr_blockade_scan_run(&params, grid.data(), grid.size(), &opt, &raw);
    r.timings[name + "_seconds"] = seconds_since(t0);
    if (st != OMR_OK) {
      r.checks.push_back({name + ".scan", false, last_error(st)});
      continue;
    }
    std::unique_ptr<omr_blockade_scan, decltype(&omr_blockade_scan_free)> scan(raw, omr_blockade_scan_free);

    json failed = json::array(), unconverged = json::array();
    std::size_t probed = 0;
    double worst_change = 0.0, worst_residual = 0.0;
    for (std::size_t i = 0; i < omr_blockade_scan_size(scan.get()); ++i) {
      omr_blockade_point p;
      omr_blockade_scan_point(scan.get(), i, &p);
      if (!p.ok) failed.push_back({{"delta_minus", p.delta_minus}, {"error", omr_blockade_scan_point_error(scan.get(), i)}});
      if (p.probed) {
        ++probed;
        worst_change = std::max(worst_change, p.convergence_change);
        if (!p.converged) unconverged.push_back({{"delta_minus", p.delta_minus}, {"change", p.convergence_change}});
      }
      if (p.ok) worst_residual = std::max(worst_residual, p.residual);
      csv.row({format_number(p.delta_minus), format_number(p.g2_mm), format_number(p.g2_pp), format_number(p.g2_mp),
               format_number(p.n_minus), format_number(p.n_plus), name,
               p.probed ? (p.converged ? "true" : "false") : "unprobed"});
    }

    json minima = json::object();
    const std::pair<omr_correlator, const char*> correlators[] = {
        {OMR_G2_MM, "g2_mm"}, {OMR_G2_PP, "g2_pp"}, {OMR_G2_MP, "g2_mp"}};
    for (const auto& [which_corr, key] : correlators) {
      omr_minima m;
      omr_blockade_scan_minima(scan.get(), which_corr, &m);
      minima[key] = {{"negative_half", optional_number(m.has_negative, m.negative)},
                     {"positive_half", optional_number(m.has_positive, m.positive)},
                     {"global", optional_number(m.has_global, m.global)}};
    }
    r.results[name] = {{"argmin", minima},
                       {"failed_points", failed},
                       {"probed_points", probed},
                       {"unconverged_points", unconverged},
                       {"worst_probe_change", worst_change},
                       {"worst_residual", worst_residual}};
    r.checks.push_back({name + ".all_points_solved", failed.empty(),
                        failed.empty() ? "" : std::to_string(failed.size()) + " points failed, first at delta_minus = " +
                                                  format_number(failed[0]["delta_minus"].get<double>()) + ": " +
                                                  failed[0]["error"].get<std::string>()});
    r.checks.push_back({name + ".truncation_converged", unconverged.empty(),
                        std::to_string(probed) + " points probed, worst relative change " +
                            format_number(worst_change)});
  }
  r.results["target_delta_minus"] = cfg["g"].get<double>() / std::sqrt(2.0);
}

// ---- router-scan ----------------------------------------------------------

void run_router_scan(const json& cfg, const std::filesystem::path& dir, unsigned jobs, std::ostream& log,
                     RunResult& r) {
  const auto grid = linspace(cfg["delta_prime_min"], cfg["delta_prime_max"], cfg["delta_prime_points"]);
  const double tol = cfg["normalization_tolerance"];
  json per_g = json::array();
  const auto t0 = Clock::now();
  for (double g : cfg["g_values"].get<std::vector<double>>()) {
    omr_router_params fixed;
    omr_router_params_default(&fixed);
    fixed.g = g;
    fixed.gamma = cfg["gamma"];
    fixed.epsilon = cfg["epsilon"];
    fixed.delta_minus = cfg["delta_minus"];
    const std::string tag = "g=" + label(g);
    log << "router-scan: " << tag << ", " << grid.size() << " points\n" << std::flush;

    omr_router_scan* raw = nullptr;
    const omr_status st = omr_router_scan_run(&fixed, grid.data(), grid.size(), jobs, &raw);
    if (st != OMR_OK) {
      r.checks.push_back({tag + ".scan", false, last_error(st)});
      continue;
    }
    std::unique_ptr<omr_router_scan, decltype(&omr_router_scan_free)> scan(raw, omr_router_scan_free);

    json cfg_g = cfg;
    cfg_g["g"] = g;
    const std::string file = "router_scan_g" + label(g) + ".csv";
    CsvWriter csv(dir / file, cfg_g, {"delta_prime", "n_r_minus", "n_l_minus", "n_r_plus", "n_l_plus", "sum"});
    r.files.push_back(file);

    double worst_sum = 0.0, worst_plus = 0.0;
    bool symmetric = true;
    json failed = json::array();
    for (std::size_t i = 0; i < omr_router_scan_size(scan.get()); ++i) {
      double dp = 0.0;
      omr_port_numbers n;
      int ok = 0;
      omr_router_scan_point(scan.get(), i, &dp, &n, &ok);
      const double sum = n.n_r_minus + n.n_l_minus + n.n_r_plus + n.n_l_plus;
      if (!ok) {
        failed.push_back({{"delta_prime", dp}, {"error", omr_router_scan_point_error(scan.get(), i)}});
      } else {
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        worst_plus = std::max({worst_plus, std::abs(n.n_r_plus), std::abs(n.n_l_plus)});
        if (n.n_r_plus != n.n_l_plus) symmetric = false;
      }
      csv.row({format_number(dp), format_number(n.n_r_minus), format_number(n.n_l_minus), format_number(n.n_r_plus),
               format_number(n.n_l_plus), format_number(sum)});
    }

    json maxima = json::array();
    for (std::size_t k = 0; k < omr_router_scan_extrema_count(scan.get(), OMR_PORT_L_MINUS); ++k) {
      omr_extremum e;
      omr_router_scan_extremum(scan.get(), OMR_PORT_L_MINUS, k, &e);
      if (e.is_maximum) maxima.push_back({{"delta_prime", e.delta_prime}, {"value", e.value}});
    }
    per_g.push_back({{"g", g},
                     {"file", file},
                     {"failed_points", failed},
                     {"max_normalization_error", worst_sum},
                     {"n_l_minus_maxima", maxima}});

    r.checks.push_back({tag + ".all_points_solved", failed.empty(),
                        failed.empty() ? "" : "first failure at delta_prime = " +
                                                  format_number(failed[0]["delta_prime"].get<double>()) + ": " +
                                                  failed[0]["error"].get<std::string>()});
    r.checks.push_back({tag + ".normalization", worst_sum <= tol, "max |sum - 1| = " + format_number(worst_sum)});
    r.checks.push_back({tag + ".plus_port_symmetry", symmetric, symmetric ? "n_l_plus == n_r_plus at every point"
                                                                         : "n_l_plus differs from n_r_plus"});
    if (g == 0.0) {
      r.checks.push_back({tag + ".plus_ports_zero", worst_plus == 0.0, "max plus-port number " +
                                                                           format_number(worst_plus)});
    }
  }
  r.timings["scan_seconds"] = seconds_since(t0);
  r.results["scans"] = per_g;
}

// ---- router-opt -----------------------------------------------------------

void run_router_opt(const json& cfg, const std::filesystem::path& dir, unsigned jobs, std::ostream& log,
                    RunResult& r) {
  const auto g_grid = cfg["g_values"].get<std::vector<double>>();
  const std::size_t ng = cfg["gamma_points"];
  const auto gamma_grid = cfg["gamma_spacing"] == "log" ? logspace(cfg["gamma_min"], cfg["gamma_max"], ng)
                                                        : linspace(cfg["gamma_min"], cfg["gamma_max"], ng);
  std::vector<double> n_r(g_grid.size() * ng), n_l(g_grid.size() * ng), argmax(g_grid.size());
  log << "router-opt: " << g_grid.size() << " x " << ng << " grid\n" << std::flush;
  const auto t0 = Clock::now();
  const omr_status st = omr_optimum_surface(g_grid.data(), g_grid.size(), gamma_grid.data(), ng, cfg["epsilon"], jobs,
                                            n_r.data(), n_l.data(), argmax.data());
  r.timings["surface_seconds"] = seconds_since(t0);
  if (st != OMR_OK) {
    r.checks.push_back({"surface", false, last_error(st)});
    return;
  }

  const std::string file = "router_opt.csv";
  CsvWriter csv(dir / file, cfg, {"g", "gamma", "n_r_plus", "n_l_plus"});
  r.files.push_back(file);
  bool symmetric = true, finite = true;
  for (std::size_t i = 0; i < g_grid.size(); ++i) {
    for (std::size_t j = 0; j < ng; ++j) {
      const double a = n_r[i * ng + j], b = n_l[i * ng + j];
      symmetric = symmetric && a == b;
      finite = finite && std::isfinite(a) && std::isfinite(b);
      csv.row({format_number(g_grid[i]), format_number(gamma_grid[j]), format_number(a), format_number(b)});
    }
  }

  const double tol = cfg["ridge_tolerance"];
  json ridge = json::array();
  for (std::size_t i = 0; i < g_grid.size(); ++i) {
    const double target = g_grid[i] / std::sqrt(2.0);
    const double dev = std::abs(argmax[i] - target) / target;
    ridge.push_back({{"g", g_grid[i]},
                     {"argmax_gamma", std::isnan(argmax[i]) ? json(nullptr) : json(argmax[i])},
                     {"g_over_sqrt2", target},
                     {"relative_deviation", std::isfinite(dev) ? json(dev) : json(nullptr)}});
    r.checks.push_back({"g=" + label(g_grid[i]) + ".ridge", std::isfinite(dev) && dev <= tol,
                        "argmax gamma " + format_number(argmax[i]) + " vs g/sqrt(2) = " + format_number(target)});
  }
  r.results["ridge"] = ridge;
  r.checks.push_back({"plus_port_symmetry", symmetric, ""});
  r.checks.push_back({"finite_values", finite, ""});
}

// ---- scatter-verify -------------------------------------------------------

struct Tuple {
  double g, gamma, delta_prime;
};

struct TupleResult {
  omr_port_numbers oracle{}, doubled{}, integrated{};
  double max_diff = NAN, doubling_change = NAN;
  std::size_t n_modes = 0, steps = 0, warnings = 0;
  double seconds = 0.0;
  std::string error;
};

double max_port_diff(const omr_port_numbers& a, const omr_port_numbers& b) {
  return std::max({std::abs(a.n_r_minus - b.n_r_minus), std::abs(a.n_l_minus - b.n_l_minus),
                   std::abs(a.n_r_plus - b.n_r_plus), std::abs(a.n_l_plus - b.n_l_plus)});
}

void run_scatter(const json& cfg, const std::filesystem::path& dir, unsigned jobs, std::ostream& log,
                 RunResult& r) {
  std::mt19937_64 rng(cfg["seed"].get<std::uint64_t>());
  // Explicit 53-bit mapping: the standard distributions are not specified
  // bit-for-bit across library implementations.
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  const std::size_t count = cfg["tuples"];
  std::vector<Tuple> tuples(count);
  for (auto& t : tuples) {
    t.g = uniform(cfg["g_min"], cfg["g_max"]);
    t.gamma = uniform(cfg["gamma_min"], cfg["gamma_max"]);
    t.delta_prime = uniform(cfg["delta_prime_min"], cfg["delta_prime_max"]);
  }

  omr_oracle_settings settings;
  omr_oracle_settings_default(&settings);
  settings.min_modes = cfg["min_modes"];
  settings.dt_factor = cfg["dt_factor"];
  settings.packet_halfwidths = cfg["packet_halfwidths"];
  settings.band_correction = cfg["band_correction"].get<bool>() ? 1 : 0;
  const bool doubling = cfg["check_doubling"];
  const double epsilon = cfg["epsilon"];

  std::vector<TupleResult> results(count);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      const auto t0 = Clock::now();
      TupleResult& out = results[i];
      omr_router_params p;
      omr_router_params_default(&p);
      p.g = tuples[i].g;
      p.gamma = tuples[i].gamma;
      p.delta_prime = tuples[i].delta_prime;
      p.epsilon = epsilon;
      omr_status st = omr_port_numbers_integrated(&p, &out.integrated);
      omr_oracle_result o{};
      if (st == OMR_OK) st = omr_oracle_run(&p, &settings, &o);
      if (st == OMR_OK) {
        out.oracle = o.ports;
        out.n_modes = o.n_modes;
        out.steps = o.steps;
        out.warnings = o.warning_count;
        out.max_diff = max_port_diff(out.oracle, out.integrated);
        if (doubling) {
          omr_oracle_settings fine = settings;
          fine.refinement = 2.0 * settings.refinement;
          omr_oracle_result o2{};
          st = omr_oracle_run(&p, &fine, &o2);
          if (st == OMR_OK) {
            out.doubled = o2.ports;
            out.doubling_change = max_port_diff(out.oracle, out.doubled);
            out.warnings += o2.warning_count;
          }
        }
      }
      if (st != OMR_OK) out.error = last_error(st);
      out.seconds = seconds_since(t0);
      std::lock_guard lock(log_mutex);
      log << "scatter-verify: tuple " << i << " (g=" << label(tuples[i].g) << ", gamma=" << label(tuples[i].gamma)
          << ", delta'=" << label(tuples[i].delta_prime) << ") "
          << (out.error.empty() ? "max diff " + format_number(out.max_diff) : out.error) << "\n"
          << std::flush;
    }
  };
  const auto t0 = Clock::now();
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < std::min<std::size_t>(jobs, count); ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  r.timings["oracle_seconds"] = seconds_since(t0);

  const std::string file = "scatter_verify.csv";
  CsvWriter csv(dir / file, cfg,
                {"tuple", "g", "gamma", "delta_prime", "epsilon", "oracle_n_r_minus", "oracle_n_l_minus",
                 "oracle_n_r_plus", "oracle_n_l_plus", "integrated_n_r_minus", "integrated_n_l_minus",
                 "integrated_n_r_plus", "integrated_n_l_plus", "max_abs_diff", "doubling_change", "n_modes", "steps"});
  r.files.push_back(file);

  double worst = 0.0, worst_doubling = 0.0;
  json failed = json::array();
  std::size_t warnings = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& t = tuples[i];
    const auto& o = results[i];
    if (!o.error.empty()) failed.push_back({{"tuple", i}, {"error", o.error}});
    else {
      worst = std::max(worst, o.max_diff);
      if (doubling) worst_doubling = std::max(worst_doubling, o.doubling_change);
    }
    warnings += o.warnings;
    csv.row({std::to_string(i), format_number(t.g), format_number(t.gamma), format_number(t.delta_prime),
             format_number(epsilon), format_number(o.oracle.n_r_minus), format_number(o.oracle.n_l_minus),
             format_number(o.oracle.n_r_plus), format_number(o.oracle.n_l_plus),
             format_number(o.integrated.n_r_minus), format_number(o.integrated.n_l_minus),
             format_number(o.integrated.n_r_plus), format_number(o.integrated.n_l_plus), format_number(o.max_diff),
             format_number(o.doubling_change), std::to_string(o.n_modes), std::to_string(o.steps)});
  }
  r.results["max_abs_oracle_minus_integrated"] = worst;
  r.results["max_abs_doubling_change"] = doubling ? json(worst_doubling) : json(nullptr);
  r.results["failed_tuples"] = failed;
  r.results["oracle_warnings"] = warnings;

  r.checks.push_back({"all_tuples_ran", failed.empty(),
                      failed.empty() ? "" : "tuple " + failed[0]["tuple"].dump() + ": " +
                                                failed[0]["error"].get<std::string>()});
  r.checks.push_back({"oracle_equivalence", failed.empty() && worst <= cfg["tolerance"].get<double>(),
                      "max |oracle - integrated| = " + format_number(worst)});
  if (doubling) {
    r.checks.push_back({"oracle_doubling", failed.empty() && worst_doubling <= cfg["doubling_tolerance"].get<double>(),
                        "max change on doubling = " + format_number(worst_doubling)});
  }
}

}  // namespace

RunResult run_experiment(Experiment e, const json& config, const std::filesystem::path& out_dir, unsigned jobs,
                         std::ostream& log) {
  RunResult r;
  const auto t0 = Clock::now();
  switch (e) {
    case Experiment::blockade_scan: run_blockade(config, out_dir, jobs, log, r); break;
    case Experiment::router_scan: run_router_scan(config, out_dir, jobs, log, r); break;
    case Experiment::router_opt: run_router_opt(config, out_dir, jobs, log, r); break;
    case Experiment::scatter_verify: run_scatter(config, out_dir, jobs, log, r); break;
  }
  r.timings["total_seconds"] = seconds_since(t0);
  return r;
}

}  // namespace omcli
