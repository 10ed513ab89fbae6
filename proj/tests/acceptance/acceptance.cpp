// Acceptance run: one PASS/FAIL line per criterion. Exits 0 once every
// criterion has been evaluated; with --strict any FAIL makes it exit 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "model.hpp"
#include "observables.hpp"
#include "oracles.hpp"
#include "router.hpp"
#include "waveguide.hpp"

using namespace optomech;

namespace {

const double kSqrt2 = std::sqrt(2.0);

struct Outcome {
  bool pass = false;
  std::string detail;
};

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "none"; }

bool within(const std::optional<double>& v, double target, double tol) {
  return v && std::abs(*v - target) <= tol * (1.0 + 1e-9);
}

// ---- blockade ---------------------------------------------------------------

struct BlockadeRuns {
  std::vector<double> grid;
  double step = 0.0;
  BlockadeScan effective, original;
  double seconds_effective = 0.0, seconds_original = 0.0;
};

const BlockadeRuns& blockade_runs() {
  static const BlockadeRuns runs = [] {
    BlockadeRuns r;
    r.grid = linspace(-0.1, 0.1, 201);
    r.step = r.grid[1] - r.grid[0];
    const SystemParams p = blockade_preset();
    BlockadeOptions o;
    o.jobs = jobs();
    o.probe = ConvergenceProbe::none;
    o.model = BlockadeModel::effective;
    o.truncation = {4, 6, 2};
    auto t0 = std::chrono::steady_clock::now();
    r.effective = blockade_scan(p, r.grid, o);
    auto t1 = std::chrono::steady_clock::now();
    o.model = BlockadeModel::original;
    o.basis = OriginalBasis::quasi;
    o.truncation = {4, 6, 2};
    r.original = blockade_scan(p, r.grid, o);
    auto t2 = std::chrono::steady_clock::now();
    r.seconds_effective = std::chrono::duration<double>(t1 - t0).count();
    r.seconds_original = std::chrono::duration<double>(t2 - t1).count();
    return r;
  }();
  return runs;
}

Outcome ac1() {
  const BlockadeRuns& r = blockade_runs();
  const double target = blockade_preset().g / kSqrt2;
  bool pass = r.effective.failures == 0 && r.original.failures == 0;
  std::ostringstream d;
  for (auto [name, scan, secs, budget] : {std::tuple{"effective", &r.effective, r.seconds_effective, 600.0},
                                          std::tuple{"original", &r.original, r.seconds_original, 3600.0}}) {
    const HalfMinima& m = scan->minima_mm;
    const bool ok = within(m.negative, -target, r.step) && within(m.positive, target, r.step);
    pass = pass && ok && secs <= budget;
    d << name << " argmin g2_mm " << fmt_opt(m.negative) << " / " << fmt_opt(m.positive) << " (" << fmt(secs)
      << " s); ";
  }
  d << "target +-" << fmt(target) << ", step " << fmt(r.step);
  return {pass, d.str()};
}

Outcome ac2() {
  const BlockadeRuns& r = blockade_runs();
  bool pass = true;
  std::ostringstream d;
  const std::pair<const char*, HalfMinima BlockadeScan::*> fields[] = {
      {"g2_mm", &BlockadeScan::minima_mm}, {"g2_pp", &BlockadeScan::minima_pp}, {"g2_mp", &BlockadeScan::minima_mp}};
  for (auto [name, field] : fields) {
    if (name != fields[0].first) d << "; ";
    const HalfMinima& e = r.effective.*field;
    const HalfMinima& o = r.original.*field;
    for (auto half : {&HalfMinima::negative, &HalfMinima::positive}) {
      const bool ok = e.*half && o.*half && std::abs(*(e.*half) - *(o.*half)) <= r.step * (1.0 + 1e-9);
      pass = pass && ok;
    }
    d << name << " eff " << fmt_opt(e.negative) << "/" << fmt_opt(e.positive) << " orig " << fmt_opt(o.negative)
      << "/" << fmt_opt(o.positive);
  }
  return {pass, d.str()};
}

// ---- router -----------------------------------------------------------------

std::vector<double> router_grid() { return linspace(-0.1, 0.1, 801); }

RouterParams router_defaults(double g) {
  RouterParams p;
  p.g = g;
  p.gamma = 0.01;
  p.epsilon = 1e-4;
  return p;
}

const std::vector<std::pair<double, RouterScan>>& router_scans() {
  static const std::vector<std::pair<double, RouterScan>> scans = [] {
    std::vector<std::pair<double, RouterScan>> out;
    for (double g : {0.0, 0.02, 0.04, 0.05}) out.emplace_back(g, router_scan(router_defaults(g), router_grid(), jobs()));
    return out;
  }();
  return scans;
}

Outcome ac3() {
  double worst = 0.0;
  std::size_t failures = 0;
  for (const auto& [g, scan] : router_scans()) {
    failures += scan.failures;
    for (const auto& pt : scan.points) worst = std::max(worst, std::abs(pt.ports.sum() - 1.0));
  }
  return {failures == 0 && worst < 1e-4, "max |sum - 1| = " + fmt(worst) + " over 4 x 801 points"};
}

Outcome ac4() {
  const RouterScan& scan = router_scans().front().second;
  bool zero = scan.failures == 0;
  for (const auto& pt : scan.points) zero = zero && pt.ports.n_r_plus == 0.0 && pt.ports.n_l_plus == 0.0;
  const PortNumbers n = port_numbers_integrated(router_defaults(0.0));
  return {zero && n.n_l_plus == 0.0 && n.n_l_minus >= 0.99,
          std::string("plus ports ") + (zero ? "identically 0" : "nonzero") + ", n_l_minus(0) = " + fmt(n.n_l_minus)};
}

Outcome ac5() {
  const auto& [g, scan] = router_scans().back();
  const auto grid = router_grid();
  const double step = grid[1] - grid[0];
  std::vector<double> maxima;
  for (const auto& e : scan.l_minus_extrema) {
    if (e.kind == ExtremumKind::maximum) maxima.push_back(e.delta_prime);
  }
  const double target = g / kSqrt2;
  bool pass = maxima.size() == 2;
  if (pass) {
    pass = std::abs(maxima[0] + target) <= step * (1.0 + 1e-9) && std::abs(maxima[1] - target) <= step * (1.0 + 1e-9);
  }
  std::ostringstream d;
  d << maxima.size() << " maxima at";
  for (double m : maxima) d << " " << fmt(m);
  d << "; target +-" << fmt(target) << ", step " << fmt(step);
  return {pass, d.str()};
}

struct Surface {
  OptimumSurface surface;
  double seconds = 0.0;
};

const Surface& surface() {
  static const Surface s = [] {
    Surface out;
    const auto t0 = std::chrono::steady_clock::now();
    out.surface = optimum_surface({0.02, 0.04, 0.06}, logspace(0.005, 0.08, 40), 1e-4, jobs());
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }();
  return s;
}

// ---- oracle -----------------------------------------------------------------

struct OracleSweep {
  double worst = 0.0, worst_doubling = 0.0, seconds = 0.0;
  std::size_t failures = 0;
  bool plus_symmetric = true;
  std::string first_error;
};

const OracleSweep& oracle_sweep() {
  static const OracleSweep sweep = [] {
    OracleSweep s;
    std::mt19937_64 rng(1);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<RouterParams> tuples(20);
    for (auto& t : tuples) {
      t.g = uniform(0.0, 0.08);
      t.gamma = uniform(0.005, 0.05);
      t.delta_prime = uniform(-0.08, 0.08);
      t.epsilon = 2e-3;
    }
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& t : tuples) {
      try {
        const PortNumbers ref = port_numbers_integrated(t);
        const OracleResult base = run_oracle(t);
        OracleSettings fine;
        fine.refinement = 2.0;
        const OracleResult doubled = run_oracle(t, fine);
        auto diff = [](const PortNumbers& a, const PortNumbers& b) {
          return std::max({std::abs(a.n_r_minus - b.n_r_minus), std::abs(a.n_l_minus - b.n_l_minus),
                           std::abs(a.n_r_plus - b.n_r_plus), std::abs(a.n_l_plus - b.n_l_plus)});
        };
        s.worst = std::max(s.worst, diff(base.ports, ref));
        s.worst_doubling = std::max(s.worst_doubling, diff(base.ports, doubled.ports));
        s.plus_symmetric = s.plus_symmetric && base.ports.n_r_plus == base.ports.n_l_plus;
      } catch (const Error& e) {
        if (s.first_error.empty()) s.first_error = e.what();
        ++s.failures;
      }
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
  }();
  return sweep;
}

Outcome ac6() {
  std::size_t points = 0;
  bool pass = true;
  for (const auto& [g, scan] : router_scans()) {
    for (const auto& pt : scan.points) {
      pass = pass && pt.ports.n_r_plus == pt.ports.n_l_plus;
      ++points;
    }
  }
  const OptimumSurface& s = surface().surface;
  for (std::size_t i = 0; i < s.g_grid.size(); ++i) {
    for (std::size_t j = 0; j < s.gamma_grid.size(); ++j) {
      pass = pass && s.n_r_plus[i][j] == s.n_l_plus[i][j];
      ++points;
    }
  }
  pass = pass && oracle_sweep().plus_symmetric;
  return {pass, "n_r_plus == n_l_plus at " + std::to_string(points) + " router points and every oracle run"};
}

Outcome ac7() {
  const Surface& s = surface();
  bool pass = s.seconds <= 60.0;
  std::ostringstream d;
  for (std::size_t i = 0; i < s.surface.g_grid.size(); ++i) {
    const double g = s.surface.g_grid[i], target = g / kSqrt2, best = s.surface.argmax_gamma[i];
    pass = pass && std::abs(best - target) <= 0.15 * target;
    d << "g=" << fmt(g) << ": argmax gamma " << fmt(best) << " vs " << fmt(target) << "; ";
  }
  d << fmt(s.seconds) << " s";
  return {pass, d.str()};
}

Outcome ac8() {
  const OracleSweep& s = oracle_sweep();
  const bool pass = s.failures == 0 && s.worst < 0.02 && s.worst_doubling < 0.005 && s.seconds <= 600.0;
  std::string d = "20 tuples, max |oracle - integrated| = " + fmt(s.worst) + ", max doubling change = " +
                  fmt(s.worst_doubling) + ", " + fmt(s.seconds) + " s";
  if (s.failures) d += ", " + std::to_string(s.failures) + " failed: " + s.first_error;
  return {pass, d};
}

// ---- linear cavity and operator algebra -------------------------------------

Outcome ac9() {
  const int d = 10;
  const QOperator a = annihilation(d);
  const double delta = 0.3, kappa = 0.2, eps = 0.15;
  const DensityMatrix rho = steady_state(delta * (dagger(a) * a) + eps * (a + dagger(a)), {{a, kappa}});
  const Complex mean = expectation(rho, a);
  const Complex ref = Complex(0.0, -eps) / Complex(kappa, delta);
  const double err_mean = std::abs(mean - ref);
  const double coh = std::abs(g2_equal_time(rho, a, a) - 1.0);
  const int one[] = {1};
  const double fock = g2_equal_time(DensityMatrix::basis(ModeSpace({d}), one), a, a);
  const QOperator b = annihilation(12);
  const double th = std::abs(g2_equal_time(DensityMatrix::thermal(12, 0.1), b, b) - 2.0);
  const bool pass = err_mean < 1e-6 && coh < 1e-3 && fock == 0.0 && th < 1e-3;
  return {pass, "|<a> - ref| = " + fmt(err_mean) + ", coherent |g2-1| = " + fmt(coh) + ", Fock g2 = " + fmt(fock) +
                    ", thermal |g2-2| = " + fmt(th)};
}

Outcome ac10() {
  bool ladder = true, comm = true, herm = true, round_trip = true;
  for (int d = 2; d <= 12; ++d) {
    ladder = ladder && (annihilation(d).dense() - oracle::ladder(d)).cwiseAbs().maxCoeff() == 0.0;
    const QOperator c = commutator(annihilation(d), creation(d));
    for (int n = 0; n <= d - 2; ++n) {
      for (int m = 0; m <= d - 2; ++m) comm = comm && std::abs(c.coeff(n, m) - Complex(n == m ? 1.0 : 0.0)) < 1e-14;
    }
  }
  const ModeSpace s({3, 2, 4});
  const QOperator x = embed(annihilation(3), 0, s), y = embed(annihilation(4), 2, s);
  comm = comm && max_abs(commutator(x, y)) == 0.0 && max_abs(commutator(x, dagger(y))) == 0.0;

  SystemParams p = blockade_preset();
  double worst_herm = 0.0;
  for (double dm : {-0.05, 0.0, 0.021}) {
    p.delta = dm - p.J;
    worst_herm = std::max({worst_herm, hermiticity_residual(build_original_hamiltonian(p, physical_space(3, 3))),
                           hermiticity_residual(build_quasimode_hamiltonian(p, quasimode_space(3, 3, 2))),
                           hermiticity_residual(build_effective_hamiltonian(p, effective_space(3, 4)))});
  }
  worst_herm = std::max(worst_herm, hermiticity_residual(build_original_hamiltonian(blockade_off_resonance_preset(),
                                                                                      physical_space(3, 3))));
  herm = worst_herm < 1e-12;

  const ModeSpace phys = physical_space(3, 3);
  const QuasiModeTransform t(phys);
  std::mt19937 rng(10);
  std::normal_distribution<double> nd;
  double worst_rt = 0.0;
  for (int k = 0; k < 5; ++k) {
    StateVector psi = StateVector::Zero(static_cast<Eigen::Index>(phys.total_dim()));
    for (std::size_t i = 0; i < phys.total_dim(); ++i) {
      if (t.representable(i)) psi[static_cast<Eigen::Index>(i)] = Complex(nd(rng), nd(rng));
    }
    psi /= psi.norm();
    const StateVector q = t.apply(TransformDirection::physical_to_quasi, psi);
    const StateVector back = t.apply(TransformDirection::quasi_to_physical, q);
    worst_rt = std::max({worst_rt, (back - psi).norm(), std::abs(q.norm() - 1.0)});
  }
  round_trip = worst_rt < 1e-10;
  return {ladder && comm && herm && round_trip, std::string("ladder ") + (ladder ? "ok" : "bad") + ", commutators " +
                                                    (comm ? "ok" : "bad") + ", max Hermiticity residual " +
                                                    fmt(worst_herm) + ", round-trip error " + fmt(worst_rt)};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::vector<std::string> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) {
      strict = true;
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only.emplace_back(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--strict] [--only ACn]...\n", argv[0]);
      return 2;
    }
  }

  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"AC1 blockade minima at +-g/sqrt(2)", ac1},
      {"AC2 effective vs original minima", ac2},
      {"AC3 router normalization", ac3},
      {"AC4 two-port degeneration at g = 0", ac4},
      {"AC5 peak splitting at g = 0.05", ac5},
      {"AC6 plus-port symmetry", ac6},
      {"AC7 optimum ridge gamma = g/sqrt(2)", ac7},
      {"AC8 oracle equivalence", ac8},
      {"AC9 linear-cavity oracles", ac9},
      {"AC10 operator algebra", ac10},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const std::string id(name, std::strchr(name, ' '));
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %s  (%s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return strict && failed > 0 ? 1 : 0;
}
