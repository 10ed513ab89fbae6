#include "observables.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "parallel.hpp"

namespace optomech {

namespace {

constexpr double kMinOccupation = 1e-14;

struct BlockadeSystem {
  QOperator hamiltonian;
  std::vector<CollapseChannel> channels;
  QOperator a_minus;
  QOperator a_plus;
  std::vector<std::size_t> cavity_slots;
};

QOperator ladder(const ModeSpace& space, std::size_t s) { return embed(annihilation(space.dim(s)), s, space); }

void append(std::vector<CollapseChannel>& out, std::vector<CollapseChannel> more) {
  for (auto& c : more) out.push_back(std::move(c));
}

BlockadeSystem build_system(const SystemParams& base, double delta_minus, const BlockadeOptions& options,
                            const Truncation& t) {
  SystemParams p = base;
  p.delta = delta_minus - p.J;

  if (options.model == BlockadeModel::effective) {
    const ModeSpace space = effective_space(t.cavity, t.mech_minus);
    QOperator am = ladder(space, slot::a_minus), ap = ladder(space, slot::a_plus);
    std::vector<CollapseChannel> ch{{am, p.kappa}, {ap, p.kappa}};
    append(ch, mechanical_channels(ladder(space, slot::b_minus), p.gamma_m, p.n_th, options.thermal));
    return {build_effective_hamiltonian(p, space), std::move(ch), am, ap, {slot::a_minus, slot::a_plus}};
  }

  if (options.basis == OriginalBasis::quasi) {
    const ModeSpace space = quasimode_space(t.cavity, t.mech_minus, t.mech_plus);
    QOperator am = ladder(space, slot::a_minus), ap = ladder(space, slot::a_plus);
    std::vector<CollapseChannel> ch{{am, p.kappa}, {ap, p.kappa}};
    append(ch, mechanical_channels(ladder(space, slot::b_minus), p.gamma_m, p.n_th, options.thermal));
    append(ch, mechanical_channels(ladder(space, slot::b_plus), p.gamma_m, p.n_th, options.thermal));
    return {build_quasimode_hamiltonian(p, space), std::move(ch), am, ap, {slot::a_minus, slot::a_plus}};
  }

  const ModeSpace space = physical_space(t.cavity, t.mech_minus);
  const QOperator a1 = ladder(space, slot::a1), a2 = ladder(space, slot::a2);
  std::vector<CollapseChannel> ch{{a1, p.kappa}, {a2, p.kappa}};
  append(ch, mechanical_channels(ladder(space, slot::b1), p.gamma_m, p.n_th, options.thermal));
  append(ch, mechanical_channels(ladder(space, slot::b2), p.gamma_m, p.n_th, options.thermal));
  const double s = 1.0 / std::sqrt(2.0);
  return {build_original_hamiltonian(p, space), std::move(ch), s * (a1 - a2), s * (a1 + a2), {slot::a1, slot::a2}};
}

double relative_change(double reference, double probe) {
  if (std::isnan(reference) || std::isnan(probe)) {
    return std::isnan(reference) && std::isnan(probe) ? 0.0 : std::numeric_limits<double>::infinity();
  }
  const double scale = std::max(std::abs(reference), std::numeric_limits<double>::min());
  return std::abs(probe - reference) / scale;
}

}  // namespace

Complex expectation(const DensityMatrix& rho, const QOperator& op) {
  require_same_space(rho.space(), op.space(), "expectation");
  // tr(rho op) = sum_ij rho(i, j) op(j, i)
  Complex sum{};
  const SparseMatrix& m = op.matrix();
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) sum += rho.matrix()(it.col(), it.row()) * it.value();
  }
  return sum;
}

double g2_equal_time(const DensityMatrix& rho, const QOperator& ai, const QOperator& aj) {
  const QOperator ai_d = dagger(ai), aj_d = dagger(aj);
  const double ni = expectation(rho, ai_d * ai).real();
  const double nj = expectation(rho, aj_d * aj).real();
  if (!(ni > kMinOccupation) || !(nj > kMinOccupation)) {
    fail(ErrorCode::undefined_correlation,
         "g2 undefined: mode occupation " + std::to_string(std::min(ni, nj)) + " is below 1e-14");
  }
  const double num = expectation(rho, ai_d * aj_d * aj * ai).real();
  return std::max(0.0, num) / (ni * nj);
}

const char* to_string(BlockadeModel model) noexcept {
  return model == BlockadeModel::original ? "original" : "effective";
}

Correlators blockade_point(const SystemParams& params, double delta_minus, const BlockadeOptions& options,
                           const Truncation& truncation, SteadyStateReport* report) {
  const BlockadeSystem sys = build_system(params, delta_minus, options, truncation);
  SteadyStateOptions ss;
  ss.method = options.method;
  ss.excitation_slots = sys.cavity_slots;
  const DensityMatrix rho = steady_state(sys.hamiltonian, sys.channels, ss, report);
  Correlators c;
  c.n_minus = expectation(rho, dagger(sys.a_minus) * sys.a_minus).real();
  c.n_plus = expectation(rho, dagger(sys.a_plus) * sys.a_plus).real();
  // A mode that is never populated (e.g. a+ at g = 0) leaves its correlators
  // undefined; they are recorded as NaN and named, the others stay usable.
  auto g2 = [&](const QOperator& ai, const QOperator& aj, const char* name) {
    try {
      return g2_equal_time(rho, ai, aj);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::undefined_correlation) throw;
      c.undefined.push_back(name);
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  c.g2_mm = g2(sys.a_minus, sys.a_minus, "g2_mm");
  c.g2_pp = g2(sys.a_plus, sys.a_plus, "g2_pp");
  c.g2_mp = g2(sys.a_minus, sys.a_plus, "g2_mp");
  return c;
}

HalfMinima find_minima(const std::vector<BlockadePoint>& points, double Correlators::*field) {
  HalfMinima m;
  double best_neg = std::numeric_limits<double>::infinity();
  double best_pos = best_neg, best_all = best_neg;
  for (const auto& p : points) {
    if (!p.ok) continue;
    const double v = p.values.*field;
    if (v < best_all) best_all = v, m.global = p.delta_minus;
    if (p.delta_minus < 0.0 && v < best_neg) best_neg = v, m.negative = p.delta_minus;
    if (p.delta_minus > 0.0 && v < best_pos) best_pos = v, m.positive = p.delta_minus;
  }
  return m;
}

BlockadeScan blockade_scan(const SystemParams& params, const std::vector<double>& grid,
                           const BlockadeOptions& options) {
  if (grid.empty()) fail(ErrorCode::invalid_argument, "blockade scan grid is empty");
  params.validate();
  BlockadeScan scan;
  scan.points.resize(grid.size());

  parallel_for(grid.size(), options.jobs, [&](std::size_t i) {
    BlockadePoint& pt = scan.points[i];
    pt.delta_minus = grid[i];
    try {
      SteadyStateReport report;
      pt.values = blockade_point(params, grid[i], options, options.truncation, &report);
      pt.residual = report.residual;
      pt.ok = true;
      for (const auto& name : pt.values.undefined) {
        pt.error += (pt.error.empty() ? "" : ", ") + name;
      }
      if (!pt.error.empty()) pt.error += " undefined (mode occupation below 1e-14)";
    } catch (const Error& e) {
      pt.error = e.what();
    }
  });

  scan.minima_mm = find_minima(scan.points, &Correlators::g2_mm);
  scan.minima_pp = find_minima(scan.points, &Correlators::g2_pp);
  scan.minima_mp = find_minima(scan.points, &Correlators::g2_mp);

  std::vector<std::size_t> probe_points;
  if (options.probe == ConvergenceProbe::all) {
    for (std::size_t i = 0; i < grid.size(); ++i) probe_points.push_back(i);
  } else if (options.probe == ConvergenceProbe::minima) {
    std::set<double> where;
    for (const HalfMinima* m : {&scan.minima_mm, &scan.minima_pp, &scan.minima_mp}) {
      for (const auto& v : {m->negative, m->positive, m->global}) {
        if (v) where.insert(*v);
      }
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (scan.points[i].ok && where.count(grid[i])) probe_points.push_back(i);
    }
  }

  std::vector<Truncation> raised;
  {
    Truncation t = options.truncation;
    ++t.cavity;
    raised.push_back(t);
    t = options.truncation;
    ++t.mech_minus;
    raised.push_back(t);
    if (options.model == BlockadeModel::original && options.basis == OriginalBasis::quasi) {
      t = options.truncation;
      ++t.mech_plus;
      raised.push_back(t);
    }
  }

  std::vector<double> change(probe_points.size() * raised.size(), 0.0);
  std::vector<char> probe_ok(change.size(), 0);
  parallel_for(change.size(), options.jobs, [&](std::size_t job) {
    const BlockadePoint& pt = scan.points[probe_points[job / raised.size()]];
    if (!pt.ok) return;
    try {
      const Correlators c = blockade_point(params, pt.delta_minus, options, raised[job % raised.size()]);
      change[job] = std::max({relative_change(pt.values.g2_mm, c.g2_mm), relative_change(pt.values.g2_pp, c.g2_pp),
                              relative_change(pt.values.g2_mp, c.g2_mp)});
      probe_ok[job] = 1;
    } catch (const Error&) {
      probe_ok[job] = 0;
    }
  });
  for (std::size_t k = 0; k < probe_points.size(); ++k) {
    BlockadePoint& pt = scan.points[probe_points[k]];
    pt.probed = true;
    pt.converged = pt.ok;
    for (std::size_t r = 0; r < raised.size(); ++r) {
      const std::size_t job = k * raised.size() + r;
      pt.convergence_change = std::max(pt.convergence_change, change[job]);
      pt.converged = pt.converged && probe_ok[job] && change[job] < options.convergence_tolerance;
    }
  }

  for (const auto& p : scan.points) scan.failures += p.ok ? 0 : 1;
  return scan;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

}  // namespace optomech
