#include "router.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "parallel.hpp"

namespace optomech {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);
constexpr Complex kI{0.0, 1.0};

double integrate_segmented(const std::function<double(double)>& f, const std::vector<double>& cuts,
                           const QuadratureOptions& q, const char* port) {
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    if (!(cuts[s + 1] > cuts[s])) continue;
    double error = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, cuts[s], cuts[s + 1], q.max_depth, q.relative_tolerance, &error);
    if (!std::isfinite(value) || error > std::max(q.relative_tolerance * std::abs(value), q.absolute_floor)) {
      fail(ErrorCode::quadrature_failure, std::string("port ") + port + " integral did not converge (error estimate " +
                                              std::to_string(error) + ")");
    }
    total += value;
  }
  return total;
}

}  // namespace

void RouterParams::validate() const {
  for (auto [v, name] : {std::pair{g, "g"}, {gamma, "gamma"}, {delta_prime, "delta_prime"}, {epsilon, "epsilon"},
                         {delta_minus, "delta_minus"}}) {
    if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, std::string(name) + " must be finite");
  }
  if (!(gamma >= 0.0)) fail(ErrorCode::invalid_argument, "gamma must be >= 0");
  if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "epsilon must be > 0");
  if (G1 && !(std::abs(*G1) > 0.0)) fail(ErrorCode::invalid_argument, "G1 must be nonzero");
}

double RouterParams::packet_weight() const { return G1 ? kPi * std::norm(*G1) / epsilon : 1.0; }

PortAmplitudes port_amplitudes(double detuning, double g, double gamma) {
  if (!(gamma > 0.0)) fail(ErrorCode::invalid_argument, "gamma must be > 0");
  const Complex z{detuning, gamma};
  const Complex den = 2.0 * z * z - g * g;
  const double mod2 = gamma * gamma + detuning * detuning;
  PortAmplitudes a;
  a.r_minus = kSqrt2 * (mod2 + z * z - g * g) / den;
  a.l_minus = kSqrt2 * (mod2 - z * z) / den;
  a.r_plus = -2.0 * kI * g * gamma / den;
  a.l_plus = a.r_plus;
  return a;
}

PortNumbers port_numbers_integrated(const RouterParams& p, const QuadratureOptions& q) {
  p.validate();
  const double weight = p.packet_weight();
  PortNumbers out;
  if (p.gamma == 0.0) {
    out.n_r_minus = weight;
    return out;
  }

  // Break the theta axis at the single-excitation resonances.
  std::vector<double> cuts{-kPi / 2, kPi / 2};
  for (double res : {-p.g / kSqrt2, 0.0, p.g / kSqrt2}) cuts.push_back(std::atan((res - p.delta_prime) / p.epsilon));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto detuning = [&](double theta) { return p.delta_prime + p.epsilon * std::tan(theta); };
  auto port = [&](Complex PortAmplitudes::*field) {
    return [&, field](double theta) {
      if (std::abs(theta) >= kPi / 2) return 0.0;  // amplitude is bounded; endpoints carry zero measure
      return 0.5 * std::norm(port_amplitudes(detuning(theta), p.g, p.gamma).*field) / kPi;
    };
  };
  out.n_r_minus = weight * integrate_segmented(port(&PortAmplitudes::r_minus), cuts, q, "r-");
  out.n_l_minus = weight * integrate_segmented(port(&PortAmplitudes::l_minus), cuts, q, "l-");
  out.n_r_plus = p.g == 0.0 ? 0.0 : weight * integrate_segmented(port(&PortAmplitudes::r_plus), cuts, q, "r+");
  out.n_l_plus = out.n_r_plus;
  return out;
}

ClosedFormResult port_numbers_closed_form(const RouterParams& p) {
  p.validate();
  const double eps = p.epsilon, gam = p.gamma, g = p.g, dp = p.delta_prime;
  const double G1sq = p.G1 ? std::norm(*p.G1) : eps / kPi;
  auto F = [&](double s, double t) { return Complex(dp + s * g / kSqrt2 + t * gam, eps); };
  const Complex Fpp = F(1, 1), Fpm = F(1, -1), Fmp = F(-1, 1), Fmm = F(-1, -1);
  const Complex prod = Fpp * Fpm * Fmp * Fmm;
  const Complex lead_r = 1.0 / (g / kSqrt2 + kI * gam) / (std::conj(Fpp) * Fpm);
  const Complex lead_l = 1.0 / (g / kSqrt2 - kI * gam) / (std::conj(Fmp) * Fmm);
  const double dpe2 = (dp + eps) * (dp + eps);

  ClosedFormResult res;
  res.singular_terms_dropped = g == 0.0;
  auto pole_terms = [&](Complex num_r, Complex num_l) -> Complex {
    if (res.singular_terms_dropped) return 0.0;
    return kSqrt2 / (4.0 * g * gam) * (lead_r * num_r + lead_l * num_l);
  };

  const Complex n_rm =
      kPi * G1sq / eps -
      2.0 * kPi * G1sq * gam * gam *
          ((gam * gam + g * g + dpe2) / (eps * prod) +
           pole_terms(1.5 * g * g - kI * kSqrt2 * g * gam, 1.5 * g * g + kI * kSqrt2));
  const Complex n_lm = 2.0 * kPi * G1sq * gam * gam *
                       ((gam * gam + dpe2) / (eps * prod) +
                        pole_terms(0.5 * g * g - kI * kSqrt2 * g * gam, 0.5 * g * g + kI * kSqrt2));
  const Complex n_rp = kPi * G1sq * g * g * gam * gam * (1.0 / (eps * prod) + pole_terms(1.0, 1.0));

  res.values = {n_rm.real(), n_lm.real(), n_rp.real(), n_rp.real()};
  res.max_imag = std::max({std::abs(n_rm.imag()), std::abs(n_lm.imag()), std::abs(n_rp.imag())});
  return res;
}

std::vector<Extremum> local_extrema(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorCode::invalid_argument, "local_extrema: x and y differ in length");
  std::vector<Extremum> out;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (y[i] > y[i - 1] && y[i] > y[i + 1]) out.push_back({i, x[i], y[i], ExtremumKind::maximum});
    if (y[i] < y[i - 1] && y[i] < y[i + 1]) out.push_back({i, x[i], y[i], ExtremumKind::minimum});
  }
  return out;
}

RouterScan router_scan(const RouterParams& fixed, const std::vector<double>& grid, unsigned jobs,
                       const QuadratureOptions& q) {
  if (grid.empty()) fail(ErrorCode::invalid_argument, "router scan grid is empty");
  RouterScan scan;
  scan.points.resize(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    RouterPoint& pt = scan.points[i];
    pt.delta_prime = grid[i];
    try {
      RouterParams p = fixed;
      p.delta_prime = grid[i];
      pt.ports = port_numbers_integrated(p, q);
      pt.ok = true;
    } catch (const Error& e) {
      pt.error = e.what();
    }
  });

  // Extrema are located on the successfully evaluated points only.
  std::vector<double> x;
  std::array<std::vector<double>, 4> y;
  for (const auto& pt : scan.points) {
    if (!pt.ok) {
      ++scan.failures;
      continue;
    }
    x.push_back(pt.delta_prime);
    y[0].push_back(pt.ports.n_r_minus);
    y[1].push_back(pt.ports.n_l_minus);
    y[2].push_back(pt.ports.n_r_plus);
    y[3].push_back(pt.ports.n_l_plus);
  }
  scan.r_minus_extrema = local_extrema(x, y[0]);
  scan.l_minus_extrema = local_extrema(x, y[1]);
  scan.r_plus_extrema = local_extrema(x, y[2]);
  scan.l_plus_extrema = local_extrema(x, y[3]);
  return scan;
}

OptimumSurface optimum_surface(const std::vector<double>& g_grid, const std::vector<double>& gamma_grid,
                               double epsilon, unsigned jobs, const QuadratureOptions& q) {
  if (g_grid.empty() || gamma_grid.empty()) fail(ErrorCode::invalid_argument, "optimum surface grids are empty");
  for (double v : gamma_grid) {
    if (!(v > 0.0)) fail(ErrorCode::invalid_argument, "gamma grid must be positive");
  }
  for (double v : g_grid) {
    if (!(v >= 0.0)) fail(ErrorCode::invalid_argument, "g grid must be non-negative");
  }
  OptimumSurface s;
  s.g_grid = g_grid;
  s.gamma_grid = gamma_grid;
  s.n_r_plus.assign(g_grid.size(), std::vector<double>(gamma_grid.size(), 0.0));
  s.n_l_plus = s.n_r_plus;
  const std::size_t cols = gamma_grid.size();
  parallel_for(g_grid.size() * cols, jobs, [&](std::size_t k) {
    RouterParams p;
    p.g = g_grid[k / cols];
    p.gamma = gamma_grid[k % cols];
    p.epsilon = epsilon;
    const PortNumbers n = port_numbers_integrated(p, q);
    s.n_r_plus[k / cols][k % cols] = n.n_r_plus;
    s.n_l_plus[k / cols][k % cols] = n.n_l_plus;
  });
  for (const auto& row : s.n_r_plus) {
    const auto best = std::max_element(row.begin(), row.end());
    s.argmax_gamma.push_back(*best > 0.0 ? gamma_grid[static_cast<std::size_t>(best - row.begin())]
                                         : std::numeric_limits<double>::quiet_NaN());
  }
  return s;
}

std::vector<double> logspace(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > 0.0)) fail(ErrorCode::invalid_argument, "logspace bounds must be positive");
  std::vector<double> out(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = count == 1 ? lo : std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

}  // namespace optomech
