#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <functional>
#include <numbers>

#include "oracles.hpp"
#include "waveguide.hpp"

using namespace optomech;

namespace {

RouterParams params(double g, double gamma, double delta_prime, double epsilon) {
  RouterParams p;
  p.g = g;
  p.gamma = gamma;
  p.delta_prime = delta_prime;
  p.epsilon = epsilon;
  return p;
}

ContinuumGrid uniform_grid(std::size_t modes, double dk, double gamma) {
  ContinuumGrid grid;
  grid.n_modes = modes;
  grid.dk = dk;
  grid.span = dk * static_cast<double>(modes);
  grid.coupling = std::sqrt(2.0) * std::sqrt(gamma / (2.0 * std::numbers::pi)) * std::sqrt(dk);
  return grid;
}

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an optomech::Error");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("grid rules") {
  const RouterParams p = params(0.04, 0.01, 0.02, 1e-3);
  const double t = default_t_final(p);
  CHECK(t == doctest::Approx(15.0 / 1e-3));
  const ContinuumGrid grid = make_grid(p, t);
  CHECK(grid.n_modes >= 2001);
  CHECK(grid.n_modes % 2 == 1);
  CHECK(p.gamma / grid.dk >= 50.0);
  // Recurrence time of the discrete band outlasts the run.
  CHECK(2.0 * std::numbers::pi / grid.dk >= 2.0 * t * (1.0 - 1e-12));
  const double need = std::abs(p.delta_prime) + 25.0 * p.epsilon + 10.0 * p.gamma + 5.0 * p.g;
  CHECK(grid.omega(0) - 0.5 * grid.dk <= -need);
  CHECK(grid.omega(grid.n_modes - 1) + 0.5 * grid.dk >= need);
  CHECK(grid.cavity_weight > 1.0);

  OracleSettings bare;
  bare.band_correction = false;
  CHECK(make_grid(p, t, bare).cavity_weight == 1.0);
  OracleSettings fine;
  fine.refinement = 2.0;
  CHECK(make_grid(p, t, fine).dk < grid.dk);
  fine.refinement = 0.5;
  CHECK(error_of([&] { make_grid(p, t, fine); }) == ErrorCode::invalid_argument);
}

TEST_CASE("Lorentzian initial state") {
  const double eps = 1e-4;
  const ContinuumGrid grid = uniform_grid(4001, eps / 10.0, 0.01);
  const ExcitationState s = init_lorentzian(grid, 0.0, eps);
  CHECK(std::abs(s.norm() - 1.0) < 1e-12);
  CHECK(s.eta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.alpha_minus == Complex(0.0));
  CHECK(s.alpha_plus == Complex(0.0));
  CHECK((s.c - s.mu).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::Index mid = 2000;
  CHECK(std::abs(grid.omega(static_cast<std::size_t>(mid))) < 1e-15);
  const double ratio = std::norm(s.mu[mid]) / std::norm(s.mu[mid + 100]);
  CHECK(ratio == doctest::Approx(101.0).epsilon(1e-9));
  CHECK(std::norm(s.mu[mid - 100]) == doctest::Approx(std::norm(s.mu[mid + 100])).epsilon(1e-12));

  CHECK(error_of([&] { init_lorentzian(uniform_grid(4001, eps, 0.01), 0.0, eps); }) == ErrorCode::invalid_argument);
  CHECK(error_of([&] { init_lorentzian(uniform_grid(2, eps / 10.0, 0.01), 0.0, eps); }) ==
        ErrorCode::invalid_dimension);
}

TEST_CASE("no waveguide coupling leaves the packet alone") {
  const OracleResult r = run_oracle(params(0.04, 0.0, 0.0, 1e-3));
  CHECK(std::abs(r.ports.n_r_minus - 1.0) < 1e-12);
  CHECK(std::abs(r.ports.n_l_minus) < 1e-12);
  CHECK(r.ports.n_r_plus == 0.0);
}

TEST_CASE("propagation bookkeeping") {
  const RouterParams p = params(0.04, 0.01, 0.005, 2e-3);
  const double t = default_t_final(p);
  const ContinuumGrid grid = make_grid(p, t);
  const ExcitationState s0 = init_lorentzian(grid, p.delta_prime, p.epsilon);
  const auto steps = static_cast<std::size_t>(std::ceil(t * 0.5 * grid.span / 0.25));
  PropagationReport rep;
  const ExcitationState s = propagate(s0, grid, p.g, t, steps, &rep);

  CHECK(rep.steps == steps);
  CHECK(rep.norm_drift < 1e-6);
  CHECK(rep.cavity_residual < 1e-6);
  // The truncated band cannot hold the sharp packet front; the ringing this
  // leaves near the band edges falls off as the band widens.
  CHECK(rep.edge_occupation < 1e-5);
  CHECK(rep.warnings.size() <= 1);
  CHECK(std::abs(s.norm(grid.cavity_weight) - 1.0) < 1e-6);

  // The decoupled channel only rotates.
  double worst = 0.0;
  for (Eigen::Index j = 0; j < s.c.size(); ++j) {
    const Complex free = s0.c[j] * std::exp(Complex(0.0, -grid.omega(static_cast<std::size_t>(j)) * t));
    worst = std::max(worst, std::abs(s.c[j] - free));
  }
  CHECK(worst < 1e-9);

  const PortNumbers n = extract_port_numbers(s, grid);
  CHECK(std::abs(n.sum() - 1.0) < 1e-4);
  CHECK(n.n_r_plus == n.n_l_plus);

  SUBCASE("too few steps is an integration failure") {
    CHECK(error_of([&] { propagate(s0, grid, p.g, t, 50); }) == ErrorCode::integration_failure);
  }
  SUBCASE("stopping before the cavity empties is reported") {
    CHECK(error_of([&] { propagate(s0, grid, p.g, 100.0, 2000); }) == ErrorCode::insufficient_time);
  }
  SUBCASE("mismatched state") {
    ExcitationState bad = s0;
    bad.eta.resize(3);
    CHECK(error_of([&] { propagate(bad, grid, p.g, t, steps); }) == ErrorCode::invalid_dimension);
    CHECK(error_of([&] { extract_port_numbers(bad, grid); }) == ErrorCode::invalid_dimension);
  }
}

TEST_CASE("g = 0 reproduces the single-cavity reflection profile") {
  const double gamma = 0.01;
  const RouterParams p = params(0.0, gamma, 0.0, 2e-3);
  const double t = default_t_final(p);
  const ContinuumGrid grid = make_grid(p, t);
  const ExcitationState s0 = init_lorentzian(grid, 0.0, p.epsilon);
  const auto steps = static_cast<std::size_t>(std::ceil(t * 0.5 * grid.span / 0.25));
  const ExcitationState s = propagate(s0, grid, 0.0, t, steps);
  double worst = 0.0;
  for (std::size_t j = 0; j < grid.n_modes; ++j) {
    const double w = grid.omega(j);
    if (std::abs(w) > 5.0 * gamma) continue;
    const auto k = static_cast<Eigen::Index>(j);
    const double l_num = std::norm(s.mu[k] - s.c[k]) / (4.0 * std::norm(s.c[k]));
    const double r_num = std::norm(s.mu[k] + s.c[k]) / (4.0 * std::norm(s.c[k]));
    const oracle::Ports ref = oracle::scatter(w, 0.0, gamma);
    worst = std::max({worst, std::abs(l_num - ref.l_minus), std::abs(r_num - ref.r_minus)});
  }
  // Residual ~ gamma / band half-width, mostly in r- far from resonance.
  CHECK(worst < 0.03);
  MESSAGE("largest pointwise deviation from the two-port profile: ", worst);
}

TEST_CASE("g = 0 resonant packet is reflected") {
  // The narrow default packet; the slowest case here.
  const OracleResult r = run_oracle(params(0.0, 0.01, 0.0, 1e-4));
  CHECK(r.ports.n_l_minus >= 0.99);
  CHECK(r.ports.n_r_plus == 0.0);
  CHECK(std::abs(r.ports.n_l_minus - oracle::two_port_reflection(0.01, 1e-4, 0.0)) < 1e-3);
}

TEST_CASE("oracle matches the integrated router") {
  const RouterParams p = params(0.04, 0.01, 0.0, 1e-3);
  const OracleResult r = run_oracle(p);
  const PortNumbers ref = port_numbers_integrated(p);
  CHECK(std::abs(r.ports.n_r_minus - ref.n_r_minus) < 0.02);
  CHECK(std::abs(r.ports.n_l_minus - ref.n_l_minus) < 0.02);
  CHECK(std::abs(r.ports.n_r_plus - ref.n_r_plus) < 0.02);
  CHECK(std::abs(r.ports.n_l_plus - ref.n_l_plus) < 0.02);
  // With the out-of-band correction the agreement is far tighter.
  CHECK(std::abs(r.ports.n_l_minus - ref.n_l_minus) < 2e-4);
  CHECK(std::abs(r.ports.n_r_plus - ref.n_r_plus) < 2e-4);

  SUBCASE("refinement changes little") {
    OracleSettings fine;
    fine.refinement = 2.0;
    const OracleResult r2 = run_oracle(p, fine);
    CHECK(std::abs(r2.ports.n_r_minus - r.ports.n_r_minus) < 0.005);
    CHECK(std::abs(r2.ports.n_l_minus - r.ports.n_l_minus) < 0.005);
    CHECK(std::abs(r2.ports.n_r_plus - r.ports.n_r_plus) < 0.005);
  }

  SUBCASE("bare truncated band is biased") {
    OracleSettings bare;
    bare.band_correction = false;
    const OracleResult rb = run_oracle(p, bare);
    const double bias = std::abs(rb.ports.n_l_minus - ref.n_l_minus);
    MESSAGE("bias without band correction: ", bias);
    CHECK(bias > std::abs(r.ports.n_l_minus - ref.n_l_minus));
  }
}
