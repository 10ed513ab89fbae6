#include "waveguide.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace optomech {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);
constexpr Complex kI{0.0, 1.0};

// Fraction of modes at each end of the band counted as "edge".
constexpr double kEdgeFraction = 0.01;

}  // namespace

double default_t_final(const RouterParams& p) {
  double t = 15.0 / p.epsilon;
  if (p.gamma > 0.0) t = std::max(t, 15.0 / p.gamma);
  return t;
}

ContinuumGrid make_grid(const RouterParams& p, double t_final, const OracleSettings& settings) {
  p.validate();
  if (!(t_final > 0.0)) fail(ErrorCode::invalid_argument, "t_final must be > 0");
  if (!(settings.refinement >= 1.0)) fail(ErrorCode::invalid_argument, "refinement must be >= 1");
  const double half = std::abs(p.delta_prime) + std::max(25.0, settings.packet_halfwidths) * p.epsilon +
                      10.0 * p.gamma + 5.0 * p.g;
  // Resolve the cavity width, and keep the recurrence time 2 pi / dk above 2 t_final.
  double dk = kPi / t_final;
  if (p.gamma > 0.0) dk = std::min(dk, p.gamma / 50.0);
  auto modes = static_cast<std::size_t>(std::ceil(2.0 * half / dk));
  modes = std::max(modes, settings.min_modes);
  modes = static_cast<std::size_t>(std::ceil(static_cast<double>(modes) * settings.refinement));
  if (modes % 2 == 0) ++modes;

  ContinuumGrid grid;
  grid.n_modes = modes;
  grid.dk = std::min(dk, 2.0 * half / static_cast<double>(modes));
  grid.span = grid.dk * static_cast<double>(modes);
  grid.center = 0.0;
  grid.coupling = kSqrt2 * std::sqrt(p.gamma / (2.0 * kPi)) * std::sqrt(grid.dk);
  if (settings.band_correction) grid.cavity_weight = 1.0 + 2.0 * p.gamma / (kPi * 0.5 * grid.span);
  return grid;
}

double ExcitationState::norm(double cavity_weight) const {
  return cavity_weight * (std::norm(alpha_minus) + std::norm(alpha_plus)) + mu.squaredNorm() + eta.squaredNorm();
}

ExcitationState init_lorentzian(const ContinuumGrid& grid, double delta_prime, double epsilon) {
  if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "epsilon must be > 0");
  if (grid.n_modes < 3) fail(ErrorCode::invalid_dimension, "continuum grid needs at least 3 modes");
  if (grid.dk > epsilon / 2.0) {
    fail(ErrorCode::invalid_argument, "grid spacing " + std::to_string(grid.dk) +
                                          " is too coarse to sample a packet of half-width " +
                                          std::to_string(epsilon));
  }
  const auto n = static_cast<Eigen::Index>(grid.n_modes);
  ExcitationState s;
  s.mu.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    s.mu[j] = 1.0 / Complex(grid.omega(static_cast<std::size_t>(j)) - delta_prime, epsilon);
  }
  s.mu /= s.mu.norm();
  s.eta = Eigen::VectorXcd::Zero(n);
  s.c = s.mu;
  return s;
}

ExcitationState propagate(const ExcitationState& state, const ContinuumGrid& grid, double g, double t_final,
                          std::size_t steps, PropagationReport* report) {
  const auto n = static_cast<Eigen::Index>(grid.n_modes);
  if (state.mu.size() != n || state.eta.size() != n || state.c.size() != n) {
    fail(ErrorCode::invalid_dimension, "excitation state does not match the continuum grid");
  }
  if (!(t_final >= 0.0)) fail(ErrorCode::invalid_argument, "t_final must be >= 0");
  if (steps == 0) fail(ErrorCode::invalid_argument, "need at least one step");

  const double dt = t_final / static_cast<double>(steps);
  const double h = g / kSqrt2;
  const double cpl = grid.coupling;
  const double w = grid.cavity_weight;
  if (!(w >= 1.0)) fail(ErrorCode::invalid_argument, "cavity weight must be >= 1");
  // Integrating-factor RK4: the free rotation exp(-i omega t) is applied
  // exactly and RK4 handles only the cavity-waveguide coupling, so the
  // undisturbed part of the packet keeps its norm and phase to roundoff.
  Eigen::VectorXcd half_phase(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    half_phase[j] = std::exp(-kI * grid.omega(static_cast<std::size_t>(j)) * (0.5 * dt));
  }
  const Eigen::VectorXcd full_phase = half_phase.cwiseProduct(half_phase);

  struct Stage {
    Complex am, ap;
    Eigen::VectorXcd mu, eta;
  };
  // Coupling part of the generator. Its mode components are uniform across
  // the band, so only the cavity amplitudes they carry are stored.
  struct Coupling {
    Complex d_am, d_ap, d_mu, d_eta;
  };
  auto coupling = [&](const Stage& y) {
    return Coupling{-kI * (h * y.ap + cpl * y.mu.sum()) / w, -kI * (h * y.am + cpl * y.eta.sum()) / w,
                    -kI * cpl * y.am, -kI * cpl * y.ap};
  };

  ExcitationState s = state;
  const double norm0 = s.norm(w);
  double drift = 0.0;
  Stage y{s.alpha_minus, s.alpha_plus, s.mu, s.eta}, tmp;
  Eigen::VectorXcd mu_half(n), eta_half(n);
  for (std::size_t step = 0; step < steps; ++step) {
    const Coupling k1 = coupling(y);
    mu_half = y.mu.cwiseProduct(half_phase);
    eta_half = y.eta.cwiseProduct(half_phase);

    tmp.am = y.am + 0.5 * dt * k1.d_am;
    tmp.ap = y.ap + 0.5 * dt * k1.d_ap;
    tmp.mu = mu_half + (0.5 * dt * k1.d_mu) * half_phase;
    tmp.eta = eta_half + (0.5 * dt * k1.d_eta) * half_phase;
    const Coupling k2 = coupling(tmp);

    tmp.am = y.am + 0.5 * dt * k2.d_am;
    tmp.ap = y.ap + 0.5 * dt * k2.d_ap;
    tmp.mu = mu_half.array() + 0.5 * dt * k2.d_mu;
    tmp.eta = eta_half.array() + 0.5 * dt * k2.d_eta;
    const Coupling k3 = coupling(tmp);

    tmp.am = y.am + dt * k3.d_am;
    tmp.ap = y.ap + dt * k3.d_ap;
    tmp.mu = (mu_half.array() + dt * k3.d_mu) * half_phase.array();
    tmp.eta = (eta_half.array() + dt * k3.d_eta) * half_phase.array();
    const Coupling k4 = coupling(tmp);

    y.am += dt / 6.0 * (k1.d_am + 2.0 * k2.d_am + 2.0 * k3.d_am + k4.d_am);
    y.ap += dt / 6.0 * (k1.d_ap + 2.0 * k2.d_ap + 2.0 * k3.d_ap + k4.d_ap);
    y.mu = y.mu.cwiseProduct(full_phase) + (dt / 6.0) * (k1.d_mu * full_phase + 2.0 * (k2.d_mu + k3.d_mu) * half_phase +
                                                        Eigen::VectorXcd::Constant(n, k4.d_mu));
    y.eta = y.eta.cwiseProduct(full_phase) + (dt / 6.0) * (k1.d_eta * full_phase +
                                                          2.0 * (k2.d_eta + k3.d_eta) * half_phase +
                                                          Eigen::VectorXcd::Constant(n, k4.d_eta));
    // The c channel has no coupling term and rotates freely.
    s.c = s.c.cwiseProduct(full_phase);

    if ((step + 1) % 256 == 0 || step + 1 == steps) {
      const double norm = w * (std::norm(y.am) + std::norm(y.ap)) + y.mu.squaredNorm() + y.eta.squaredNorm();
      drift = std::max(drift, std::abs(norm - norm0));
      if (drift > 1e-5 || !std::isfinite(drift)) {
        fail(ErrorCode::integration_failure, "norm drifted by " + std::to_string(drift) + " at t = " +
                                                 std::to_string(dt * static_cast<double>(step + 1)) +
                                                 "; use more steps");
      }
    }
  }
  s.alpha_minus = y.am;
  s.alpha_plus = y.ap;
  s.mu = std::move(y.mu);
  s.eta = std::move(y.eta);

  PropagationReport local;
  local.steps = steps;
  local.dt = dt;
  local.norm_drift = drift;
  local.cavity_residual = std::norm(s.alpha_minus) + std::norm(s.alpha_plus);
  if (local.cavity_residual > 1e-4) {
    fail(ErrorCode::insufficient_time, "cavity population " + std::to_string(local.cavity_residual) +
                                           " remains at t_final = " + std::to_string(t_final));
  }
  if (local.cavity_residual > 1e-6) {
    local.warnings.push_back("cavity population " + std::to_string(local.cavity_residual) + " above 1e-6 at t_final");
  }
  if (drift > 1e-6) local.warnings.push_back("norm drift " + std::to_string(drift) + " above 1e-6");

  // Scattered weight that ended up in the outermost modes of either channel.
  const auto edge = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(kEdgeFraction * static_cast<double>(n)));
  double moved = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j >= edge && j < n - edge) continue;
    moved += std::norm(s.eta[j]) + std::abs(std::norm(s.mu[j]) - std::norm(state.mu[j]));
  }
  local.edge_occupation = moved;
  if (moved > 1e-6) {
    local.warnings.push_back("scattered weight " + std::to_string(moved) + " reached the band edges");
  }
  if (report) *report = std::move(local);
  return s;
}

PortNumbers extract_port_numbers(const ExcitationState& s, const ContinuumGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.n_modes);
  if (s.mu.size() != n || s.eta.size() != n || s.c.size() != n) {
    fail(ErrorCode::invalid_dimension, "excitation state does not match the continuum grid");
  }
  PortNumbers out;
  // r/l = (d +- c)/sqrt(2) with d and c each carrying half the incident packet.
  out.n_r_minus = 0.25 * (s.mu + s.c).squaredNorm();
  out.n_l_minus = 0.25 * (s.mu - s.c).squaredNorm();
  out.n_r_plus = 0.25 * s.eta.squaredNorm();
  out.n_l_plus = out.n_r_plus;
  const double total = out.sum();
  const double expected = 0.5 * (s.mu.squaredNorm() + s.eta.squaredNorm() + s.c.squaredNorm());
  if (std::abs(total - expected) > 1e-9 || std::abs(total - 1.0) > 1e-4) {
    fail(ErrorCode::normalization_failure,
         "port numbers sum to " + std::to_string(total) + "; channel bookkeeping is inconsistent");
  }
  return out;
}

OracleResult run_oracle(const RouterParams& p, const OracleSettings& settings) {
  OracleResult r;
  r.t_final = settings.t_final.value_or(default_t_final(p));
  r.grid = make_grid(p, r.t_final, settings);
  const double half = 0.5 * r.grid.span;
  auto steps = static_cast<std::size_t>(std::ceil(r.t_final * half / settings.dt_factor * settings.refinement));
  const ExcitationState initial = init_lorentzian(r.grid, p.delta_prime, p.epsilon);
  const ExcitationState final_state = propagate(initial, r.grid, p.g, r.t_final, steps, &r.report);
  r.ports = extract_port_numbers(final_state, r.grid);
  const double weight = p.packet_weight();
  r.ports.n_r_minus *= weight;
  r.ports.n_l_minus *= weight;
  r.ports.n_r_plus *= weight;
  r.ports.n_l_plus *= weight;
  return r;
}

}  // namespace optomech
