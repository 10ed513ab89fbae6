#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lindblad.hpp"
#include "model.hpp"

namespace optomech {

Complex expectation(const DensityMatrix& rho, const QOperator& op);

// <ai^dag aj^dag aj ai> / (<ai^dag ai><aj^dag aj>). Throws undefined_correlation
// when either occupation is below 1e-14.
double g2_equal_time(const DensityMatrix& rho, const QOperator& ai, const QOperator& aj);

enum class BlockadeModel { original, effective };
// Basis used to solve the original model. Both are exact representations of
// the same Hamiltonian; quasi-mode lets b+ carry a smaller truncation.
enum class OriginalBasis { quasi, physical };

const char* to_string(BlockadeModel model) noexcept;

struct Truncation {
  int cavity = 4;      // a- and a+ (or a1, a2)
  int mech_minus = 6;  // b- (or b1, b2 in the physical basis)
  int mech_plus = 2;   // b+ (original model in the quasi basis only)
};

enum class ConvergenceProbe { none, minima, all };

struct BlockadeOptions {
  BlockadeModel model = BlockadeModel::effective;
  OriginalBasis basis = OriginalBasis::quasi;
  Truncation truncation;
  ThermalConvention thermal = ThermalConvention::standard;
  SteadyStateMethod method = SteadyStateMethod::automatic;
  // Points re-solved with each truncation raised by one; flagged converged
  // when every correlator moves by less than convergence_tolerance (relative).
  ConvergenceProbe probe = ConvergenceProbe::minima;
  double convergence_tolerance = 0.01;
  unsigned jobs = 1;
};

struct Correlators {
  double g2_mm = 0.0;
  double g2_pp = 0.0;
  double g2_mp = 0.0;
  double n_minus = 0.0;
  double n_plus = 0.0;
  // Correlators left undefined by an empty mode; their values are NaN.
  std::vector<std::string> undefined;
};

struct BlockadePoint {
  double delta_minus = 0.0;
  bool ok = false;  // steady state solved
  std::string error;  // failure message, or a note naming undefined correlators
  Correlators values;
  bool probed = false;
  bool converged = false;
  double convergence_change = 0.0;  // worst relative change seen by the probe
  double residual = 0.0;
};

struct HalfMinima {
  // Argmin over the Delta_- < 0 and Delta_- > 0 halves of the grid and over
  // the whole grid; unset if that part has no successful point.
  std::optional<double> negative, positive, global;
};

struct BlockadeScan {
  std::vector<BlockadePoint> points;
  HalfMinima minima_mm, minima_pp, minima_mp;
  std::size_t failures = 0;
};

// Steady-state correlators at one Delta_- (Delta = Delta_- - J). Correlators of
// an unpopulated mode come back as NaN and are listed in `undefined`.
Correlators blockade_point(const SystemParams& params, double delta_minus, const BlockadeOptions& options,
                           const Truncation& truncation, SteadyStateReport* report = nullptr);

BlockadeScan blockade_scan(const SystemParams& params, const std::vector<double>& delta_minus_grid,
                           const BlockadeOptions& options);

HalfMinima find_minima(const std::vector<BlockadePoint>& points, double Correlators::*field);

std::vector<double> linspace(double lo, double hi, std::size_t count);

}  // namespace optomech
