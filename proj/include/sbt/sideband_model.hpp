#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sbt/gaussian_state.hpp"

namespace sbt {

/// A homodyne observable: LO phase theta and mixer phase psi, both
/// canonicalized into [0, 2pi).
struct QuadratureSpec {
  QuadratureSpec(double theta_in, double psi_in);
  double theta;
  double psi;
};

/// Wrap an angle into [0, 2pi). Throws on non-finite input.
double canonical_angle(double angle);

/// Selection vector u of the measured quadrature in the SymAntisym basis:
///   u = (cos psi cos theta, cos psi sin theta, sin psi cos theta, sin psi sin theta),
/// so that X_theta(psi) = u . r'. Unit norm for all angles.
Eigen::Vector4d selection_vector(const QuadratureSpec& spec);

struct QuadratureMoments {
  double mean = 0.0;
  double variance = 1.0;
};

/// Mean and variance of the Gaussian marginal along u: mean = u.R',
/// variance = u^T sigma' u. The state must carry the SymAntisym basis tag.
QuadratureMoments quadrature_moments(const GaussianTwoModeState& state, const QuadratureSpec& spec);

/// OPO cavity line parameters. All frequencies in Hz.
struct CavityModel {
  double linewidth_fwhm = 55e6;   ///< kappa (FWHM)
  double fsr = 3300e6;            ///< free spectral range
  double sideband_offset = 3e6;   ///< Omega / 2pi, seed sideband offset
  double hf_offset = 110e6;       ///< PDH modulation frequency (metadata)
  double detuning = 0.0;          ///< residual carrier detuning from resonance
};

void validate(const CavityModel& cavity);

/// Relative transmission coefficients of the two sidebands, tau+ + tau- = 1.
struct PdhReadout {
  double tau_plus = 0.5;
  double tau_minus = 0.5;
};

void validate(const PdhReadout& readout);

struct CavityTransmission {
  double t_plus = 1.0;   ///< absolute Lorentzian transmission at +Omega
  double t_minus = 1.0;  ///< at -Omega
  PdhReadout readout;
};

/// Lorentzian line T(df) = 1 / (1 + (2 df / kappa)^2) evaluated at
/// detuning +- sideband_offset; tau_pm = T_pm / (T+ + T-).
CavityTransmission cavity_transmission(const CavityModel& cavity);

/// Sideband energy unbalance from the PDH channel:
/// dN = (tau+ - tau-) * n_total. Requires n_total >= 0.
double unbalance_from_pdh(const PdhReadout& readout, double n_total);

/// Idealized reflection PDH error signal on a detuning grid, normalized to
/// peak 1, antisymmetric with positive slope through zero. Diagnostic only;
/// requires the modulation frequency to exceed the linewidth.
std::vector<std::pair<double, double>> pdh_error_signal(const CavityModel& cavity,
                                                        std::span<const double> detuning_grid);

}  // namespace sbt
