#include "sbt/sideband_model.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace sbt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double canonical_angle(double angle) {
  if (!std::isfinite(angle)) {
    throw std::invalid_argument("canonical_angle: angle must be finite");
  }
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  // fmod can land exactly on 2pi after the correction for tiny negatives
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

QuadratureSpec::QuadratureSpec(double theta_in, double psi_in)
    : theta(canonical_angle(theta_in)), psi(canonical_angle(psi_in)) {}

Eigen::Vector4d selection_vector(const QuadratureSpec& spec) {
  const double ct = std::cos(spec.theta);
  const double st = std::sin(spec.theta);
  const double cp = std::cos(spec.psi);
  const double sp = std::sin(spec.psi);
  return Eigen::Vector4d(cp * ct, cp * st, sp * ct, sp * st);
}

QuadratureMoments quadrature_moments(const GaussianTwoModeState& state,
                                     const QuadratureSpec& spec) {
  if (state.basis != ModalBasis::SymAntisym) {
    throw std::invalid_argument("quadrature_moments: state must be in the SymAntisym basis");
  }
  const Eigen::Vector4d u = selection_vector(spec);
  QuadratureMoments moments;
  moments.mean = u.dot(state.first_moments);
  moments.variance = u.dot(state.cm * u);
  return moments;
}

void validate(const CavityModel& cavity) {
  if (!(cavity.linewidth_fwhm > 0.0) || !std::isfinite(cavity.linewidth_fwhm)) {
    throw std::invalid_argument("CavityModel: linewidth_fwhm must be > 0");
  }
  if (!(cavity.fsr > 0.0) || !std::isfinite(cavity.fsr)) {
    throw std::invalid_argument("CavityModel: fsr must be > 0");
  }
  if (!(cavity.sideband_offset > 0.0) || !(cavity.sideband_offset < 0.5 * cavity.fsr)) {
    throw std::invalid_argument("CavityModel: sideband_offset must lie in (0, fsr/2)");
  }
  if (!std::isfinite(cavity.detuning) || !std::isfinite(cavity.hf_offset)) {
    throw std::invalid_argument("CavityModel: detuning and hf_offset must be finite");
  }
}

void validate(const PdhReadout& readout) {
  if (!(readout.tau_plus >= 0.0 && readout.tau_plus <= 1.0) ||
      !(readout.tau_minus >= 0.0 && readout.tau_minus <= 1.0)) {
    throw std::invalid_argument("PdhReadout: tau coefficients must lie in [0, 1]");
  }
  if (std::abs(readout.tau_plus + readout.tau_minus - 1.0) > 1e-12) {
    throw std::invalid_argument("PdhReadout: tau_plus + tau_minus must equal 1");
  }
}

namespace {

double lorentzian_transmission(double detuning, double kappa) {
  const double x = 2.0 * detuning / kappa;
  return 1.0 / (1.0 + x * x);
}

// Amplitude reflection of an impedance-matched Lorentzian line.
std::complex<double> cavity_reflection(double detuning, double kappa) {
  const std::complex<double> ix(0.0, 2.0 * detuning / kappa);
  return ix / (1.0 + ix);
}

double pdh_raw(double detuning, double kappa, double mod_freq) {
  const std::complex<double> r0 = cavity_reflection(detuning, kappa);
  const std::complex<double> rp = cavity_reflection(detuning + mod_freq, kappa);
  const std::complex<double> rm = cavity_reflection(detuning - mod_freq, kappa);
  return std::imag(r0 * std::conj(rp) - std::conj(r0) * rm);
}

}  // namespace

CavityTransmission cavity_transmission(const CavityModel& cavity) {
  validate(cavity);
  CavityTransmission out;
  out.t_plus = lorentzian_transmission(cavity.detuning + cavity.sideband_offset,
                                       cavity.linewidth_fwhm);
  out.t_minus = lorentzian_transmission(cavity.detuning - cavity.sideband_offset,
                                        cavity.linewidth_fwhm);
  out.readout.tau_plus = out.t_plus / (out.t_plus + out.t_minus);
  out.readout.tau_minus = 1.0 - out.readout.tau_plus;
  return out;
}

double unbalance_from_pdh(const PdhReadout& readout, double n_total) {
  validate(readout);
  if (!(n_total >= 0.0) || !std::isfinite(n_total)) {
    throw std::invalid_argument("unbalance_from_pdh: n_total must be >= 0");
  }
  return (readout.tau_plus - readout.tau_minus) * n_total;
}

std::vector<std::pair<double, double>> pdh_error_signal(const CavityModel& cavity,
                                                        std::span<const double> detuning_grid) {
  validate(cavity);
  if (!(cavity.hf_offset > cavity.linewidth_fwhm)) {
    throw std::invalid_argument(
        "pdh_error_signal: modulation frequency must exceed the cavity linewidth");
  }
  const double kappa = cavity.linewidth_fwhm;
  const double fm = cavity.hf_offset;

  // Peak search on a dense internal grid; the extremum sits near +-kappa/2.
  double peak = 0.0;
  const int n_probe = 4001;
  const double span = fm + 4.0 * kappa;
  for (int i = 0; i < n_probe; ++i) {
    const double d = -span + 2.0 * span * i / (n_probe - 1);
    peak = std::max(peak, std::abs(pdh_raw(d, kappa, fm)));
  }
  const double slope_sign = pdh_raw(kappa / 100.0, kappa, fm) >= 0.0 ? 1.0 : -1.0;

  std::vector<std::pair<double, double>> curve;
  curve.reserve(detuning_grid.size());
  for (double d : detuning_grid) {
    curve.emplace_back(d, slope_sign * pdh_raw(d, kappa, fm) / peak);
  }
  return curve;
}

}  // namespace sbt
