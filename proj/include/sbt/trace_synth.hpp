#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sbt/gaussian_state.hpp"

namespace sbt {

/// Acquisition parameters for one phase-scanned homodyne trace.
struct TraceConfig {
  std::size_t n_samples = 100000;
  /// Empty: linear LO-phase ramp over [0, 2pi). Non-empty: explicit phase
  /// list (canonicalized), must match n_samples.
  std::vector<double> explicit_phases;
  double visibility = 0.95;          ///< eta in (0, 1]
  double electronic_noise_var = 0.0; ///< additive variance, shot-noise units
  std::uint64_t rng_seed = 0;
};

void validate(const TraceConfig& config);

/// LO phase of sample i under the configured ramp.
double theta_at(const TraceConfig& config, std::size_t i);

struct TraceMeta {
  TraceConfig config;
  std::string scenario;
};

/// One mixer-phase setting's record of (theta, x) samples.
struct HomodyneTrace {
  double psi = 0.0;
  std::vector<double> theta;
  std::vector<double> x;
  TraceMeta meta;
};

/// Draw a phase-scanned trace at mixer phase psi. Each sample is Gaussian
/// with mean sqrt(eta) m and variance eta v + (1 - eta) + electronic noise,
/// where (m, v) are the quadrature moments at (theta_i, psi). Deterministic
/// given config.rng_seed. Rejects unphysical states.
HomodyneTrace synthesize_trace(const GaussianTwoModeState& state_sa, double psi,
                               const TraceConfig& config, const std::string& scenario = {});

/// Dual-channel acquisition at psi1 and psi1 + pi/2 sharing one theta ramp.
/// Per-sample pairs are drawn from the joint 2x2 Gaussian under sigma'
/// (cross covariance included); electronic noise is independent per channel.
std::pair<HomodyneTrace, HomodyneTrace> synthesize_dual(const GaussianTwoModeState& state_sa,
                                                        double psi1, const TraceConfig& config,
                                                        const std::string& scenario = {});

/// Electronics parameters for raw photocurrent synthesis and demodulation.
struct RawConfig {
  double sample_rate = 30e6;              ///< Hz, must exceed 4 * omega
  double duration = 20e-3;                ///< s
  double omega = 3e6;                     ///< demodulation frequency, Hz
  double lowpass_cutoff = 3e5;            ///< Hz, must stay below omega
  double highpass_cutoff = 5e5;           ///< Hz; modeled as DC removal
  double white_noise_var_per_sample = 0.0;
  std::uint64_t rng_seed = 0;
};

void validate(const RawConfig& raw);

/// Number of samples in one coherence window (length 1/lowpass_cutoff).
std::size_t demod_window_samples(const RawConfig& raw);

/// Raw photocurrent: time is partitioned into windows of length
/// 1/lowpass_cutoff; per window (X_s, X_a) are drawn jointly at the window's
/// theta and the series is I(t) = 2 X_s cos(Omega t) - 2 X_a sin(Omega t)
/// plus white noise. Windows are independent.
std::vector<double> synthesize_raw_photocurrent(const GaussianTwoModeState& state_sa,
                                                const std::function<double(double)>& theta_of_t,
                                                const RawConfig& raw);

/// Digital lock-in: remove DC, multiply by cos(Omega t + psi), FIR low-pass,
/// decimate to one sample per window. The mixer's product-to-sum 1/2 cancels
/// the envelope factor 2, so each output sample equals
/// X_s cos psi + X_a sin psi at the window's theta.
HomodyneTrace demodulate(std::span<const double> series, const RawConfig& raw, double psi,
                         const std::function<double(double)>& theta_of_t,
                         const std::string& scenario = {});

/// Hamming-windowed sinc low-pass taps, DC gain normalized to 1. The filter
/// order used by demodulate() is the largest odd number of taps that fits
/// inside one decimation window.
std::vector<double> lowpass_fir_taps(double cutoff, double sample_rate, std::size_t n_taps);

}  // namespace sbt
