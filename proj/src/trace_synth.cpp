#include "sbt/trace_synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sbt/rng.hpp"
#include "sbt/sideband_model.hpp"

namespace sbt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_physical(const GaussianTwoModeState& state, const char* who) {
  if (state.basis != ModalBasis::SymAntisym) {
    throw std::invalid_argument(std::string(who) + ": state must be in the SymAntisym basis");
  }
  const PhysicalityCheck check = check_physicality(state.cm);
  if (!check.passes) {
    throw std::invalid_argument(std::string(who) + ": state is unphysical (margin " +
                                std::to_string(check.margin) + ")");
  }
}

}  // namespace

void validate(const TraceConfig& config) {
  if (config.n_samples < 1) {
    throw std::invalid_argument("TraceConfig: n_samples must be >= 1");
  }
  if (!(config.visibility > 0.0 && config.visibility <= 1.0)) {
    throw std::invalid_argument("TraceConfig: visibility must lie in (0, 1]");
  }
  if (!(config.electronic_noise_var >= 0.0) || !std::isfinite(config.electronic_noise_var)) {
    throw std::invalid_argument("TraceConfig: electronic_noise_var must be >= 0");
  }
  if (!config.explicit_phases.empty() && config.explicit_phases.size() != config.n_samples) {
    throw std::invalid_argument("TraceConfig: explicit phase list must match n_samples");
  }
  for (double phase : config.explicit_phases) {
    if (!std::isfinite(phase)) {
      throw std::invalid_argument("TraceConfig: explicit phases must be finite");
    }
  }
}

double theta_at(const TraceConfig& config, std::size_t i) {
  if (!config.explicit_phases.empty()) {
    return canonical_angle(config.explicit_phases[i]);
  }
  return kTwoPi * static_cast<double>(i) / static_cast<double>(config.n_samples);
}

HomodyneTrace synthesize_trace(const GaussianTwoModeState& state_sa, double psi,
                               const TraceConfig& config, const std::string& scenario) {
  validate(config);
  require_physical(state_sa, "synthesize_trace");

  const double eta = config.visibility;
  GaussianRng rng(config.rng_seed);

  HomodyneTrace trace;
  trace.psi = canonical_angle(psi);
  trace.meta = {config, scenario};
  trace.theta.resize(config.n_samples);
  trace.x.resize(config.n_samples);

  for (std::size_t i = 0; i < config.n_samples; ++i) {
    const double theta = theta_at(config, i);
    const QuadratureMoments m = quadrature_moments(state_sa, {theta, psi});
    const double var = eta * m.variance + (1.0 - eta) + config.electronic_noise_var;
    trace.theta[i] = theta;
    trace.x[i] = std::sqrt(eta) * m.mean + std::sqrt(var) * rng.gauss();
  }
  return trace;
}

std::pair<HomodyneTrace, HomodyneTrace> synthesize_dual(const GaussianTwoModeState& state_sa,
                                                        double psi1, const TraceConfig& config,
                                                        const std::string& scenario) {
  validate(config);
  require_physical(state_sa, "synthesize_dual");

  const double psi2 = psi1 + std::numbers::pi / 2.0;
  const double eta = config.visibility;
  GaussianRng rng(config.rng_seed);

  HomodyneTrace t1, t2;
  t1.psi = canonical_angle(psi1);
  t2.psi = canonical_angle(psi2);
  t1.meta = t2.meta = {config, scenario};
  t1.theta.resize(config.n_samples);
  t1.x.resize(config.n_samples);
  t2.theta = t1.theta;
  t2.x.resize(config.n_samples);

  for (std::size_t i = 0; i < config.n_samples; ++i) {
    const double theta = theta_at(config, i);
    const Eigen::Vector4d u1 = selection_vector({theta, psi1});
    const Eigen::Vector4d u2 = selection_vector({theta, psi2});

    const double m1 = std::sqrt(eta) * u1.dot(state_sa.first_moments);
    const double m2 = std::sqrt(eta) * u2.dot(state_sa.first_moments);
    // Shared optical sample, independent electronic noise per channel:
    // the loss admixture enters both diagonals, the cross term only eta.
    const double c11 =
        eta * u1.dot(state_sa.cm * u1) + (1.0 - eta) + config.electronic_noise_var;
    const double c22 =
        eta * u2.dot(state_sa.cm * u2) + (1.0 - eta) + config.electronic_noise_var;
    const double c12 = eta * u1.dot(state_sa.cm * u2);

    const double l11 = std::sqrt(c11);
    const double l21 = c12 / l11;
    const double l22 = std::sqrt(std::max(0.0, c22 - l21 * l21));
    const double z1 = rng.gauss();
    const double z2 = rng.gauss();

    t1.theta[i] = theta;
    t2.theta[i] = theta;
    t1.x[i] = m1 + l11 * z1;
    t2.x[i] = m2 + l21 * z1 + l22 * z2;
  }
  return {std::move(t1), std::move(t2)};
}

void validate(const RawConfig& raw) {
  if (!(raw.sample_rate > 4.0 * raw.omega)) {
    throw std::invalid_argument("RawConfig: sample_rate must exceed 4 * omega");
  }
  if (!(raw.lowpass_cutoff > 0.0 && raw.lowpass_cutoff < raw.omega)) {
    throw std::invalid_argument("RawConfig: lowpass_cutoff must lie in (0, omega)");
  }
  if (!(raw.omega > 0.0) || !(raw.duration > 0.0)) {
    throw std::invalid_argument("RawConfig: omega and duration must be > 0");
  }
  if (!(raw.highpass_cutoff > 0.0)) {
    throw std::invalid_argument("RawConfig: highpass_cutoff must be > 0");
  }
  if (!(raw.white_noise_var_per_sample >= 0.0)) {
    throw std::invalid_argument("RawConfig: white_noise_var_per_sample must be >= 0");
  }
}

std::size_t demod_window_samples(const RawConfig& raw) {
  const auto win = static_cast<std::size_t>(std::llround(raw.sample_rate / raw.lowpass_cutoff));
  if (win < 8) {
    throw std::invalid_argument("RawConfig: fewer than 8 samples per coherence window");
  }
  return win;
}

std::vector<double> synthesize_raw_photocurrent(const GaussianTwoModeState& state_sa,
                                                const std::function<double(double)>& theta_of_t,
                                                const RawConfig& raw) {
  validate(raw);
  require_physical(state_sa, "synthesize_raw_photocurrent");

  const std::size_t win = demod_window_samples(raw);
  const auto total = static_cast<std::size_t>(raw.duration * raw.sample_rate);
  const std::size_t n_win = total / win;
  if (n_win == 0) {
    throw std::invalid_argument("synthesize_raw_photocurrent: duration shorter than one window");
  }

  GaussianRng rng(raw.rng_seed);
  const double dt = 1.0 / raw.sample_rate;
  const double w = kTwoPi * raw.omega;
  const double noise_sd = std::sqrt(raw.white_noise_var_per_sample);

  std::vector<double> series(n_win * win);
  for (std::size_t k = 0; k < n_win; ++k) {
    const double t_center = (static_cast<double>(k) + 0.5) * static_cast<double>(win) * dt;
    const double theta = theta_of_t(t_center);
    const Eigen::Vector4d us = selection_vector({theta, 0.0});
    const Eigen::Vector4d ua = selection_vector({theta, std::numbers::pi / 2.0});

    const double ms = us.dot(state_sa.first_moments);
    const double ma = ua.dot(state_sa.first_moments);
    const double vs = us.dot(state_sa.cm * us);
    const double va = ua.dot(state_sa.cm * ua);
    const double csa = us.dot(state_sa.cm * ua);

    const double l11 = std::sqrt(vs);
    const double l21 = csa / l11;
    const double l22 = std::sqrt(std::max(0.0, va - l21 * l21));
    const double z1 = rng.gauss();
    const double z2 = rng.gauss();
    const double xs = ms + l11 * z1;
    const double xa = ma + l21 * z1 + l22 * z2;

    for (std::size_t j = 0; j < win; ++j) {
      const double t = (static_cast<double>(k * win + j)) * dt;
      double sample = 2.0 * xs * std::cos(w * t) - 2.0 * xa * std::sin(w * t);
      if (noise_sd > 0.0) sample += noise_sd * rng.gauss();
      series[k * win + j] = sample;
    }
  }
  return series;
}

std::vector<double> lowpass_fir_taps(double cutoff, double sample_rate, std::size_t n_taps) {
  if (n_taps < 3 || n_taps % 2 == 0) {
    throw std::invalid_argument("lowpass_fir_taps: tap count must be odd and >= 3");
  }
  if (!(cutoff > 0.0 && cutoff < 0.5 * sample_rate)) {
    throw std::invalid_argument("lowpass_fir_taps: cutoff must lie below Nyquist");
  }
  const double fc = cutoff / sample_rate;
  const auto mid = static_cast<double>(n_taps - 1) / 2.0;
  std::vector<double> taps(n_taps);
  double sum = 0.0;
  for (std::size_t j = 0; j < n_taps; ++j) {
    const double m = static_cast<double>(j) - mid;
    const double arg = 2.0 * std::numbers::pi * fc * m;
    const double sinc = m == 0.0 ? 2.0 * fc : std::sin(arg) / (std::numbers::pi * m);
    const double hamming =
        0.54 - 0.46 * std::cos(kTwoPi * static_cast<double>(j) / static_cast<double>(n_taps - 1));
    taps[j] = sinc * hamming;
    sum += taps[j];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

HomodyneTrace demodulate(std::span<const double> series, const RawConfig& raw, double psi,
                         const std::function<double(double)>& theta_of_t,
                         const std::string& scenario) {
  validate(raw);
  if (!(raw.lowpass_cutoff < raw.omega)) {
    throw std::invalid_argument("demodulate: lowpass cutoff must stay below omega");
  }
  const std::size_t win = demod_window_samples(raw);
  const std::size_t n_win = series.size() / win;
  if (n_win == 0) {
    throw std::invalid_argument("demodulate: series shorter than one window");
  }

  // High-pass stage: remove the DC component before mixing.
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(series.size());

  const double dt = 1.0 / raw.sample_rate;
  const double w = kTwoPi * raw.omega;
  const double psi_c = canonical_angle(psi);

  std::vector<double> mixed(n_win * win);
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    const double t = static_cast<double>(i) * dt;
    mixed[i] = (series[i] - mean) * std::cos(w * t + psi_c);
  }

  // Largest odd tap count that keeps the filter support inside one window
  // when sampling at window centers.
  std::size_t n_taps = win - 1;
  if (n_taps % 2 == 0) n_taps -= 1;
  const std::vector<double> taps = lowpass_fir_taps(raw.lowpass_cutoff, raw.sample_rate, n_taps);
  const std::size_t half = (n_taps - 1) / 2;

  HomodyneTrace trace;
  trace.psi = psi_c;
  trace.meta.scenario = scenario;
  trace.meta.config.n_samples = n_win;
  trace.meta.config.visibility = 1.0;
  trace.meta.config.electronic_noise_var = 0.0;
  trace.meta.config.rng_seed = raw.rng_seed;
  trace.theta.resize(n_win);
  trace.x.resize(n_win);

  for (std::size_t k = 0; k < n_win; ++k) {
    const std::size_t center = k * win + win / 2;
    double acc = 0.0;
    for (std::size_t j = 0; j < n_taps; ++j) {
      acc += taps[j] * mixed[center - half + j];
    }
    // The mixer's 1/2 on the baseband cancels the factor 2 carried by the
    // synthesized envelope, so acc is already X_s cos(psi) + X_a sin(psi).
    trace.theta[k] = canonical_angle(theta_of_t((static_cast<double>(k) + 0.5) *
                                                static_cast<double>(win) * dt));
    trace.x[k] = acc;
  }
  return trace;
}

}  // namespace sbt
