#pragma once

#include <cstdint>
#include <string>

#include "sbt/gaussian_state.hpp"
#include "sbt/sideband_model.hpp"
#include "sbt/trace_synth.hpp"

namespace sbt {

/// The four traces needed for a full reconstruction.
struct TraceSet {
  HomodyneTrace trace_s;      ///< psi = 0
  HomodyneTrace trace_a;      ///< psi = pi/2
  HomodyneTrace trace_plus;   ///< psi = +pi/4
  HomodyneTrace trace_minus;  ///< psi = -pi/4
};

/// Checks psi assignments, non-empty samples and consistent scenario ids.
void validate(const TraceSet& traces);

enum class EstimatorKind {
  Harmonic,  ///< least-squares harmonic projection over the full sweep (default)
  Binned,    ///< phase bins at theta in {0, pi/4, pi/2, 3pi/4}
};

const char* to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& name);

/// Half-width of the phase bins used by the binned estimator.
inline constexpr double kPhaseBinHalfWidth = 3.14159265358979323846 / 100.0;

struct FirstMoments {
  double mean_q = 0.0;
  double mean_p = 0.0;
  double se_mean_q = 0.0;
  double se_mean_p = 0.0;
};

/// First moments from the full sweep: least squares of x on {cos, sin},
/// identical to 2*avg(x cos theta), 2*avg(x sin theta) on a uniform ramp.
/// Throws on degenerate phase coverage.
FirstMoments estimate_first_moments(const HomodyneTrace& trace);

struct MomentEstimates {
  double mean_q = 0.0, mean_p = 0.0;
  double var_q = 1.0, var_p = 1.0, cov_qp = 0.0;
  double se_mean_q = 0.0, se_mean_p = 0.0;
  double se_var_q = 0.0, se_var_p = 0.0, se_cov_qp = 0.0;
  /// Set when a variance estimate came out non-positive; values are kept.
  bool nonpositive_variance = false;
};

/// Second moments of one mode from its trace. Harmonic: fit x^2 on
/// {1, cos 2theta, sin 2theta} and solve for (var_q, var_p, cov); binned:
/// variances of the four phase bins, cov = (var z+ - var z-) / 2.
MomentEstimates estimate_second_moments(const HomodyneTrace& trace, const FirstMoments& first,
                                        EstimatorKind kind = EstimatorKind::Harmonic);

struct EpsilonEstimate {
  double eps_q = 0.0;
  double eps_p = 0.0;
  double se_eps_q = 0.0;
  double se_eps_p = 0.0;
};

/// Off-block diagonal entries from the psi = +-pi/4 traces:
/// eps_l = (⟨l+^2⟩ - ⟨l-^2⟩)/2 - ⟨l_s⟩⟨l_a⟩.
EpsilonEstimate estimate_epsilon(const HomodyneTrace& trace_plus, const HomodyneTrace& trace_minus,
                                 const FirstMoments& first_s, const FirstMoments& first_a,
                                 EstimatorKind kind = EstimatorKind::Harmonic);

struct AssembledCm {
  Eigen::Matrix4d sigma_prime;
  Eigen::Vector4d r_prime;
  Eigen::Matrix4d sigma_prime_se;
  Eigen::Vector4d r_prime_se;
};

/// Blockwise assembly of sigma' and R': diagonal blocks from the mode
/// moments, off block [[eps_q, dN], [-dN, eps_p]]. Symmetry holds by
/// construction; physicality is reported downstream, never enforced here.
AssembledCm assemble_cm(const MomentEstimates& moments_s, const MomentEstimates& moments_a,
                        const EpsilonEstimate& eps, double delta_n, double delta_n_se = 0.0);

/// N_Omega = (1/4) tr(sigma') - 1 (central moments, displacement excluded).
double n_total_from_cm(const Eigen::Matrix4d& sigma_prime);

struct SidebandState {
  Eigen::Matrix4d sigma_omega;
  Eigen::Vector4d r_omega;
};

/// sigma_Omega = S^T sigma' S, R_Omega = S^T R'.
SidebandState transform_to_sidebands(const Eigen::Matrix4d& sigma_prime,
                                     const Eigen::Vector4d& r_prime);

struct ReconstructionMetrics {
  double purity_s = 0.0, purity_a = 0.0;
  double nr_db_s = 0.0, nr_db_a = 0.0;
  double lambda_tilde = 0.0;
  double n_total = 0.0;
  double delta_n = 0.0;
  double physicality_margin = 0.0;
  // Bootstrap standard errors; NaN when the bootstrap was not run.
  double se_purity_s = 0.0, se_purity_a = 0.0;
  double se_nr_db_s = 0.0, se_nr_db_a = 0.0;
  double se_lambda_tilde = 0.0;
  double se_n_total = 0.0;
  double se_delta_n = 0.0;
};

struct ReconstructedState {
  Eigen::Vector4d r_prime;
  Eigen::Matrix4d sigma_prime;
  double delta_n = 0.0;
  Eigen::Vector4d r_omega;
  Eigen::Matrix4d sigma_omega;

  Eigen::Vector4d r_prime_se;
  Eigen::Matrix4d sigma_prime_se;
  Eigen::Vector4d r_omega_se;
  Eigen::Matrix4d sigma_omega_se;

  ReconstructionMetrics metrics;
  bool physical = false;
  EstimatorKind estimator = EstimatorKind::Harmonic;
  /// "analytic" (estimator sandwich errors) or "bootstrap".
  std::string errors_from;
  bool nonpositive_variance = false;
};

struct ReconstructOptions {
  EstimatorKind estimator = EstimatorKind::Harmonic;
  /// 0 disables the bootstrap (analytic entry errors, metric errors NaN).
  std::size_t bootstrap_resamples = 500;
  std::uint64_t bootstrap_seed = 0;
  std::size_t threads = 0;  ///< 0: hardware concurrency
};

/// Full pipeline: moments -> epsilon -> N_Omega -> dN (PDH) -> assemble ->
/// transform -> metrics. Unphysical results are reported with their margin,
/// never repaired.
ReconstructedState reconstruct(const TraceSet& traces, const PdhReadout& pdh,
                               const ReconstructOptions& options = {});

struct BootstrapErrors {
  Eigen::Vector4d r_prime_se;
  Eigen::Matrix4d sigma_prime_se;
  Eigen::Vector4d r_omega_se;
  Eigen::Matrix4d sigma_omega_se;
  double se_delta_n = 0.0;
  double se_n_total = 0.0;
  double se_purity_s = 0.0, se_purity_a = 0.0;
  double se_nr_db_s = 0.0, se_nr_db_a = 0.0;
  double se_lambda_tilde = 0.0;
};

/// Nonparametric bootstrap: (theta, x) pairs are resampled jointly per trace,
/// the full pipeline is re-run per resample and per-entry / per-metric
/// standard deviations are reported. Deterministic given seed; resamples run
/// concurrently, merged by index. Requires n_resamples >= 100.
BootstrapErrors bootstrap_errors(const TraceSet& traces, const PdhReadout& pdh,
                                 std::size_t n_resamples, std::uint64_t seed,
                                 EstimatorKind kind = EstimatorKind::Harmonic,
                                 std::size_t threads = 0);

}  // namespace sbt
