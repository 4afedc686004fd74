#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>

namespace sbt {

// Quadrature convention used throughout: x = a + a^dag, vacuum variance 1
// (shot-noise unit). Two-mode quadrature order is (q1, p1, q2, p2).

/// Physical knobs of a two-mode squeezed thermal state.
struct TmstParams {
  std::complex<double> alpha{0.0, 0.0};  ///< symmetric displacement amplitude
  double n_sq = 0.0;                     ///< mean squeezed photons per mode, >= 0
  double n_th = 0.0;                     ///< total thermal photons, >= 0
  double r_th = 0.5;                     ///< thermal-photon fraction, in [0, 1]
};

/// Throws std::invalid_argument on out-of-range or non-finite parameters.
void validate(const TmstParams& params);

/// Modal basis tag for two-mode states.
enum class ModalBasis {
  SidebandPM,  ///< upper/lower sideband modes, ordering (q+, p+, q-, p-)
  SymAntisym,  ///< symmetric/antisymmetric combinations, ordering (qs, ps, qa, pa)
};

const char* to_string(ModalBasis basis);

/// Gaussian two-mode state: first-moment 4-vector, 4x4 covariance matrix and
/// the basis the quadratures refer to.
struct GaussianTwoModeState {
  Eigen::Vector4d first_moments = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cm = Eigen::Matrix4d::Identity();
  ModalBasis basis = ModalBasis::SidebandPM;
};

/// Default absolute tolerance on the physicality eigenvalue margin.
inline constexpr double kPhysicalityTol = 1e-8;

/// Relative tolerance for symmetry checks on covariance matrices.
inline constexpr double kSymmetryTol = 1e-12;

/// Symplectic form Omega = J (+) J with J = [[0,1],[-1,0]].
Eigen::Matrix4d symplectic_form();

/// Orthogonal symplectic matrix S mapping sideband quadratures to the
/// symmetric/antisymmetric ones: r' = S r with S = (1/sqrt2) [[I, I], [-J, J]].
Eigen::Matrix4d mode_mixing_matrix();

/// Ground-truth two-mode squeezed thermal state in the sideband basis.
/// cm = [[A I, C sz], [C sz, B I]] with
///   A = 1 + 2 Nsq (1+Nth) + 2 Rth Nth,
///   B = 1 + 2 Nsq (1+Nth) + 2 (1-Rth) Nth,
///   C = 2 (1+Nth) sqrt(Nsq (1+Nsq)),
/// first moments (sqrt2 Re a, sqrt2 Im a, sqrt2 Re a, sqrt2 Im a).
GaussianTwoModeState tmst_state(const TmstParams& params);

/// Basis change: SidebandPM -> SymAntisym uses cm' = S cm S^T, r' = S r;
/// the opposite direction uses the transposes. Round trip is the identity.
GaussianTwoModeState change_basis(const GaussianTwoModeState& state);

struct PhysicalityCheck {
  bool passes = false;
  double margin = 0.0;  ///< smallest eigenvalue of cm + i*Omega
};

/// Physicality condition cm + i*Omega >= 0. Rejects non-symmetric input.
PhysicalityCheck check_physicality(const Eigen::Matrix4d& cm, double tol = kPhysicalityTol);

/// Purity of a single-mode Gaussian block: 1/sqrt(det cm2). Requires a
/// positive-definite 2x2 matrix.
double purity(const Eigen::Matrix2d& cm2);

/// Noise reduction in dB: -10 log10 of the smaller eigenvalue of cm2.
/// Positive means squeezing below shot noise.
double noise_reduction_db(const Eigen::Matrix2d& cm2);

/// Symplectic eigenvalues (nu1 <= nu2): moduli of the eigenvalue pairs of
/// i*Omega*cm. Physical states have nu1 >= 1.
std::pair<double, double> symplectic_eigenvalues(const Eigen::Matrix4d& cm);

/// Minimum symplectic eigenvalue of the partially transposed CM, for a CM in
/// the SidebandPM basis with block form [[A, C], [C^T, B]]:
///   lambda~ = sqrt((Dt - sqrt(Dt^2 - 4 det cm)) / 2),
///   Dt = det A + det B - 2 det C.
/// lambda~ < 1 certifies entanglement.
double ppt_min_symplectic_eigenvalue(const Eigen::Matrix4d& cm_sideband);

/// Total fluctuation photons: (1/4) tr(cm) - 1. Basis independent; excludes
/// displacement energy.
double total_fluctuation_photons(const Eigen::Matrix4d& cm);

/// Sideband energies (N+, N-) of a two-mode squeezed thermal state:
///   N+ = Nsq (1+Nth) + Rth Nth,   N- = Nsq (1+Nth) + (1-Rth) Nth.
std::pair<double, double> sideband_energies(const TmstParams& params);

// Block accessors for a 4x4 two-mode CM.
inline Eigen::Matrix2d block_mode1(const Eigen::Matrix4d& cm) { return cm.block<2, 2>(0, 0); }
inline Eigen::Matrix2d block_mode2(const Eigen::Matrix4d& cm) { return cm.block<2, 2>(2, 2); }
inline Eigen::Matrix2d block_coupling(const Eigen::Matrix4d& cm) { return cm.block<2, 2>(0, 2); }

/// Max absolute asymmetry |cm - cm^T|, relative to max(1, |cm|_max).
double symmetry_defect(const Eigen::Matrix4d& cm);

}  // namespace sbt
