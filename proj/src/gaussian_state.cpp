#include "sbt/gaussian_state.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sbt {

namespace {

const Eigen::Matrix2d kJ = (Eigen::Matrix2d() << 0.0, 1.0, -1.0, 0.0).finished();
const Eigen::Matrix2d kSigmaZ = (Eigen::Matrix2d() << 1.0, 0.0, 0.0, -1.0).finished();

void require_symmetric(const Eigen::Matrix4d& cm, const char* who) {
  if (symmetry_defect(cm) > kSymmetryTol) {
    std::ostringstream msg;
    msg << who << ": covariance matrix is not symmetric (defect "
        << symmetry_defect(cm) << ")";
    throw std::invalid_argument(msg.str());
  }
}

void require_positive_definite(const Eigen::Matrix4d& cm, const char* who) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(cm);
  if (solver.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument(std::string(who) + ": covariance matrix is not positive definite");
  }
}

}  // namespace

void validate(const TmstParams& params) {
  if (!std::isfinite(params.alpha.real()) || !std::isfinite(params.alpha.imag())) {
    throw std::invalid_argument("TmstParams: alpha must be finite");
  }
  if (!(params.n_sq >= 0.0) || !std::isfinite(params.n_sq)) {
    throw std::invalid_argument("TmstParams: n_sq must be >= 0");
  }
  if (!(params.n_th >= 0.0) || !std::isfinite(params.n_th)) {
    throw std::invalid_argument("TmstParams: n_th must be >= 0");
  }
  if (!(params.r_th >= 0.0 && params.r_th <= 1.0)) {
    throw std::invalid_argument("TmstParams: r_th must lie in [0, 1]");
  }
}

const char* to_string(ModalBasis basis) {
  return basis == ModalBasis::SidebandPM ? "sideband_pm" : "sym_antisym";
}

double symmetry_defect(const Eigen::Matrix4d& cm) {
  const double scale = std::max(1.0, cm.cwiseAbs().maxCoeff());
  return (cm - cm.transpose()).cwiseAbs().maxCoeff() / scale;
}

Eigen::Matrix4d symplectic_form() {
  Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
  omega.block<2, 2>(0, 0) = kJ;
  omega.block<2, 2>(2, 2) = kJ;
  return omega;
}

Eigen::Matrix4d mode_mixing_matrix() {
  Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
  const Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
  s.block<2, 2>(0, 0) = eye;
  s.block<2, 2>(0, 2) = eye;
  s.block<2, 2>(2, 0) = -kJ;
  s.block<2, 2>(2, 2) = kJ;
  return s / std::sqrt(2.0);
}

GaussianTwoModeState tmst_state(const TmstParams& params) {
  validate(params);
  const double n_sq = params.n_sq;
  const double n_th = params.n_th;
  const double r_th = params.r_th;

  const double a = 1.0 + 2.0 * n_sq * (1.0 + n_th) + 2.0 * r_th * n_th;
  const double b = 1.0 + 2.0 * n_sq * (1.0 + n_th) + 2.0 * (1.0 - r_th) * n_th;
  const double c = 2.0 * (1.0 + n_th) * std::sqrt(n_sq * (1.0 + n_sq));

  GaussianTwoModeState state;
  state.basis = ModalBasis::SidebandPM;
  state.cm = Eigen::Matrix4d::Zero();
  state.cm.block<2, 2>(0, 0) = a * Eigen::Matrix2d::Identity();
  state.cm.block<2, 2>(2, 2) = b * Eigen::Matrix2d::Identity();
  state.cm.block<2, 2>(0, 2) = c * kSigmaZ;
  state.cm.block<2, 2>(2, 0) = c * kSigmaZ;

  const double qc = std::sqrt(2.0) * params.alpha.real();
  const double pc = std::sqrt(2.0) * params.alpha.imag();
  state.first_moments << qc, pc, qc, pc;
  return state;
}

GaussianTwoModeState change_basis(const GaussianTwoModeState& state) {
  const Eigen::Matrix4d s = mode_mixing_matrix();
  GaussianTwoModeState out;
  if (state.basis == ModalBasis::SidebandPM) {
    out.cm = s * state.cm * s.transpose();
    out.first_moments = s * state.first_moments;
    out.basis = ModalBasis::SymAntisym;
  } else {
    out.cm = s.transpose() * state.cm * s;
    out.first_moments = s.transpose() * state.first_moments;
    out.basis = ModalBasis::SidebandPM;
  }
  return out;
}

PhysicalityCheck check_physicality(const Eigen::Matrix4d& cm, double tol) {
  require_symmetric(cm, "check_physicality");
  Eigen::Matrix4cd h = cm.cast<std::complex<double>>();
  h += std::complex<double>(0.0, 1.0) * symplectic_form().cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(h);
  PhysicalityCheck check;
  check.margin = solver.eigenvalues().minCoeff();
  check.passes = check.margin >= -tol;
  return check;
}

double purity(const Eigen::Matrix2d& cm2) {
  const double det = cm2.determinant();
  if (!(det > 0.0) || !(cm2(0, 0) > 0.0)) {
    throw std::invalid_argument("purity: 2x2 covariance block must be positive definite");
  }
  return 1.0 / std::sqrt(det);
}

double noise_reduction_db(const Eigen::Matrix2d& cm2) {
  const double det = cm2.determinant();
  if (!(det > 0.0) || !(cm2(0, 0) > 0.0)) {
    throw std::invalid_argument("noise_reduction_db: 2x2 covariance block must be positive definite");
  }
  // Closed-form smaller eigenvalue of a symmetric 2x2.
  const double mid = 0.5 * (cm2(0, 0) + cm2(1, 1));
  const double off = 0.5 * (cm2(0, 1) + cm2(1, 0));
  const double rad = std::hypot(0.5 * (cm2(0, 0) - cm2(1, 1)), off);
  const double lam_min = mid - rad;
  return -10.0 * std::log10(lam_min);
}

std::pair<double, double> symplectic_eigenvalues(const Eigen::Matrix4d& cm) {
  require_symmetric(cm, "symplectic_eigenvalues");
  require_positive_definite(cm, "symplectic_eigenvalues");
  // Eigenvalues of Omega*cm come in +-i*nu pairs; take moduli and collapse.
  Eigen::EigenSolver<Eigen::Matrix4d> solver(symplectic_form() * cm, false);
  Eigen::Vector4d mods = solver.eigenvalues().cwiseAbs();
  std::sort(mods.data(), mods.data() + 4);
  return {0.5 * (mods(0) + mods(1)), 0.5 * (mods(2) + mods(3))};
}

double ppt_min_symplectic_eigenvalue(const Eigen::Matrix4d& cm_sideband) {
  require_symmetric(cm_sideband, "ppt_min_symplectic_eigenvalue");
  require_positive_definite(cm_sideband, "ppt_min_symplectic_eigenvalue");
  const double det_a = block_mode1(cm_sideband).determinant();
  const double det_b = block_mode2(cm_sideband).determinant();
  const double det_c = block_coupling(cm_sideband).determinant();
  const double det_cm = cm_sideband.determinant();

  const double delta_pt = det_a + det_b - 2.0 * det_c;
  const double scale = std::max(1.0, delta_pt * delta_pt);
  double disc = delta_pt * delta_pt - 4.0 * det_cm;
  if (disc < -1e-9 * scale) {
    throw std::invalid_argument(
        "ppt_min_symplectic_eigenvalue: negative discriminant, input is not a physical CM");
  }
  disc = std::max(disc, 0.0);
  double lam_sq = 0.5 * (delta_pt - std::sqrt(disc));
  if (lam_sq < -1e-9 * std::max(1.0, std::abs(delta_pt))) {
    throw std::invalid_argument(
        "ppt_min_symplectic_eigenvalue: negative eigenvalue, input is not a physical CM");
  }
  return std::sqrt(std::max(lam_sq, 0.0));
}

double total_fluctuation_photons(const Eigen::Matrix4d& cm) {
  return 0.25 * cm.trace() - 1.0;
}

std::pair<double, double> sideband_energies(const TmstParams& params) {
  validate(params);
  const double common = params.n_sq * (1.0 + params.n_th);
  return {common + params.r_th * params.n_th,
          common + (1.0 - params.r_th) * params.n_th};
}

}  // namespace sbt
