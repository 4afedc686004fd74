#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "sbt/reconstruction.hpp"
#include "support/test_helpers.hpp"

using namespace sbt;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

GaussianTwoModeState vacuum_sa() {
  GaussianTwoModeState st;
  st.basis = ModalBasis::SymAntisym;
  return st;
}

GaussianTwoModeState sa_state_of(const TmstParams& params) {
  return change_basis(tmst_state(params));
}

// Four-trace acquisition mirroring the dual-channel scheme.
TraceSet make_traces(const GaussianTwoModeState& state_sa, std::size_t n, std::uint64_t seed,
                     double visibility = 1.0) {
  TraceConfig cfg;
  cfg.n_samples = n;
  cfg.visibility = visibility;
  TraceSet ts;
  cfg.rng_seed = seed;
  std::tie(ts.trace_s, ts.trace_a) = synthesize_dual(state_sa, 0.0, cfg, "test");
  cfg.rng_seed = seed + 1;
  std::tie(ts.trace_minus, ts.trace_plus) = synthesize_dual(state_sa, -kPi / 4.0, cfg, "test");
  return ts;
}

HomodyneTrace deterministic_trace(std::size_t n, double (*fn)(double)) {
  HomodyneTrace trace;
  trace.psi = 0.0;
  trace.theta.resize(n);
  trace.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    trace.theta[i] = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    trace.x[i] = fn(trace.theta[i]);
  }
  return trace;
}

MomentEstimates analytic_moments(const GaussianTwoModeState& sa, bool antisym) {
  const int o = antisym ? 2 : 0;
  MomentEstimates m;
  m.mean_q = sa.first_moments(o);
  m.mean_p = sa.first_moments(o + 1);
  m.var_q = sa.cm(o, o);
  m.var_p = sa.cm(o + 1, o + 1);
  m.cov_qp = sa.cm(o, o + 1);
  return m;
}

}  // namespace

TEST_CASE("estimate_first_moments") {
  SECTION("noiseless 2 cos theta trace recovers (2, 0) exactly") {
    const HomodyneTrace trace = deterministic_trace(1024, [](double t) { return 2.0 * std::cos(t); });
    const FirstMoments fm = estimate_first_moments(trace);
    CHECK(fm.mean_q == Approx(2.0).margin(1e-12));
    CHECK(fm.mean_p == Approx(0.0).margin(1e-12));
    CHECK(fm.se_mean_q < 1e-10);
  }

  SECTION("vacuum Monte Carlo stays within four standard errors") {
    TraceConfig cfg;
    cfg.n_samples = 100000;
    cfg.visibility = 1.0;
    cfg.rng_seed = 814;
    const HomodyneTrace trace = synthesize_trace(vacuum_sa(), 0.0, cfg);
    const FirstMoments fm = estimate_first_moments(trace);
    CHECK(std::abs(fm.mean_q) < 4.0 * fm.se_mean_q);
    CHECK(std::abs(fm.mean_p) < 4.0 * fm.se_mean_p);
    // Known scaling for unit-variance samples: se = sqrt(2/n).
    CHECK(fm.se_mean_q == Approx(std::sqrt(2.0 / 100000.0)).epsilon(0.10));
  }

  SECTION("coherent alpha = 1 recovers (2, 0)") {
    TraceConfig cfg;
    cfg.n_samples = 100000;
    cfg.visibility = 1.0;
    cfg.rng_seed = 815;
    const HomodyneTrace trace =
        synthesize_trace(sa_state_of({{1.0, 0.0}, 0.0, 0.0, 0.5}), 0.0, cfg);
    const FirstMoments fm = estimate_first_moments(trace);
    CHECK(fm.mean_q == Approx(2.0).margin(4.0 * fm.se_mean_q));
    CHECK(fm.mean_p == Approx(0.0).margin(4.0 * fm.se_mean_p));
  }

  SECTION("degenerate coverage rejected") {
    HomodyneTrace stuck;
    stuck.theta.assign(100, 0.3);
    stuck.x.assign(100, 1.0);
    CHECK_THROWS_AS(estimate_first_moments(stuck), std::runtime_error);
    HomodyneTrace few = deterministic_trace(4, [](double t) { return std::cos(t); });
    CHECK_THROWS_AS(estimate_first_moments(few), std::runtime_error);
  }
}

TEST_CASE("estimate_second_moments, harmonic") {
  SECTION("vacuum") {
    TraceConfig cfg;
    cfg.n_samples = 100000;
    cfg.visibility = 1.0;
    cfg.rng_seed = 816;
    const HomodyneTrace trace = synthesize_trace(vacuum_sa(), 0.0, cfg);
    const FirstMoments fm = estimate_first_moments(trace);
    const MomentEstimates m = estimate_second_moments(trace, fm);
    CHECK(m.var_q == Approx(1.0).margin(4.0 * m.se_var_q));
    CHECK(m.var_p == Approx(1.0).margin(4.0 * m.se_var_p));
    CHECK(m.cov_qp == Approx(0.0).margin(4.0 * m.se_cov_qp));
    CHECK_FALSE(m.nonpositive_variance);
  }

  SECTION("squeezed calibration trace recovers (4.325, 0.500)") {
    GaussianTwoModeState st;
    st.basis = ModalBasis::SymAntisym;
    st.cm = Eigen::Matrix4d::Zero();
    st.cm(0, 0) = st.cm(2, 2) = 4.3252;
    st.cm(1, 1) = st.cm(3, 3) = 0.5000;
    TraceConfig cfg;
    cfg.n_samples = 100000;
    cfg.visibility = 1.0;
    cfg.rng_seed = 817;
    const HomodyneTrace trace = synthesize_trace(st, 0.0, cfg);
    const FirstMoments fm = estimate_first_moments(trace);
    const MomentEstimates m = estimate_second_moments(trace, fm);
    CHECK(m.var_q == Approx(4.3252).margin(4.0 * m.se_var_q));
    CHECK(m.var_p == Approx(0.5000).margin(4.0 * m.se_var_p));
  }

  SECTION("deterministic cos-theta trace flags the vanishing variance") {
    const HomodyneTrace trace = deterministic_trace(1024, [](double t) { return std::cos(t); });
    const FirstMoments fm = estimate_first_moments(trace);
    const MomentEstimates m = estimate_second_moments(trace, fm);
    CHECK(m.nonpositive_variance);
    CHECK(m.var_p == Approx(0.0).margin(1e-10));  // reported, not clamped
  }
}

TEST_CASE("harmonic and binned estimators agree on a rotated block") {
  // s-mode block rotated by pi/8 so cov_qp is nonzero.
  const double a = 4.3252, b = 0.5000, phi = kPi / 8.0;
  Eigen::Matrix2d rot;
  rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  Eigen::Matrix2d block = Eigen::Matrix2d::Zero();
  block(0, 0) = a;
  block(1, 1) = b;
  block = rot * block * rot.transpose();

  GaussianTwoModeState st;
  st.basis = ModalBasis::SymAntisym;
  st.cm = Eigen::Matrix4d::Identity();
  st.cm.block<2, 2>(0, 0) = block;

  TraceConfig cfg;
  cfg.n_samples = 200000;
  cfg.visibility = 1.0;
  cfg.rng_seed = 818;
  const HomodyneTrace trace = synthesize_trace(st, 0.0, cfg);
  const FirstMoments fm = estimate_first_moments(trace);
  const MomentEstimates harmonic = estimate_second_moments(trace, fm, EstimatorKind::Harmonic);
  const MomentEstimates binned = estimate_second_moments(trace, fm, EstimatorKind::Binned);

  CHECK(harmonic.var_q == Approx(block(0, 0)).margin(4.0 * harmonic.se_var_q));
  CHECK(harmonic.cov_qp == Approx(block(0, 1)).margin(4.0 * harmonic.se_cov_qp));
  const double se_var = std::hypot(harmonic.se_var_q, binned.se_var_q);
  const double se_cov = std::hypot(harmonic.se_cov_qp, binned.se_cov_qp);
  CHECK(harmonic.var_q == Approx(binned.var_q).margin(4.0 * se_var));
  CHECK(harmonic.cov_qp == Approx(binned.cov_qp).margin(4.0 * se_cov));

  SECTION("binned estimator needs populated bins") {
    HomodyneTrace stuck;
    stuck.theta.assign(5000, 1.0);  // away from every bin center
    stuck.x.assign(5000, 0.0);
    const FirstMoments none{};
    CHECK_THROWS_AS(estimate_second_moments(stuck, none, EstimatorKind::Binned),
                    std::runtime_error);
  }
}

TEST_CASE("estimate_epsilon") {
  SECTION("TMST ground truth has vanishing epsilon") {
    const TraceSet ts = make_traces(sa_state_of({{0, 0}, 0.320, 0.471, 0.5}), 100000, 901);
    const FirstMoments fs = estimate_first_moments(ts.trace_s);
    const FirstMoments fa = estimate_first_moments(ts.trace_a);
    const EpsilonEstimate eps = estimate_epsilon(ts.trace_plus, ts.trace_minus, fs, fa);
    CHECK(std::abs(eps.eps_q) < 4.0 * eps.se_eps_q);
    CHECK(std::abs(eps.eps_p) < 4.0 * eps.se_eps_p);
  }

  SECTION("injected eps_q = 0.3 is recovered") {
    GaussianTwoModeState st;
    st.basis = ModalBasis::SymAntisym;
    st.cm = 1.5 * Eigen::Matrix4d::Identity();
    st.cm(0, 2) = st.cm(2, 0) = 0.3;
    const TraceSet ts = make_traces(st, 100000, 902);
    const FirstMoments fs = estimate_first_moments(ts.trace_s);
    const FirstMoments fa = estimate_first_moments(ts.trace_a);
    const EpsilonEstimate eps = estimate_epsilon(ts.trace_plus, ts.trace_minus, fs, fa);
    CHECK(eps.eps_q == Approx(0.3).margin(4.0 * eps.se_eps_q));
    CHECK(eps.eps_p == Approx(0.0).margin(4.0 * eps.se_eps_p));
  }

  SECTION("coherent state: the mean-product subtraction is exercised") {
    const TraceSet ts = make_traces(sa_state_of({{1.0, 0.0}, 0.0, 0.0, 0.5}), 100000, 903);
    const FirstMoments fs = estimate_first_moments(ts.trace_s);
    const FirstMoments fa = estimate_first_moments(ts.trace_a);
    REQUIRE(fs.mean_q == Approx(2.0).margin(0.05));
    const EpsilonEstimate eps = estimate_epsilon(ts.trace_plus, ts.trace_minus, fs, fa);
    CHECK(std::abs(eps.eps_q) < 4.0 * eps.se_eps_q);
    CHECK(std::abs(eps.eps_p) < 4.0 * eps.se_eps_p);
  }
}

TEST_CASE("assemble_cm and n_total_from_cm") {
  SECTION("vacuum moments give the identity") {
    MomentEstimates vac;
    vac.var_q = vac.var_p = 1.0;
    const AssembledCm out = assemble_cm(vac, vac, {}, 0.0);
    CHECK((out.sigma_prime - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.r_prime.norm() == 0.0);
    CHECK(n_total_from_cm(out.sigma_prime) == 0.0);
  }

  SECTION("thermal-unbalanced assembly matches the basis-change ground truth") {
    MomentEstimates mode;
    mode.var_q = mode.var_p = 2.0;
    const AssembledCm out = assemble_cm(mode, mode, {}, 1.0);
    const GaussianTwoModeState truth = change_basis(tmst_state({{0, 0}, 0.0, 1.0, 1.0}));
    CHECK((out.sigma_prime - truth.cm).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(n_total_from_cm(out.sigma_prime) == Approx(1.0));
    CHECK(symmetry_defect(out.sigma_prime) == 0.0);
  }

  SECTION("squeezed calibration totals") {
    MomentEstimates mode;
    mode.var_q = 4.3252;
    mode.var_p = 0.5000;
    const AssembledCm out = assemble_cm(mode, mode, {}, 0.0);
    CHECK(n_total_from_cm(out.sigma_prime) == Approx(1.4126).margin(1e-12));
  }
}

TEST_CASE("transform_to_sidebands") {
  SECTION("identity and zero are fixed points") {
    const SidebandState out =
        transform_to_sidebands(Eigen::Matrix4d::Identity(), Eigen::Vector4d::Zero());
    CHECK((out.sigma_omega - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(out.r_omega.norm() == 0.0);
  }

  SECTION("assembled thermal-unbalanced state transforms back to diag(3,3,1,1)") {
    MomentEstimates mode;
    mode.var_q = mode.var_p = 2.0;
    const AssembledCm assembled = assemble_cm(mode, mode, {}, 1.0);
    const SidebandState out = transform_to_sidebands(assembled.sigma_prime, assembled.r_prime);
    Eigen::Matrix4d expected = Eigen::Matrix4d::Zero();
    expected.diagonal() << 3.0, 3.0, 1.0, 1.0;
    CHECK((out.sigma_omega - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("squeezed calibration transforms to A I blocks with C sigma_z coupling") {
    MomentEstimates mode;
    mode.var_q = 4.3252;
    mode.var_p = 0.5000;
    const AssembledCm assembled = assemble_cm(mode, mode, {}, 0.0);
    const SidebandState out = transform_to_sidebands(assembled.sigma_prime, assembled.r_prime);
    CHECK(out.sigma_omega(0, 0) == Approx(2.4126).margin(1e-12));
    CHECK(out.sigma_omega(1, 1) == Approx(2.4126).margin(1e-12));
    CHECK(out.sigma_omega(0, 2) == Approx(1.9126).margin(1e-12));
    CHECK(out.sigma_omega(1, 3) == Approx(-1.9126).margin(1e-12));
  }
}

TEST_CASE("pipeline consistency on analytic moments") {
  // Feeding exact moments through assemble + transform returns the ground
  // truth bit-for-bit (up to matrix-product rounding).
  std::mt19937_64 gen(71);
  for (int rep = 0; rep < 20; ++rep) {
    const TmstParams params = test::random_tmst(gen);
    const GaussianTwoModeState truth_pm = tmst_state(params);
    const GaussianTwoModeState truth_sa = change_basis(truth_pm);

    const MomentEstimates ms = analytic_moments(truth_sa, false);
    const MomentEstimates ma = analytic_moments(truth_sa, true);
    EpsilonEstimate eps;
    eps.eps_q = truth_sa.cm(0, 2);
    eps.eps_p = truth_sa.cm(1, 3);
    const double delta_n = truth_sa.cm(0, 3);

    const AssembledCm assembled = assemble_cm(ms, ma, eps, delta_n);
    CHECK((assembled.sigma_prime - truth_sa.cm).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((assembled.r_prime - truth_sa.first_moments).cwiseAbs().maxCoeff() < 1e-12);

    const SidebandState sideband =
        transform_to_sidebands(assembled.sigma_prime, assembled.r_prime);
    CHECK((sideband.sigma_omega - truth_pm.cm).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((sideband.r_omega - truth_pm.first_moments).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reconstruct, vacuum end to end") {
  const TraceSet ts = make_traces(vacuum_sa(), 100000, 911);
  const ReconstructedState rec = reconstruct(ts, {0.5, 0.5}, {EstimatorKind::Harmonic, 0});

  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      CHECK(rec.sigma_omega(i, j) ==
            Approx(expected).margin(5.0 * rec.sigma_omega_se(i, j) + 1e-6));
    }
    CHECK(std::abs(rec.r_prime(i)) < 5.0 * rec.r_prime_se(i));
  }
  CHECK(rec.metrics.lambda_tilde == Approx(1.0).margin(0.03));
  CHECK(rec.metrics.purity_s == Approx(1.0).margin(0.03));
  CHECK(rec.metrics.purity_a == Approx(1.0).margin(0.03));
  CHECK(rec.metrics.n_total == Approx(0.0).margin(0.02));
  CHECK(rec.metrics.delta_n == 0.0);
  CHECK(rec.physical);
  CHECK(rec.errors_from == "analytic");
}

TEST_CASE("reconstruct metric basis invariance") {
  const TraceSet ts = make_traces(sa_state_of({{0, 0}, 0.320, 0.471, 0.5}), 50000, 912);
  const ReconstructedState rec = reconstruct(ts, {0.5, 0.5}, {EstimatorKind::Harmonic, 0});

  // Same matrices, different basis: recomputing through change_basis agrees.
  GaussianTwoModeState sa;
  sa.cm = rec.sigma_prime;
  sa.first_moments = rec.r_prime;
  sa.basis = ModalBasis::SymAntisym;
  const GaussianTwoModeState pm = change_basis(sa);
  CHECK((pm.cm - rec.sigma_omega).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ppt_min_symplectic_eigenvalue(pm.cm) ==
        Approx(rec.metrics.lambda_tilde).margin(1e-12));
  CHECK(total_fluctuation_photons(rec.sigma_prime) ==
        Approx(total_fluctuation_photons(rec.sigma_omega)).margin(1e-12));
  const auto [n1, n2] = symplectic_eigenvalues(rec.sigma_prime);
  const auto [m1, m2] = symplectic_eigenvalues(rec.sigma_omega);
  CHECK(n1 == Approx(m1).margin(1e-10));
  CHECK(n2 == Approx(m2).margin(1e-10));
}

TEST_CASE("reconstruct, symmetric scenario: S and A blocks agree within errors") {
  // "The modes S and A represent the same local quantum state."
  const TraceSet ts = make_traces(sa_state_of({{0, 0}, 0.320, 0.471, 0.5}), 100000, 921);
  const ReconstructedState rec = reconstruct(ts, {0.5, 0.5}, {EstimatorKind::Harmonic, 0});
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double s_entry = rec.sigma_prime(i, j);
      const double a_entry = rec.sigma_prime(i + 2, j + 2);
      const double se = std::hypot(rec.sigma_prime_se(i, j), rec.sigma_prime_se(i + 2, j + 2));
      CHECK(std::abs(s_entry - a_entry) < 4.0 * se + 1e-12);
    }
  }
}

TEST_CASE("reconstruct with the binned estimator, end to end") {
  const GaussianTwoModeState truth_sa = sa_state_of({{0, 0}, 0.320, 0.471, 0.5});
  const TraceSet ts = make_traces(truth_sa, 200000, 922);
  const ReconstructedState rec = reconstruct(ts, {0.5, 0.5}, {EstimatorKind::Binned, 0});
  CHECK(rec.estimator == EstimatorKind::Binned);
  CHECK(rec.metrics.lambda_tilde == Approx(0.5004).margin(0.05));
  CHECK(rec.metrics.purity_s == Approx(0.6798).margin(0.05));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(rec.sigma_prime(i, j) ==
            Approx(truth_sa.cm(i, j)).margin(5.0 * rec.sigma_prime_se(i, j) + 1e-9));
    }
  }
}

TEST_CASE("reconstruct recovers the sideband unbalance through the PDH channel") {
  const TraceSet ts = make_traces(sa_state_of({{0, 0}, 0.0, 1.0, 1.0}), 100000, 913);
  const ReconstructedState rec = reconstruct(ts, {1.0, 0.0}, {EstimatorKind::Harmonic, 0});

  CHECK(rec.metrics.n_total == Approx(1.0).margin(4.0 * rec.metrics.se_n_total));
  CHECK(rec.delta_n == Approx(1.0).margin(4.0 * rec.metrics.se_delta_n));
  CHECK(rec.sigma_prime(0, 3) == Approx(1.0).margin(4.0 * rec.metrics.se_delta_n));
  // A - B = 2 dN in the sideband basis.
  const double a_minus_b = rec.sigma_omega(0, 0) - rec.sigma_omega(2, 2);
  const double se = std::hypot(rec.sigma_omega_se(0, 0), rec.sigma_omega_se(2, 2));
  CHECK(a_minus_b == Approx(2.0).margin(4.0 * se));
}

TEST_CASE("bootstrap_errors") {
  SECTION("vacuum variance error matches the fourth-moment oracle") {
    const std::size_t n = 10000;
    const TraceSet ts = make_traces(vacuum_sa(), n, 914);
    const BootstrapErrors boot = bootstrap_errors(ts, {0.5, 0.5}, 200, 7);

    // Pair-resampling bootstrap of the full-sweep harmonic variance
    // estimator converges to sqrt(8/n) at the vacuum; the fixed-ramp
    // sampling error is sqrt(6/n).
    const double boot_oracle = std::sqrt(8.0 / static_cast<double>(n));
    CHECK(boot.sigma_prime_se(0, 0) == Approx(boot_oracle).epsilon(0.30));
    CHECK(boot.sigma_prime_se(0, 0) / std::sqrt(2.0 / static_cast<double>(n)) > 1.0);
    CHECK(boot.sigma_prime_se(0, 0) / std::sqrt(2.0 / static_cast<double>(n)) < 2.6);

    std::vector<double> mc;
    for (int rep = 0; rep < 60; ++rep) {
      TraceConfig cfg;
      cfg.n_samples = n;
      cfg.visibility = 1.0;
      cfg.rng_seed = 5000 + rep;
      const HomodyneTrace trace = synthesize_trace(vacuum_sa(), 0.0, cfg);
      const FirstMoments fm = estimate_first_moments(trace);
      mc.push_back(estimate_second_moments(trace, fm).var_q);
    }
    const double mc_oracle = std::sqrt(6.0 / static_cast<double>(n));
    CHECK(test::sample_sd(mc) == Approx(mc_oracle).epsilon(0.35));
    CHECK(boot.sigma_prime_se(0, 0) / test::sample_sd(mc) > 0.7);
    CHECK(boot.sigma_prime_se(0, 0) / test::sample_sd(mc) < 1.8);
  }

  SECTION("errors shrink as 1/sqrt(n)") {
    const TraceSet small = make_traces(vacuum_sa(), 10000, 915);
    const TraceSet large = make_traces(vacuum_sa(), 40000, 916);
    const BootstrapErrors se_small = bootstrap_errors(small, {0.5, 0.5}, 150, 7);
    const BootstrapErrors se_large = bootstrap_errors(large, {0.5, 0.5}, 150, 7);
    const double ratio = se_small.sigma_prime_se(0, 0) / se_large.sigma_prime_se(0, 0);
    CHECK(ratio == Approx(2.0).margin(0.45));
  }

  SECTION("deterministic given the seed, resample floor enforced") {
    const TraceSet ts = make_traces(vacuum_sa(), 2000, 917);
    const BootstrapErrors a = bootstrap_errors(ts, {0.5, 0.5}, 120, 99);
    const BootstrapErrors b = bootstrap_errors(ts, {0.5, 0.5}, 120, 99);
    CHECK(a.sigma_prime_se == b.sigma_prime_se);
    CHECK(a.se_lambda_tilde == b.se_lambda_tilde);
    CHECK_THROWS_AS(bootstrap_errors(ts, {0.5, 0.5}, 50, 99), std::invalid_argument);
  }

  SECTION("lambda error at the published scale") {
    const GaussianTwoModeState st = sa_state_of({{0, 0}, 0.320, 0.471, 0.5});
    const TraceSet ts = make_traces(st, 100000, 918);
    const BootstrapErrors boot = bootstrap_errors(ts, {0.5, 0.5}, 150, 11);
    // Same order as the published +-0.02.
    CHECK(boot.se_lambda_tilde > 0.002);
    CHECK(boot.se_lambda_tilde < 0.05);

    std::vector<double> mc;
    for (int rep = 0; rep < 30; ++rep) {
      const TraceSet mc_ts = make_traces(st, 100000, 6000 + 3 * rep);
      mc.push_back(reconstruct(mc_ts, {0.5, 0.5}, {EstimatorKind::Harmonic, 0})
                       .metrics.lambda_tilde);
    }
    CHECK(boot.se_lambda_tilde / test::sample_sd(mc) > 0.55);
    CHECK(boot.se_lambda_tilde / test::sample_sd(mc) < 1.9);
  }
}

TEST_CASE("reconstruct attaches bootstrap errors when requested") {
  const TraceSet ts = make_traces(vacuum_sa(), 5000, 919);
  const ReconstructedState rec = reconstruct(ts, {0.5, 0.5}, {EstimatorKind::Harmonic, 120, 3});
  CHECK(rec.errors_from == "bootstrap");
  CHECK(std::isfinite(rec.metrics.se_lambda_tilde));
  CHECK(rec.metrics.se_lambda_tilde > 0.0);
  CHECK(rec.sigma_prime_se(0, 0) > 0.0);
}

TEST_CASE("TraceSet validation") {
  TraceSet ts = make_traces(vacuum_sa(), 64, 920);

  SECTION("accepts the canonical set") { CHECK_NOTHROW(validate(ts)); }

  SECTION("wrong mixer phase rejected") {
    ts.trace_s.psi = 0.3;
    CHECK_THROWS_AS(validate(ts), std::invalid_argument);
  }

  SECTION("inconsistent scenario ids rejected") {
    ts.trace_a.meta.scenario = "other";
    CHECK_THROWS_AS(validate(ts), std::invalid_argument);
  }

  SECTION("estimator names round-trip") {
    CHECK(estimator_from_string("harmonic") == EstimatorKind::Harmonic);
    CHECK(estimator_from_string("binned") == EstimatorKind::Binned);
    CHECK_THROWS_AS(estimator_from_string("fancy"), std::invalid_argument);
  }
}
