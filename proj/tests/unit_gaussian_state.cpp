#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "sbt/gaussian_state.hpp"
#include "support/test_helpers.hpp"

using namespace sbt;
using Catch::Approx;

namespace {

// Plain-loop matrix products, independent of the Eigen path under test.
Eigen::Matrix4d hand_sandwich(const Eigen::Matrix4d& s, const Eigen::Matrix4d& m) {
  Eigen::Matrix4d sm = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) sm(i, j) += s(i, k) * m(k, j);
  Eigen::Matrix4d out = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) out(i, j) += sm(i, k) * s(j, k);
  return out;
}

}  // namespace

TEST_CASE("tmst_state ground-truth covariance blocks") {
  SECTION("vacuum") {
    const GaussianTwoModeState vac = tmst_state({{0, 0}, 0.0, 0.0, 0.5});
    CHECK(vac.first_moments.norm() == 0.0);
    CHECK((vac.cm - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(vac.basis == ModalBasis::SidebandPM);
  }

  SECTION("one squeezed photon: A = B = 3, C = 2 sqrt 2") {
    const GaussianTwoModeState st = tmst_state({{0, 0}, 1.0, 0.0, 0.5});
    CHECK(st.cm(0, 0) == Approx(3.0).margin(1e-14));
    CHECK(st.cm(2, 2) == Approx(3.0).margin(1e-14));
    CHECK(st.cm(0, 2) == Approx(2.0 * std::sqrt(2.0)).margin(1e-14));
    CHECK(st.cm(1, 3) == Approx(-2.0 * std::sqrt(2.0)).margin(1e-14));
    CHECK(st.cm(0, 1) == 0.0);
  }

  SECTION("thermal (x) vacuum: A=3, B=1, C=0, dN = 1") {
    const GaussianTwoModeState st = tmst_state({{0, 0}, 0.0, 1.0, 1.0});
    CHECK(st.cm(0, 0) == Approx(3.0));
    CHECK(st.cm(1, 1) == Approx(3.0));
    CHECK(st.cm(2, 2) == Approx(1.0));
    CHECK(st.cm(3, 3) == Approx(1.0));
    CHECK(st.cm.block<2, 2>(0, 2).cwiseAbs().maxCoeff() == 0.0);
    const auto [np, nm] = sideband_energies({{0, 0}, 0.0, 1.0, 1.0});
    CHECK(np - nm == Approx(1.0));
  }

  SECTION("displacement convention R = sqrt2 (Re a, Im a) per mode") {
    const GaussianTwoModeState st = tmst_state({{1.0, -0.5}, 0.0, 0.0, 0.5});
    const double s2 = std::sqrt(2.0);
    CHECK(st.first_moments(0) == Approx(s2));
    CHECK(st.first_moments(1) == Approx(-0.5 * s2));
    CHECK(st.first_moments(2) == Approx(s2));
    CHECK(st.first_moments(3) == Approx(-0.5 * s2));
  }

  SECTION("parameter validation") {
    CHECK_THROWS_AS(tmst_state({{0, 0}, -0.1, 0.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(tmst_state({{0, 0}, 0.0, -1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(tmst_state({{0, 0}, 0.0, 0.0, 1.2}), std::invalid_argument);
    CHECK_THROWS_AS(tmst_state({{0, 0}, 0.0, 0.0, -0.2}), std::invalid_argument);
  }
}

TEST_CASE("mode mixing matrix") {
  const Eigen::Matrix4d s = mode_mixing_matrix();
  const double inv_s2 = 1.0 / std::sqrt(2.0);

  SECTION("first row selects (q+ + q-)/sqrt2") {
    CHECK(s(0, 0) == Approx(inv_s2));
    CHECK(s(0, 1) == 0.0);
    CHECK(s(0, 2) == Approx(inv_s2));
    CHECK(s(0, 3) == 0.0);
  }

  SECTION("orthogonal and symplectic") {
    CHECK((s.transpose() * s - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-14);
    const Eigen::Matrix4d omega = symplectic_form();
    CHECK((s.transpose() * omega * s - omega).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("action on quadratures matches the sum/difference combinations") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::Vector4d r(uni(gen), uni(gen), uni(gen), uni(gen));  // (q+, p+, q-, p-)
      const Eigen::Vector4d rp = s * r;
      CHECK(rp(0) == Approx((r(0) + r(2)) * inv_s2).margin(1e-14));  // q_s
      CHECK(rp(1) == Approx((r(1) + r(3)) * inv_s2).margin(1e-14));  // p_s
      CHECK(rp(2) == Approx((r(3) - r(1)) * inv_s2).margin(1e-14));  // q_a
      CHECK(rp(3) == Approx((r(0) - r(2)) * inv_s2).margin(1e-14));  // p_a
    }
  }

  SECTION("symplectic form sanity") {
    const Eigen::Matrix4d omega = symplectic_form();
    CHECK((omega.transpose() + omega).cwiseAbs().maxCoeff() == 0.0);
    CHECK((omega * omega + Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("change_basis") {
  SECTION("vacuum is a fixed point both ways") {
    GaussianTwoModeState vac;
    vac.basis = ModalBasis::SidebandPM;
    const GaussianTwoModeState sa = change_basis(vac);
    CHECK(sa.basis == ModalBasis::SymAntisym);
    CHECK((sa.cm - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-15);
    const GaussianTwoModeState back = change_basis(sa);
    CHECK(back.basis == ModalBasis::SidebandPM);
    CHECK((back.cm - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  }

  SECTION("thermal-unbalanced: measured CM gets the dN off block") {
    const GaussianTwoModeState st = tmst_state({{0, 0}, 0.0, 1.0, 1.0});
    const GaussianTwoModeState sa = change_basis(st);
    // Independent oracle: plain-loop S cm S^T.
    const Eigen::Matrix4d oracle = hand_sandwich(mode_mixing_matrix(), st.cm);
    CHECK((sa.cm - oracle).cwiseAbs().maxCoeff() < 1e-13);
    // Expected block structure: diagonal blocks 2I, off-block [[0,1],[-1,0]].
    Eigen::Matrix4d expected = 2.0 * Eigen::Matrix4d::Identity();
    expected(0, 3) = expected(3, 0) = 1.0;
    expected(1, 2) = expected(2, 1) = -1.0;
    CHECK((sa.cm - expected).cwiseAbs().maxCoeff() < 1e-13);
  }

  SECTION("symmetric squeezed state: diagonal blocks (A+C, A-C), zero off blocks") {
    const TmstParams params{{0, 0}, 0.5, 0.8, 0.5};
    const GaussianTwoModeState st = tmst_state(params);
    const double a = st.cm(0, 0);
    const double c = st.cm(0, 2);
    const GaussianTwoModeState sa = change_basis(st);
    CHECK(sa.cm(0, 0) == Approx(a + c).margin(1e-12));
    CHECK(sa.cm(1, 1) == Approx(a - c).margin(1e-12));
    CHECK(sa.cm(2, 2) == Approx(a + c).margin(1e-12));
    CHECK(sa.cm(3, 3) == Approx(a - c).margin(1e-12));
    CHECK(sa.cm.block<2, 2>(0, 2).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("round trip is the identity on random physical states") {
    std::mt19937_64 gen(13);
    for (int rep = 0; rep < 50; ++rep) {
      const GaussianTwoModeState st = tmst_state(test::random_tmst(gen));
      const GaussianTwoModeState back = change_basis(change_basis(st));
      CHECK((back.cm - st.cm).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((back.first_moments - st.first_moments).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(back.basis == st.basis);
    }
  }

  SECTION("trace and symplectic eigenvalues preserved") {
    std::mt19937_64 gen(17);
    for (int rep = 0; rep < 25; ++rep) {
      const GaussianTwoModeState st = tmst_state(test::random_tmst(gen));
      const GaussianTwoModeState sa = change_basis(st);
      CHECK(sa.cm.trace() == Approx(st.cm.trace()).margin(1e-10));
      const auto [n1, n2] = symplectic_eigenvalues(st.cm);
      const auto [m1, m2] = symplectic_eigenvalues(sa.cm);
      CHECK(m1 == Approx(n1).margin(1e-10));
      CHECK(m2 == Approx(n2).margin(1e-10));
    }
  }

  SECTION("delta entries equal the sideband unbalance, epsilon vanishes") {
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 40; ++rep) {
      const TmstParams params = test::random_tmst(gen);
      const GaussianTwoModeState sa = change_basis(tmst_state(params));
      const auto [np, nm] = sideband_energies(params);
      CHECK(sa.cm(0, 3) == Approx(np - nm).margin(1e-10));
      CHECK(sa.cm(1, 2) == Approx(-(np - nm)).margin(1e-10));
      CHECK(std::abs(sa.cm(0, 2)) < 1e-10);
      CHECK(std::abs(sa.cm(1, 3)) < 1e-10);
    }
  }
}

TEST_CASE("check_physicality") {
  SECTION("vacuum is exactly marginal") {
    const auto check = check_physicality(Eigen::Matrix4d::Identity());
    CHECK(check.margin == Approx(0.0).margin(1e-12));
    CHECK(check.passes);
  }

  SECTION("half shot noise fails with margin -0.5") {
    const auto check = check_physicality(0.5 * Eigen::Matrix4d::Identity());
    CHECK(check.margin == Approx(-0.5).margin(1e-12));
    CHECK_FALSE(check.passes);
  }

  SECTION("squeezed calibration state passes") {
    Eigen::Matrix4d cm = Eigen::Matrix4d::Zero();
    const double a = 2.4126, c = 1.9126;
    cm.block<2, 2>(0, 0) = a * Eigen::Matrix2d::Identity();
    cm.block<2, 2>(2, 2) = a * Eigen::Matrix2d::Identity();
    cm(0, 2) = cm(2, 0) = c;
    cm(1, 3) = cm(3, 1) = -c;
    CHECK(check_physicality(cm).passes);
  }

  SECTION("non-symmetric input rejected") {
    Eigen::Matrix4d cm = Eigen::Matrix4d::Identity();
    cm(0, 1) = 0.3;
    CHECK_THROWS_AS(check_physicality(cm), std::invalid_argument);
  }

  SECTION("margin >= -1e-9 over the TMST parameter grid") {
    for (double n_sq : {0.0, 0.5, 2.0, 5.0}) {
      for (double n_th : {0.0, 0.5, 2.0, 5.0}) {
        for (double r_th : {0.0, 0.25, 0.5, 0.75, 1.0}) {
          const GaussianTwoModeState st = tmst_state({{0.3, 0.1}, n_sq, n_th, r_th});
          CHECK(check_physicality(st.cm, 1e-9).passes);
          CHECK(check_physicality(change_basis(st).cm, 1e-9).passes);
        }
      }
    }
  }
}

TEST_CASE("purity") {
  CHECK(purity(Eigen::Matrix2d::Identity()) == Approx(1.0));
  // Thermal with N = 0.5: cm = (1 + 2N) I, purity 1/(1 + 2N).
  CHECK(purity(2.0 * Eigen::Matrix2d::Identity()) == Approx(0.5));
  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(purity(bad), std::invalid_argument);
}

TEST_CASE("noise_reduction_db") {
  CHECK(noise_reduction_db(Eigen::Matrix2d::Identity()) == Approx(0.0).margin(1e-14));
  Eigen::Matrix2d cm2 = Eigen::Matrix2d::Zero();
  cm2(0, 0) = 2.0;
  cm2(1, 1) = 0.5;
  CHECK(noise_reduction_db(cm2) == Approx(10.0 * std::log10(2.0)).margin(1e-12));
  CHECK(noise_reduction_db(cm2) == Approx(3.0103).margin(5e-5));
  Eigen::Matrix2d bad = Eigen::Matrix2d::Zero();
  bad(0, 0) = 1.0;
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(noise_reduction_db(bad), std::invalid_argument);
  // The smaller eigenvalue is rotation invariant.
  Eigen::Matrix2d rot;
  const double phi = 0.7;
  rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  CHECK(noise_reduction_db(rot * cm2 * rot.transpose()) ==
        Approx(noise_reduction_db(cm2)).margin(1e-12));
}

TEST_CASE("symplectic_eigenvalues") {
  SECTION("vacuum") {
    const auto [n1, n2] = symplectic_eigenvalues(Eigen::Matrix4d::Identity());
    CHECK(n1 == Approx(1.0).margin(1e-12));
    CHECK(n2 == Approx(1.0).margin(1e-12));
  }

  SECTION("pure two-mode squeezed vacuum has unit spectrum") {
    const auto [n1, n2] = symplectic_eigenvalues(tmst_state({{0, 0}, 1.0, 0.0, 0.5}).cm);
    CHECK(n1 == Approx(1.0).margin(1e-10));
    CHECK(n2 == Approx(1.0).margin(1e-10));
  }

  SECTION("thermal (x) vacuum gives (1, 3)") {
    const auto [n1, n2] = symplectic_eigenvalues(tmst_state({{0, 0}, 0.0, 1.0, 1.0}).cm);
    CHECK(n1 == Approx(1.0).margin(1e-10));
    CHECK(n2 == Approx(3.0).margin(1e-10));
  }

  SECTION("TMST spectrum equals the thermal-input spectrum (squeezing is symplectic)") {
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 30; ++rep) {
      const TmstParams params = test::random_tmst(gen);
      const double n1 = params.r_th * params.n_th;
      const double n2 = (1.0 - params.r_th) * params.n_th;
      const double lo = 1.0 + 2.0 * std::min(n1, n2);
      const double hi = 1.0 + 2.0 * std::max(n1, n2);
      const auto [s1, s2] = symplectic_eigenvalues(tmst_state(params).cm);
      CHECK(s1 == Approx(lo).margin(1e-9));
      CHECK(s2 == Approx(hi).margin(1e-9));
    }
  }

  SECTION("rejects indefinite input") {
    CHECK_THROWS_AS(symplectic_eigenvalues(-Eigen::Matrix4d::Identity()), std::invalid_argument);
  }
}

TEST_CASE("ppt_min_symplectic_eigenvalue") {
  SECTION("vacuum sits on the separability boundary") {
    CHECK(ppt_min_symplectic_eigenvalue(Eigen::Matrix4d::Identity()) == Approx(1.0).margin(1e-12));
  }

  SECTION("closed form for A = B = 3, C = 2 sqrt 2") {
    const GaussianTwoModeState st = tmst_state({{0, 0}, 1.0, 0.0, 0.5});
    // Dt = 34, det = 1, lambda~ = 3 - 2 sqrt2 = exp(-2 arcsinh 1).
    const double expected = std::exp(-2.0 * std::asinh(1.0));
    CHECK(ppt_min_symplectic_eigenvalue(st.cm) == Approx(expected).margin(1e-10));
    CHECK(ppt_min_symplectic_eigenvalue(st.cm) ==
          Approx(3.0 - 2.0 * std::sqrt(2.0)).margin(1e-10));
    CHECK(ppt_min_symplectic_eigenvalue(st.cm) == Approx(0.1716).margin(5e-5));
  }

  SECTION("squeezed calibration state: lambda~ = A - C") {
    const GaussianTwoModeState st = tmst_state({{0, 0}, 0.320, 0.471, 0.5});
    const double a = st.cm(0, 0), c = st.cm(0, 2);
    CHECK(ppt_min_symplectic_eigenvalue(st.cm) == Approx(a - c).margin(1e-10));
    CHECK(ppt_min_symplectic_eigenvalue(st.cm) == Approx(0.50).margin(5e-3));
  }

  SECTION("separable products stay at or above 1") {
    std::mt19937_64 gen(41);
    for (int rep = 0; rep < 40; ++rep) {
      Eigen::Matrix4d cm = Eigen::Matrix4d::Zero();
      cm.block<2, 2>(0, 0) = test::random_single_mode_cm(gen);
      cm.block<2, 2>(2, 2) = test::random_single_mode_cm(gen);
      CHECK(ppt_min_symplectic_eigenvalue(cm) >= 1.0 - 1e-9);
    }
  }
}

TEST_CASE("total_fluctuation_photons") {
  CHECK(total_fluctuation_photons(Eigen::Matrix4d::Identity()) == 0.0);
  CHECK(total_fluctuation_photons(tmst_state({{0, 0}, 1.0, 0.0, 0.5}).cm) == Approx(2.0));
  CHECK(total_fluctuation_photons(tmst_state({{0, 0}, 0.0, 1.0, 1.0}).cm) == Approx(1.0));

  SECTION("matches the sideband energy sum for random parameters") {
    std::mt19937_64 gen(47);
    for (int rep = 0; rep < 40; ++rep) {
      const TmstParams params = test::random_tmst(gen);
      const auto [np, nm] = sideband_energies(params);
      CHECK(total_fluctuation_photons(tmst_state(params).cm) == Approx(np + nm).margin(1e-10));
      // Basis independent.
      CHECK(total_fluctuation_photons(change_basis(tmst_state(params)).cm) ==
            Approx(np + nm).margin(1e-10));
    }
  }
}

TEST_CASE("sideband_energies") {
  SECTION("vacuum") {
    const auto [np, nm] = sideband_energies({{0, 0}, 0.0, 0.0, 0.5});
    CHECK(np == 0.0);
    CHECK(nm == 0.0);
  }

  SECTION("single thermal photon in the upper sideband") {
    const auto [np, nm] = sideband_energies({{0, 0}, 0.0, 1.0, 1.0});
    CHECK(np == Approx(1.0));
    CHECK(nm == Approx(0.0).margin(1e-15));
  }

  SECTION("squeezed calibration parameters") {
    // Independent route: the sideband energy is (A - 1)/2 of the CM diagonal.
    const TmstParams params{{0, 0}, 0.320, 0.471, 0.5};
    const GaussianTwoModeState st = tmst_state(params);
    const auto [np, nm] = sideband_energies(params);
    CHECK(np == Approx(0.5 * (st.cm(0, 0) - 1.0)).margin(1e-12));
    CHECK(nm == Approx(0.5 * (st.cm(2, 2) - 1.0)).margin(1e-12));
    CHECK(np == Approx(0.70622).margin(1e-5));
    CHECK(nm == Approx(0.70622).margin(1e-5));
  }

  SECTION("sum and difference identities") {
    std::mt19937_64 gen(53);
    for (int rep = 0; rep < 30; ++rep) {
      const TmstParams params = test::random_tmst(gen);
      const auto [np, nm] = sideband_energies(params);
      CHECK(np + nm ==
            Approx(2.0 * params.n_sq + params.n_th * (1.0 + 2.0 * params.n_sq)).margin(1e-12));
      CHECK(np - nm == Approx(params.n_th * (2.0 * params.r_th - 1.0)).margin(1e-12));
    }
  }
}
