#include "sbt/reconstruction.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "sbt/parallel.hpp"
#include "sbt/rng.hpp"

namespace sbt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double wrap_distance(double theta, double center) {
  double d = std::abs(theta - center);
  d = std::fmod(d, 2.0 * kPi);
  return std::min(d, 2.0 * kPi - d);
}

// ---------------------------------------------------------------------------
// Harmonic least-squares cores. The first-moment fit regresses x on
// {cos t, sin t}; the second-moment fit regresses x^2 on {1, cos 2t, sin 2t}.
// On the default uniform ramp these reduce to the plain projections
// 2 avg(x cos t) etc.; the least-squares form stays unbiased for any
// non-degenerate phase list. Standard errors use the heteroscedasticity-
// robust sandwich.
// ---------------------------------------------------------------------------

struct TrigCols {
  std::vector<double> c1, s1, c2, s2;
};

TrigCols make_cols(const std::vector<double>& theta) {
  TrigCols cols;
  const std::size_t n = theta.size();
  cols.c1.resize(n);
  cols.s1.resize(n);
  cols.c2.resize(n);
  cols.s2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    cols.c1[i] = c;
    cols.s1[i] = s;
    cols.c2[i] = c * c - s * s;
    cols.s2[i] = 2.0 * s * c;
  }
  return cols;
}

struct TraceCache {
  const std::vector<double>* theta = nullptr;
  const std::vector<double>* x = nullptr;
  TrigCols cols;
};

TraceCache make_cache(const HomodyneTrace& trace) {
  TraceCache cache;
  cache.theta = &trace.theta;
  cache.x = &trace.x;
  cache.cols = make_cols(trace.theta);
  return cache;
}

[[noreturn]] void coverage_error(const char* who) {
  throw std::runtime_error(std::string(who) +
                           ": degenerate LO phase coverage, cannot separate quadratures");
}

struct Fit1 {
  double mq = 0.0, mp = 0.0;
  double var_mq = 0.0, var_mp = 0.0;
};

Fit1 fit_first(const TraceCache& t, const std::vector<std::size_t>* idx, bool want_se) {
  const std::size_t n = idx ? idx->size() : t.x->size();
  if (n < 8) coverage_error("estimate_first_moments");
  const auto& c1 = t.cols.c1;
  const auto& s1 = t.cols.s1;
  const auto& x = *t.x;

  double gcc = 0.0, gcs = 0.0, gss = 0.0, bc = 0.0, bs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = idx ? (*idx)[k] : k;
    gcc += c1[i] * c1[i];
    gcs += c1[i] * s1[i];
    gss += s1[i] * s1[i];
    bc += x[i] * c1[i];
    bs += x[i] * s1[i];
  }
  const double det = gcc * gss - gcs * gcs;
  const double nn = static_cast<double>(n);
  if (!(det / (nn * nn) > 1e-6)) coverage_error("estimate_first_moments");

  Fit1 fit;
  fit.mq = (gss * bc - gcs * bs) / det;
  fit.mp = (gcc * bs - gcs * bc) / det;

  if (want_se) {
    // Sandwich: G^-1 (sum g g^T r^2) G^-1.
    double mcc = 0.0, mcs = 0.0, mss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = idx ? (*idx)[k] : k;
      const double r = x[i] - fit.mq * c1[i] - fit.mp * s1[i];
      const double r2 = r * r;
      mcc += c1[i] * c1[i] * r2;
      mcs += c1[i] * s1[i] * r2;
      mss += s1[i] * s1[i] * r2;
    }
    const double i00 = gss / det, i01 = -gcs / det, i11 = gcc / det;
    fit.var_mq = i00 * (i00 * mcc + i01 * mcs) + i01 * (i00 * mcs + i01 * mss);
    fit.var_mp = i01 * (i01 * mcc + i11 * mcs) + i11 * (i01 * mcs + i11 * mss);
  }
  return fit;
}

struct Fit2 {
  // Coefficients of E[x^2 | t] = c0 + c1 cos 2t + c2 sin 2t.
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
};

Fit2 fit_second(const TraceCache& t, const std::vector<std::size_t>* idx, bool want_se) {
  const std::size_t n = idx ? idx->size() : t.x->size();
  if (n < 8) coverage_error("estimate_second_moments");
  const auto& c2col = t.cols.c2;
  const auto& s2col = t.cols.s2;
  const auto& x = *t.x;

  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = idx ? (*idx)[k] : k;
    const double y = x[i] * x[i];
    const Eigen::Vector3d g(1.0, c2col[i], s2col[i]);
    gram += g * g.transpose();
    rhs += g * y;
  }
  const double nn = static_cast<double>(n);
  if (!(gram.determinant() / (nn * nn * nn) > 1e-6)) coverage_error("estimate_second_moments");

  const Eigen::Matrix3d gram_inv = gram.inverse();
  const Eigen::Vector3d beta = gram_inv * rhs;

  Fit2 fit;
  fit.c0 = beta(0);
  fit.c1 = beta(1);
  fit.c2 = beta(2);

  if (want_se) {
    Eigen::Matrix3d meat = Eigen::Matrix3d::Zero();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = idx ? (*idx)[k] : k;
      const double y = x[i] * x[i];
      const Eigen::Vector3d g(1.0, c2col[i], s2col[i]);
      const double r = y - beta.dot(g);
      meat += (r * r) * (g * g.transpose());
    }
    fit.cov = gram_inv * meat * gram_inv;
  }
  return fit;
}

// Non-central second moments along q (theta = 0) and p (theta = pi/2) with
// variances of the estimates, from the harmonic fit.
struct NoncentralSeconds {
  double q2 = 0.0, p2 = 0.0;
  double var_q2 = 0.0, var_p2 = 0.0;
};

NoncentralSeconds noncentral_from_fit(const Fit2& fit) {
  NoncentralSeconds out;
  out.q2 = fit.c0 + fit.c1;
  out.p2 = fit.c0 - fit.c1;
  out.var_q2 = fit.cov(0, 0) + fit.cov(1, 1) + 2.0 * fit.cov(0, 1);
  out.var_p2 = fit.cov(0, 0) + fit.cov(1, 1) - 2.0 * fit.cov(0, 1);
  return out;
}

// ---------------------------------------------------------------------------
// Phase-binned estimator: bins of half-width kPhaseBinHalfWidth centered on
// theta in {0, pi/4, pi/2, 3pi/4}.
// ---------------------------------------------------------------------------

struct BinStats {
  std::size_t count[4] = {0, 0, 0, 0};
  double mean[4] = {0, 0, 0, 0};
  double var[4] = {0, 0, 0, 0};
  double noncentral2[4] = {0, 0, 0, 0};
  double var_of_x2[4] = {0, 0, 0, 0};  // sample variance of x^2 within the bin
};

constexpr double kBinCenters[4] = {0.0, kPi / 4.0, kPi / 2.0, 3.0 * kPi / 4.0};
constexpr std::size_t kMinBinCount = 20;

BinStats compute_bins(const TraceCache& t, const std::vector<std::size_t>* idx) {
  const std::size_t n = idx ? idx->size() : t.x->size();
  const auto& theta = *t.theta;
  const auto& x = *t.x;

  double sum[4] = {0, 0, 0, 0};
  double sum2[4] = {0, 0, 0, 0};
  double sum4[4] = {0, 0, 0, 0};
  std::size_t count[4] = {0, 0, 0, 0};

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = idx ? (*idx)[k] : k;
    for (int b = 0; b < 4; ++b) {
      if (wrap_distance(theta[i], kBinCenters[b]) <= kPhaseBinHalfWidth) {
        const double v = x[i];
        sum[b] += v;
        sum2[b] += v * v;
        sum4[b] += v * v * v * v;
        ++count[b];
        break;
      }
    }
  }

  BinStats stats;
  for (int b = 0; b < 4; ++b) {
    stats.count[b] = count[b];
    if (count[b] < kMinBinCount) {
      throw std::runtime_error("binned estimator: insufficient samples in phase bin at theta = " +
                               std::to_string(kBinCenters[b]) + " (" +
                               std::to_string(count[b]) + " < " + std::to_string(kMinBinCount) +
                               ")");
    }
    const double m = static_cast<double>(count[b]);
    stats.mean[b] = sum[b] / m;
    stats.noncentral2[b] = sum2[b] / m;
    stats.var[b] = (sum2[b] - m * stats.mean[b] * stats.mean[b]) / (m - 1.0);
    stats.var_of_x2[b] =
        (sum4[b] - m * stats.noncentral2[b] * stats.noncentral2[b]) / (m - 1.0);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Shared single-mode moment path.
// ---------------------------------------------------------------------------

MomentEstimates moments_harmonic(const TraceCache& t, const std::vector<std::size_t>* idx,
                                 bool want_se) {
  const Fit1 f1 = fit_first(t, idx, want_se);
  const Fit2 f2 = fit_second(t, idx, want_se);
  const NoncentralSeconds nc = noncentral_from_fit(f2);

  MomentEstimates m;
  m.mean_q = f1.mq;
  m.mean_p = f1.mp;
  m.var_q = nc.q2 - f1.mq * f1.mq;
  m.var_p = nc.p2 - f1.mp * f1.mp;
  m.cov_qp = f2.c2 - f1.mq * f1.mp;
  m.nonpositive_variance = !(m.var_q > 0.0) || !(m.var_p > 0.0);

  if (want_se) {
    m.se_mean_q = std::sqrt(f1.var_mq);
    m.se_mean_p = std::sqrt(f1.var_mp);
    m.se_var_q = std::sqrt(nc.var_q2 + 4.0 * f1.mq * f1.mq * f1.var_mq);
    m.se_var_p = std::sqrt(nc.var_p2 + 4.0 * f1.mp * f1.mp * f1.var_mp);
    m.se_cov_qp = std::sqrt(f2.cov(2, 2) + f1.mp * f1.mp * f1.var_mq + f1.mq * f1.mq * f1.var_mp);
  }
  return m;
}

MomentEstimates moments_binned(const TraceCache& t, const std::vector<std::size_t>* idx) {
  const BinStats bins = compute_bins(t, idx);
  MomentEstimates m;
  m.mean_q = bins.mean[0];
  m.mean_p = bins.mean[2];
  m.var_q = bins.var[0];
  m.var_p = bins.var[2];
  // cov from the z+- bins: var(z+) - var(z-) = 2 cov.
  m.cov_qp = 0.5 * (bins.var[1] - bins.var[3]);
  m.nonpositive_variance = !(m.var_q > 0.0) || !(m.var_p > 0.0);

  const double m0 = static_cast<double>(bins.count[0]);
  const double m1 = static_cast<double>(bins.count[1]);
  const double m2 = static_cast<double>(bins.count[2]);
  const double m3 = static_cast<double>(bins.count[3]);
  m.se_mean_q = std::sqrt(bins.var[0] / m0);
  m.se_mean_p = std::sqrt(bins.var[2] / m2);
  m.se_var_q = bins.var[0] * std::sqrt(2.0 / (m0 - 1.0));
  m.se_var_p = bins.var[2] * std::sqrt(2.0 / (m2 - 1.0));
  const double se_zp = bins.var[1] * std::sqrt(2.0 / (m1 - 1.0));
  const double se_zm = bins.var[3] * std::sqrt(2.0 / (m3 - 1.0));
  m.se_cov_qp = 0.5 * std::sqrt(se_zp * se_zp + se_zm * se_zm);
  return m;
}

MomentEstimates moments_from_cache(const TraceCache& t, const std::vector<std::size_t>* idx,
                                   EstimatorKind kind, bool want_se) {
  return kind == EstimatorKind::Harmonic ? moments_harmonic(t, idx, want_se)
                                         : moments_binned(t, idx);
}

EpsilonEstimate epsilon_from_caches(const TraceCache& plus, const TraceCache& minus,
                                    const std::vector<std::size_t>* idx_p,
                                    const std::vector<std::size_t>* idx_m, double mqs, double mqa,
                                    double mps, double mpa, double var_mqs, double var_mqa,
                                    double var_mps, double var_mpa, EstimatorKind kind,
                                    bool want_se) {
  NoncentralSeconds ncp, ncm;
  if (kind == EstimatorKind::Harmonic) {
    ncp = noncentral_from_fit(fit_second(plus, idx_p, want_se));
    ncm = noncentral_from_fit(fit_second(minus, idx_m, want_se));
  } else {
    const BinStats bp = compute_bins(plus, idx_p);
    const BinStats bm = compute_bins(minus, idx_m);
    ncp.q2 = bp.noncentral2[0];
    ncp.p2 = bp.noncentral2[2];
    ncm.q2 = bm.noncentral2[0];
    ncm.p2 = bm.noncentral2[2];
    ncp.var_q2 = bp.var_of_x2[0] / static_cast<double>(bp.count[0]);
    ncp.var_p2 = bp.var_of_x2[2] / static_cast<double>(bp.count[2]);
    ncm.var_q2 = bm.var_of_x2[0] / static_cast<double>(bm.count[0]);
    ncm.var_p2 = bm.var_of_x2[2] / static_cast<double>(bm.count[2]);
  }

  EpsilonEstimate eps;
  eps.eps_q = 0.5 * (ncp.q2 - ncm.q2) - mqs * mqa;
  eps.eps_p = 0.5 * (ncp.p2 - ncm.p2) - mps * mpa;
  if (want_se) {
    eps.se_eps_q = std::sqrt(0.25 * (ncp.var_q2 + ncm.var_q2) + mqa * mqa * var_mqs +
                             mqs * mqs * var_mqa);
    eps.se_eps_p = std::sqrt(0.25 * (ncp.var_p2 + ncm.var_p2) + mpa * mpa * var_mps +
                             mps * mps * var_mpa);
  }
  return eps;
}

// Variance propagation through the (exact, linear) basis change. Entries of
// sigma' are treated as independent; (k,l) and (l,k) refer to the same
// estimate, so off-diagonal coefficients combine.
Eigen::Matrix4d propagate_cm_se(const Eigen::Matrix4d& cm_se, const Eigen::Matrix4d& s) {
  Eigen::Matrix4d out = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double var = 0.0;
      for (int k = 0; k < 4; ++k) {
        for (int l = k; l < 4; ++l) {
          double coeff = s(k, i) * s(l, j);
          if (l != k) coeff += s(l, i) * s(k, j);
          var += coeff * coeff * cm_se(k, l) * cm_se(k, l);
        }
      }
      out(i, j) = std::sqrt(var);
    }
  }
  return out;
}

Eigen::Vector4d propagate_vec_se(const Eigen::Vector4d& r_se, const Eigen::Matrix4d& s) {
  Eigen::Vector4d out = Eigen::Vector4d::Zero();
  for (int i = 0; i < 4; ++i) {
    double var = 0.0;
    for (int k = 0; k < 4; ++k) {
      var += s(k, i) * s(k, i) * r_se(k) * r_se(k);
    }
    out(i) = std::sqrt(var);
  }
  return out;
}

double guarded(double (*metric)(const Eigen::Matrix2d&), const Eigen::Matrix2d& block) {
  try {
    return metric(block);
  } catch (const std::invalid_argument&) {
    return kNan;
  }
}

double guarded_ppt(const Eigen::Matrix4d& cm) {
  try {
    return ppt_min_symplectic_eigenvalue(cm);
  } catch (const std::invalid_argument&) {
    return kNan;
  }
}

// One full point estimate of the pipeline (no uncertainties), shared by
// reconstruct() and the bootstrap so both run the identical path.
struct PipelinePoint {
  Eigen::Matrix4d sigma_prime;
  Eigen::Vector4d r_prime;
  Eigen::Matrix4d sigma_omega;
  Eigen::Vector4d r_omega;
  double delta_n = 0.0;
  double n_total = 0.0;
  double purity_s = 0.0, purity_a = 0.0;
  double nr_db_s = 0.0, nr_db_a = 0.0;
  double lambda_tilde = 0.0;
};

struct CacheSet {
  TraceCache s, a, plus, minus;
};

PipelinePoint pipeline_point(const CacheSet& caches, const std::vector<std::size_t>* idx_s,
                             const std::vector<std::size_t>* idx_a,
                             const std::vector<std::size_t>* idx_p,
                             const std::vector<std::size_t>* idx_m, const PdhReadout& pdh,
                             EstimatorKind kind) {
  const MomentEstimates ms = moments_from_cache(caches.s, idx_s, kind, false);
  const MomentEstimates ma = moments_from_cache(caches.a, idx_a, kind, false);
  const EpsilonEstimate eps =
      epsilon_from_caches(caches.plus, caches.minus, idx_p, idx_m, ms.mean_q, ma.mean_q,
                          ms.mean_p, ma.mean_p, 0, 0, 0, 0, kind, false);

  const double n_total = 0.25 * (ms.var_q + ms.var_p + ma.var_q + ma.var_p) - 1.0;
  // The PDH relation needs a non-negative total energy; a slightly negative
  // estimate (vacuum + noise) maps to delta_n = 0.
  const double delta_n = unbalance_from_pdh(pdh, std::max(n_total, 0.0));

  const AssembledCm assembled = assemble_cm(ms, ma, eps, delta_n, 0.0);
  const SidebandState sideband = transform_to_sidebands(assembled.sigma_prime, assembled.r_prime);

  PipelinePoint point;
  point.sigma_prime = assembled.sigma_prime;
  point.r_prime = assembled.r_prime;
  point.sigma_omega = sideband.sigma_omega;
  point.r_omega = sideband.r_omega;
  point.delta_n = delta_n;
  point.n_total = n_total;
  point.purity_s = guarded(&purity, block_mode1(assembled.sigma_prime));
  point.purity_a = guarded(&purity, block_mode2(assembled.sigma_prime));
  point.nr_db_s = guarded(&noise_reduction_db, block_mode1(assembled.sigma_prime));
  point.nr_db_a = guarded(&noise_reduction_db, block_mode2(assembled.sigma_prime));
  point.lambda_tilde = guarded_ppt(sideband.sigma_omega);
  return point;
}

void expect_psi(const HomodyneTrace& trace, double expected, const char* name) {
  const double got = canonical_angle(trace.psi);
  const double want = canonical_angle(expected);
  double diff = std::abs(got - want);
  diff = std::min(diff, 2.0 * kPi - diff);
  if (diff > 1e-9) {
    throw std::invalid_argument(std::string("TraceSet: ") + name + " has psi " +
                                std::to_string(got) + ", expected " + std::to_string(want));
  }
}

}  // namespace

void validate(const TraceSet& traces) {
  expect_psi(traces.trace_s, 0.0, "trace_s");
  expect_psi(traces.trace_a, kPi / 2.0, "trace_a");
  expect_psi(traces.trace_plus, kPi / 4.0, "trace_plus");
  expect_psi(traces.trace_minus, -kPi / 4.0, "trace_minus");
  for (const HomodyneTrace* t :
       {&traces.trace_s, &traces.trace_a, &traces.trace_plus, &traces.trace_minus}) {
    if (t->theta.size() != t->x.size() || t->x.empty()) {
      throw std::invalid_argument("TraceSet: traces must carry matching non-empty samples");
    }
  }
  const std::string& id = traces.trace_s.meta.scenario;
  if (traces.trace_a.meta.scenario != id || traces.trace_plus.meta.scenario != id ||
      traces.trace_minus.meta.scenario != id) {
    throw std::invalid_argument("TraceSet: inconsistent scenario ids across traces");
  }
}

const char* to_string(EstimatorKind kind) {
  return kind == EstimatorKind::Harmonic ? "harmonic" : "binned";
}

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "harmonic") return EstimatorKind::Harmonic;
  if (name == "binned") return EstimatorKind::Binned;
  throw std::invalid_argument("unknown estimator '" + name + "' (use harmonic or binned)");
}

FirstMoments estimate_first_moments(const HomodyneTrace& trace) {
  const TraceCache cache = make_cache(trace);
  const Fit1 fit = fit_first(cache, nullptr, true);
  FirstMoments out;
  out.mean_q = fit.mq;
  out.mean_p = fit.mp;
  out.se_mean_q = std::sqrt(fit.var_mq);
  out.se_mean_p = std::sqrt(fit.var_mp);
  return out;
}

MomentEstimates estimate_second_moments(const HomodyneTrace& trace, const FirstMoments& first,
                                        EstimatorKind kind) {
  const TraceCache cache = make_cache(trace);
  if (kind == EstimatorKind::Binned) {
    return moments_binned(cache, nullptr);
  }
  // Recompute the harmonic path from scratch so the mean subtraction uses
  // exactly the supplied first moments.
  const Fit2 f2 = fit_second(cache, nullptr, true);
  const NoncentralSeconds nc = noncentral_from_fit(f2);
  MomentEstimates m;
  m.mean_q = first.mean_q;
  m.mean_p = first.mean_p;
  m.se_mean_q = first.se_mean_q;
  m.se_mean_p = first.se_mean_p;
  m.var_q = nc.q2 - first.mean_q * first.mean_q;
  m.var_p = nc.p2 - first.mean_p * first.mean_p;
  m.cov_qp = f2.c2 - first.mean_q * first.mean_p;
  m.nonpositive_variance = !(m.var_q > 0.0) || !(m.var_p > 0.0);
  m.se_var_q = std::sqrt(nc.var_q2 + 4.0 * first.mean_q * first.mean_q * first.se_mean_q *
                                         first.se_mean_q);
  m.se_var_p = std::sqrt(nc.var_p2 + 4.0 * first.mean_p * first.mean_p * first.se_mean_p *
                                         first.se_mean_p);
  m.se_cov_qp = std::sqrt(f2.cov(2, 2) + first.mean_p * first.mean_p * first.se_mean_q *
                                             first.se_mean_q +
                          first.mean_q * first.mean_q * first.se_mean_p * first.se_mean_p);
  return m;
}

EpsilonEstimate estimate_epsilon(const HomodyneTrace& trace_plus, const HomodyneTrace& trace_minus,
                                 const FirstMoments& first_s, const FirstMoments& first_a,
                                 EstimatorKind kind) {
  if (trace_plus.x.empty() || trace_minus.x.empty() ||
      trace_plus.x.size() != trace_minus.x.size()) {
    throw std::invalid_argument(
        "estimate_epsilon: the +-pi/4 traces must share the same phase coverage");
  }
  const TraceCache cp = make_cache(trace_plus);
  const TraceCache cm = make_cache(trace_minus);
  return epsilon_from_caches(cp, cm, nullptr, nullptr, first_s.mean_q, first_a.mean_q,
                             first_s.mean_p, first_a.mean_p, first_s.se_mean_q * first_s.se_mean_q,
                             first_a.se_mean_q * first_a.se_mean_q,
                             first_s.se_mean_p * first_s.se_mean_p,
                             first_a.se_mean_p * first_a.se_mean_p, kind, true);
}

AssembledCm assemble_cm(const MomentEstimates& moments_s, const MomentEstimates& moments_a,
                        const EpsilonEstimate& eps, double delta_n, double delta_n_se) {
  AssembledCm out;
  Eigen::Matrix4d& cm = out.sigma_prime;
  cm.setZero();
  cm(0, 0) = moments_s.var_q;
  cm(1, 1) = moments_s.var_p;
  cm(0, 1) = cm(1, 0) = moments_s.cov_qp;
  cm(2, 2) = moments_a.var_q;
  cm(3, 3) = moments_a.var_p;
  cm(2, 3) = cm(3, 2) = moments_a.cov_qp;
  cm(0, 2) = cm(2, 0) = eps.eps_q;
  cm(1, 3) = cm(3, 1) = eps.eps_p;
  cm(0, 3) = cm(3, 0) = delta_n;
  cm(1, 2) = cm(2, 1) = -delta_n;

  out.r_prime << moments_s.mean_q, moments_s.mean_p, moments_a.mean_q, moments_a.mean_p;

  Eigen::Matrix4d& se = out.sigma_prime_se;
  se.setZero();
  se(0, 0) = moments_s.se_var_q;
  se(1, 1) = moments_s.se_var_p;
  se(0, 1) = se(1, 0) = moments_s.se_cov_qp;
  se(2, 2) = moments_a.se_var_q;
  se(3, 3) = moments_a.se_var_p;
  se(2, 3) = se(3, 2) = moments_a.se_cov_qp;
  se(0, 2) = se(2, 0) = eps.se_eps_q;
  se(1, 3) = se(3, 1) = eps.se_eps_p;
  se(0, 3) = se(3, 0) = delta_n_se;
  se(1, 2) = se(2, 1) = delta_n_se;

  out.r_prime_se << moments_s.se_mean_q, moments_s.se_mean_p, moments_a.se_mean_q,
      moments_a.se_mean_p;
  return out;
}

double n_total_from_cm(const Eigen::Matrix4d& sigma_prime) {
  return total_fluctuation_photons(sigma_prime);
}

SidebandState transform_to_sidebands(const Eigen::Matrix4d& sigma_prime,
                                     const Eigen::Vector4d& r_prime) {
  GaussianTwoModeState state;
  state.cm = sigma_prime;
  state.first_moments = r_prime;
  state.basis = ModalBasis::SymAntisym;
  const GaussianTwoModeState pm = change_basis(state);
  return {pm.cm, pm.first_moments};
}

ReconstructedState reconstruct(const TraceSet& traces, const PdhReadout& pdh,
                               const ReconstructOptions& options) {
  validate(traces);
  validate(pdh);

  CacheSet caches{make_cache(traces.trace_s), make_cache(traces.trace_a),
                  make_cache(traces.trace_plus), make_cache(traces.trace_minus)};

  const MomentEstimates ms = moments_from_cache(caches.s, nullptr, options.estimator, true);
  const MomentEstimates ma = moments_from_cache(caches.a, nullptr, options.estimator, true);
  const EpsilonEstimate eps = epsilon_from_caches(
      caches.plus, caches.minus, nullptr, nullptr, ms.mean_q, ma.mean_q, ms.mean_p, ma.mean_p,
      ms.se_mean_q * ms.se_mean_q, ma.se_mean_q * ma.se_mean_q, ms.se_mean_p * ms.se_mean_p,
      ma.se_mean_p * ma.se_mean_p, options.estimator, true);

  const double n_total = 0.25 * (ms.var_q + ms.var_p + ma.var_q + ma.var_p) - 1.0;
  const double se_n_total = 0.25 * std::sqrt(ms.se_var_q * ms.se_var_q + ms.se_var_p * ms.se_var_p +
                                             ma.se_var_q * ma.se_var_q + ma.se_var_p * ma.se_var_p);
  const double delta_n = unbalance_from_pdh(pdh, std::max(n_total, 0.0));
  const double se_delta_n = std::abs(pdh.tau_plus - pdh.tau_minus) * se_n_total;

  const AssembledCm assembled = assemble_cm(ms, ma, eps, delta_n, se_delta_n);
  const SidebandState sideband = transform_to_sidebands(assembled.sigma_prime, assembled.r_prime);
  const Eigen::Matrix4d s = mode_mixing_matrix();

  ReconstructedState out;
  out.sigma_prime = assembled.sigma_prime;
  out.r_prime = assembled.r_prime;
  out.sigma_prime_se = assembled.sigma_prime_se;
  out.r_prime_se = assembled.r_prime_se;
  out.delta_n = delta_n;
  out.sigma_omega = sideband.sigma_omega;
  out.r_omega = sideband.r_omega;
  // sigma_Omega = S^T sigma' S, so the propagation matrix is S itself.
  out.sigma_omega_se = propagate_cm_se(assembled.sigma_prime_se, s);
  out.r_omega_se = propagate_vec_se(assembled.r_prime_se, s);
  out.estimator = options.estimator;
  out.nonpositive_variance = ms.nonpositive_variance || ma.nonpositive_variance;

  ReconstructionMetrics& metrics = out.metrics;
  metrics.purity_s = guarded(&purity, block_mode1(out.sigma_prime));
  metrics.purity_a = guarded(&purity, block_mode2(out.sigma_prime));
  metrics.nr_db_s = guarded(&noise_reduction_db, block_mode1(out.sigma_prime));
  metrics.nr_db_a = guarded(&noise_reduction_db, block_mode2(out.sigma_prime));
  metrics.lambda_tilde = guarded_ppt(out.sigma_omega);
  metrics.n_total = n_total;
  metrics.delta_n = delta_n;
  metrics.se_n_total = se_n_total;
  metrics.se_delta_n = se_delta_n;
  metrics.physicality_margin = check_physicality(out.sigma_prime).margin;
  metrics.se_purity_s = metrics.se_purity_a = kNan;
  metrics.se_nr_db_s = metrics.se_nr_db_a = kNan;
  metrics.se_lambda_tilde = kNan;
  out.errors_from = "analytic";

  if (options.bootstrap_resamples > 0) {
    const BootstrapErrors boot =
        bootstrap_errors(traces, pdh, options.bootstrap_resamples, options.bootstrap_seed,
                         options.estimator, options.threads);
    out.sigma_prime_se = boot.sigma_prime_se;
    out.r_prime_se = boot.r_prime_se;
    out.sigma_omega_se = boot.sigma_omega_se;
    out.r_omega_se = boot.r_omega_se;
    metrics.se_delta_n = boot.se_delta_n;
    metrics.se_n_total = boot.se_n_total;
    metrics.se_purity_s = boot.se_purity_s;
    metrics.se_purity_a = boot.se_purity_a;
    metrics.se_nr_db_s = boot.se_nr_db_s;
    metrics.se_nr_db_a = boot.se_nr_db_a;
    metrics.se_lambda_tilde = boot.se_lambda_tilde;
    out.errors_from = "bootstrap";
  }

  // Physicality is verified, never enforced: the flag allows the margin to
  // sit within noise (5 se of the most uncertain entry) of the boundary.
  const double max_se = out.sigma_prime_se.maxCoeff();
  out.physical = metrics.physicality_margin >= -std::max(5.0 * max_se, kPhysicalityTol);
  return out;
}

BootstrapErrors bootstrap_errors(const TraceSet& traces, const PdhReadout& pdh,
                                 std::size_t n_resamples, std::uint64_t seed, EstimatorKind kind,
                                 std::size_t threads) {
  validate(traces);
  validate(pdh);
  if (n_resamples < 100) {
    throw std::invalid_argument("bootstrap_errors: need at least 100 resamples");
  }

  const CacheSet caches{make_cache(traces.trace_s), make_cache(traces.trace_a),
                        make_cache(traces.trace_plus), make_cache(traces.trace_minus)};

  std::vector<PipelinePoint> points(n_resamples);
  parallel_for(
      n_resamples,
      [&](std::size_t r) {
        GaussianRng rng(derive_stream_seed(seed, r));
        auto draw = [&](std::size_t n) {
          std::vector<std::size_t> idx(n);
          for (auto& v : idx) v = rng.index(n);
          return idx;
        };
        // Trace resampling order is fixed: s, a, plus, minus.
        const std::vector<std::size_t> is = draw(caches.s.x->size());
        const std::vector<std::size_t> ia = draw(caches.a.x->size());
        const std::vector<std::size_t> ip = draw(caches.plus.x->size());
        const std::vector<std::size_t> im = draw(caches.minus.x->size());
        points[r] = pipeline_point(caches, &is, &ia, &ip, &im, pdh, kind);
      },
      threads);

  auto sd_of = [&points](auto getter) {
    double sum = 0.0, sum2 = 0.0, count = 0.0;
    for (const auto& p : points) {
      const double v = getter(p);
      if (std::isnan(v)) continue;
      sum += v;
      sum2 += v * v;
      count += 1.0;
    }
    // A metric that failed on most resamples has no meaningful spread.
    if (count < 2.0 || count < 0.5 * static_cast<double>(points.size())) return kNan;
    const double mean = sum / count;
    return std::sqrt(std::max(0.0, (sum2 - count * mean * mean) / (count - 1.0)));
  };

  BootstrapErrors out;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      out.sigma_prime_se(i, j) =
          sd_of([i, j](const PipelinePoint& p) { return p.sigma_prime(i, j); });
      out.sigma_omega_se(i, j) =
          sd_of([i, j](const PipelinePoint& p) { return p.sigma_omega(i, j); });
    }
    out.r_prime_se(i) = sd_of([i](const PipelinePoint& p) { return p.r_prime(i); });
    out.r_omega_se(i) = sd_of([i](const PipelinePoint& p) { return p.r_omega(i); });
  }
  out.se_delta_n = sd_of([](const PipelinePoint& p) { return p.delta_n; });
  out.se_n_total = sd_of([](const PipelinePoint& p) { return p.n_total; });
  out.se_purity_s = sd_of([](const PipelinePoint& p) { return p.purity_s; });
  out.se_purity_a = sd_of([](const PipelinePoint& p) { return p.purity_a; });
  out.se_nr_db_s = sd_of([](const PipelinePoint& p) { return p.nr_db_s; });
  out.se_nr_db_a = sd_of([](const PipelinePoint& p) { return p.nr_db_a; });
  out.se_lambda_tilde = sd_of([](const PipelinePoint& p) { return p.lambda_tilde; });
  return out;
}

}  // namespace sbt
