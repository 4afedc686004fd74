#include "sbt/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sbt/kv.hpp"

namespace sbt {

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "text") return ReportFormat::Text;
  if (name == "machine") return ReportFormat::Machine;
  throw std::invalid_argument("unknown report format '" + name + "' (use text or machine)");
}

TruthComparison truth_comparison(const GroundTruth& truth) {
  TruthComparison out;
  out.tmst = truth.tmst;
  const GaussianTwoModeState& sa = truth.state_sa;
  out.r_prime = sa.first_moments;
  out.sigma_prime = sa.cm;
  const GaussianTwoModeState pm = change_basis(sa);
  out.r_omega = pm.first_moments;
  out.sigma_omega = pm.cm;
  out.lambda_tilde = ppt_min_symplectic_eigenvalue(pm.cm);
  out.purity_s = purity(block_mode1(sa.cm));
  out.purity_a = purity(block_mode2(sa.cm));
  out.nr_db_s = noise_reduction_db(block_mode1(sa.cm));
  out.nr_db_a = noise_reduction_db(block_mode2(sa.cm));
  out.n_total = total_fluctuation_photons(sa.cm);
  out.delta_n = sa.cm(0, 3);
  return out;
}

ReconstructionReport make_report(const ReconstructedState& state, const std::string& scenario,
                                 std::size_t n_samples, std::size_t bootstrap_resamples,
                                 const std::optional<GroundTruth>& truth) {
  ReconstructionReport report;
  report.scenario = scenario;
  report.estimator = state.estimator;
  report.n_samples = n_samples;
  report.bootstrap_resamples = bootstrap_resamples;
  report.state = state;
  if (truth) report.truth = truth_comparison(*truth);
  return report;
}

namespace {

void set_matrix(KvDocument& doc, const std::string& prefix, const Eigen::Matrix4d& m) {
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      doc.set_double(prefix + "." + std::to_string(i) + "." + std::to_string(j), m(i, j));
    }
  }
}

Eigen::Matrix4d get_matrix(const KvDocument& doc, const std::string& prefix) {
  Eigen::Matrix4d m;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      m(i, j) = doc.get_double(prefix + "." + std::to_string(i) + "." + std::to_string(j));
    }
  }
  return m;
}

void set_vector(KvDocument& doc, const std::string& prefix, const Eigen::Vector4d& v) {
  for (int i = 0; i < 4; ++i) doc.set_double(prefix + "." + std::to_string(i), v(i));
}

Eigen::Vector4d get_vector(const KvDocument& doc, const std::string& prefix) {
  Eigen::Vector4d v;
  for (int i = 0; i < 4; ++i) v(i) = doc.get_double(prefix + "." + std::to_string(i));
  return v;
}

}  // namespace

std::string serialize_report(const ReconstructionReport& report) {
  KvDocument doc;
  doc.set("scenario", report.scenario);
  doc.set("estimator", to_string(report.estimator));
  doc.set_u64("n_samples", report.n_samples);
  doc.set_u64("bootstrap_resamples", report.bootstrap_resamples);
  doc.set("errors_from", report.state.errors_from);
  doc.set_bool("physical", report.state.physical);
  doc.set_bool("nonpositive_variance", report.state.nonpositive_variance);

  const ReconstructedState& st = report.state;
  set_vector(doc, "r_prime", st.r_prime);
  set_vector(doc, "r_prime.err", st.r_prime_se);
  set_matrix(doc, "sigma_prime", st.sigma_prime);
  set_matrix(doc, "sigma_prime.err", st.sigma_prime_se);
  set_vector(doc, "r_omega", st.r_omega);
  set_vector(doc, "r_omega.err", st.r_omega_se);
  set_matrix(doc, "sigma_omega", st.sigma_omega);
  set_matrix(doc, "sigma_omega.err", st.sigma_omega_se);

  const ReconstructionMetrics& m = st.metrics;
  doc.set_double("metrics.purity_s", m.purity_s);
  doc.set_double("metrics.purity_s.err", m.se_purity_s);
  doc.set_double("metrics.purity_a", m.purity_a);
  doc.set_double("metrics.purity_a.err", m.se_purity_a);
  doc.set_double("metrics.nr_db_s", m.nr_db_s);
  doc.set_double("metrics.nr_db_s.err", m.se_nr_db_s);
  doc.set_double("metrics.nr_db_a", m.nr_db_a);
  doc.set_double("metrics.nr_db_a.err", m.se_nr_db_a);
  doc.set_double("metrics.lambda_tilde", m.lambda_tilde);
  doc.set_double("metrics.lambda_tilde.err", m.se_lambda_tilde);
  doc.set_double("metrics.n_total", m.n_total);
  doc.set_double("metrics.n_total.err", m.se_n_total);
  doc.set_double("metrics.delta_n", m.delta_n);
  doc.set_double("metrics.delta_n.err", m.se_delta_n);
  doc.set_double("metrics.physicality_margin", m.physicality_margin);

  doc.set_bool("truth.present", report.truth.has_value());
  if (report.truth) {
    const TruthComparison& t = *report.truth;
    doc.set_double("truth.tmst.alpha_re", t.tmst.alpha.real());
    doc.set_double("truth.tmst.alpha_im", t.tmst.alpha.imag());
    doc.set_double("truth.tmst.n_sq", t.tmst.n_sq);
    doc.set_double("truth.tmst.n_th", t.tmst.n_th);
    doc.set_double("truth.tmst.r_th", t.tmst.r_th);
    set_vector(doc, "truth.r_prime", t.r_prime);
    set_matrix(doc, "truth.sigma_prime", t.sigma_prime);
    set_vector(doc, "truth.r_omega", t.r_omega);
    set_matrix(doc, "truth.sigma_omega", t.sigma_omega);
    doc.set_double("truth.lambda_tilde", t.lambda_tilde);
    doc.set_double("truth.purity_s", t.purity_s);
    doc.set_double("truth.purity_a", t.purity_a);
    doc.set_double("truth.nr_db_s", t.nr_db_s);
    doc.set_double("truth.nr_db_a", t.nr_db_a);
    doc.set_double("truth.n_total", t.n_total);
    doc.set_double("truth.delta_n", t.delta_n);
  }
  return doc.serialize("sbtomo report v1");
}

ReconstructionReport parse_report(const std::string& text, const std::string& source) {
  const KvDocument doc = KvDocument::parse(text, source);
  ReconstructionReport report;
  report.scenario = doc.get_string("scenario");
  report.estimator = estimator_from_string(doc.get_string("estimator"));
  report.n_samples = static_cast<std::size_t>(doc.get_u64("n_samples"));
  report.bootstrap_resamples = static_cast<std::size_t>(doc.get_u64("bootstrap_resamples"));

  ReconstructedState& st = report.state;
  st.estimator = report.estimator;
  st.errors_from = doc.get_string("errors_from");
  st.physical = doc.get_bool("physical");
  st.nonpositive_variance = doc.get_bool("nonpositive_variance");
  st.r_prime = get_vector(doc, "r_prime");
  st.r_prime_se = get_vector(doc, "r_prime.err");
  st.sigma_prime = get_matrix(doc, "sigma_prime");
  st.sigma_prime_se = get_matrix(doc, "sigma_prime.err");
  st.r_omega = get_vector(doc, "r_omega");
  st.r_omega_se = get_vector(doc, "r_omega.err");
  st.sigma_omega = get_matrix(doc, "sigma_omega");
  st.sigma_omega_se = get_matrix(doc, "sigma_omega.err");

  ReconstructionMetrics& m = st.metrics;
  m.purity_s = doc.get_double("metrics.purity_s");
  m.se_purity_s = doc.get_double("metrics.purity_s.err");
  m.purity_a = doc.get_double("metrics.purity_a");
  m.se_purity_a = doc.get_double("metrics.purity_a.err");
  m.nr_db_s = doc.get_double("metrics.nr_db_s");
  m.se_nr_db_s = doc.get_double("metrics.nr_db_s.err");
  m.nr_db_a = doc.get_double("metrics.nr_db_a");
  m.se_nr_db_a = doc.get_double("metrics.nr_db_a.err");
  m.lambda_tilde = doc.get_double("metrics.lambda_tilde");
  m.se_lambda_tilde = doc.get_double("metrics.lambda_tilde.err");
  m.n_total = doc.get_double("metrics.n_total");
  m.se_n_total = doc.get_double("metrics.n_total.err");
  m.delta_n = doc.get_double("metrics.delta_n");
  m.se_delta_n = doc.get_double("metrics.delta_n.err");
  m.physicality_margin = doc.get_double("metrics.physicality_margin");
  st.delta_n = m.delta_n;

  if (doc.get_bool("truth.present")) {
    TruthComparison t;
    t.tmst.alpha = {doc.get_double("truth.tmst.alpha_re"), doc.get_double("truth.tmst.alpha_im")};
    t.tmst.n_sq = doc.get_double("truth.tmst.n_sq");
    t.tmst.n_th = doc.get_double("truth.tmst.n_th");
    t.tmst.r_th = doc.get_double("truth.tmst.r_th");
    t.r_prime = get_vector(doc, "truth.r_prime");
    t.sigma_prime = get_matrix(doc, "truth.sigma_prime");
    t.r_omega = get_vector(doc, "truth.r_omega");
    t.sigma_omega = get_matrix(doc, "truth.sigma_omega");
    t.lambda_tilde = doc.get_double("truth.lambda_tilde");
    t.purity_s = doc.get_double("truth.purity_s");
    t.purity_a = doc.get_double("truth.purity_a");
    t.nr_db_s = doc.get_double("truth.nr_db_s");
    t.nr_db_a = doc.get_double("truth.nr_db_a");
    t.n_total = doc.get_double("truth.n_total");
    t.delta_n = doc.get_double("truth.delta_n");
    report.truth = t;
  }
  return report;
}

void write_report(const ReconstructionReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << serialize_report(report);
}

ReconstructionReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_report(buffer.str(), path);
}

namespace {

std::string num(double v, int width = 9, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%*.*f", width, prec, v);
  return buf;
}

void print_matrix_with_errors(std::ostringstream& out, const char* title,
                              const Eigen::Matrix4d& m, const Eigen::Matrix4d& se) {
  out << title << " (entry +/- error):\n";
  for (int i = 0; i < 4; ++i) {
    out << "  ";
    for (int j = 0; j < 4; ++j) {
      out << num(m(i, j)) << " +- " << num(se(i, j), 7) << "   ";
    }
    out << "\n";
  }
}

void print_vector_with_errors(std::ostringstream& out, const char* title,
                              const Eigen::Vector4d& v, const Eigen::Vector4d& se) {
  out << title << " = (";
  for (int i = 0; i < 4; ++i) out << num(v(i)) << (i < 3 ? "," : "");
  out << " )\n        +/- (";
  for (int i = 0; i < 4; ++i) out << num(se(i)) << (i < 3 ? "," : "");
  out << " )\n";
}

void print_metric(std::ostringstream& out, const char* label, double v, double se,
                  const char* extra = "") {
  out << "  " << label << num(v);
  if (!std::isnan(se)) out << " +- " << num(se, 7);
  out << extra << "\n";
}

}  // namespace

std::string format_report_text(const ReconstructionReport& report) {
  std::ostringstream out;
  const ReconstructedState& st = report.state;
  out << "Reconstruction report, scenario '" << report.scenario << "' ("
      << to_string(report.estimator) << " estimator, " << report.n_samples
      << " samples per trace, errors: " << st.errors_from << ")\n\n";

  out << "Sideband basis (q+, p+, q-, p-)\n";
  print_vector_with_errors(out, "R_Omega", st.r_omega, st.r_omega_se);
  print_matrix_with_errors(out, "sigma_Omega", st.sigma_omega, st.sigma_omega_se);
  out << "\nS/A basis (q_s, p_s, q_a, p_a)\n";
  print_vector_with_errors(out, "R'     ", st.r_prime, st.r_prime_se);
  print_matrix_with_errors(out, "sigma'", st.sigma_prime, st.sigma_prime_se);

  const ReconstructionMetrics& m = st.metrics;
  out << "\nMetrics:\n";
  print_metric(out, "purity S            ", m.purity_s, m.se_purity_s);
  print_metric(out, "purity A            ", m.purity_a, m.se_purity_a);
  print_metric(out, "noise reduction S   ", m.nr_db_s, m.se_nr_db_s, " dB");
  print_metric(out, "noise reduction A   ", m.nr_db_a, m.se_nr_db_a, " dB");
  print_metric(out, "lambda~ (PPT)       ", m.lambda_tilde, m.se_lambda_tilde,
               m.lambda_tilde < 1.0 - 1e-9 ? "  [entangled]" : "  [separable]");
  print_metric(out, "N_Omega             ", m.n_total, m.se_n_total);
  print_metric(out, "Delta N (PDH)       ", m.delta_n, m.se_delta_n);
  out << "  physicality margin  " << num(m.physicality_margin, 9, 5)
      << (st.physical ? "  [physical]" : "  [UNPHYSICAL]") << "\n";

  if (report.truth) {
    const TruthComparison& t = *report.truth;
    out << "\nGround truth comparison:\n";
    out << "  lambda~ " << num(t.lambda_tilde) << "   purity " << num(t.purity_s) << "/"
        << num(t.purity_a) << "   NR " << num(t.nr_db_s) << "/" << num(t.nr_db_a)
        << " dB   N_Omega " << num(t.n_total) << "   Delta N " << num(t.delta_n) << "\n";
    print_matrix_with_errors(out, "  true sigma_Omega", t.sigma_omega, Eigen::Matrix4d::Zero());
  }
  return out.str();
}

}  // namespace sbt
