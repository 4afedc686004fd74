#include "sbt/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "sbt/kv.hpp"
#include "sbt/rng.hpp"

namespace sbt {

namespace fs = std::filesystem;

SimulateResult cmd_simulate(const Scenario& scenario, const std::string& out_dir) {
  validate(scenario);
  const GaussianTwoModeState state_pm = tmst_state(scenario.tmst);
  const GaussianTwoModeState state_sa = change_basis(state_pm);

  // One RNG stream per dual acquisition, derived from the scenario seed.
  TraceConfig cfg_sa = scenario.trace;
  cfg_sa.rng_seed = derive_stream_seed(scenario.trace.rng_seed, 0);
  TraceConfig cfg_pm = scenario.trace;
  cfg_pm.rng_seed = derive_stream_seed(scenario.trace.rng_seed, 1);

  SimulateResult result;
  auto [trace_s, trace_a] = synthesize_dual(state_sa, 0.0, cfg_sa, scenario.name);
  auto [trace_minus, trace_plus] =
      synthesize_dual(state_sa, -std::numbers::pi / 4.0, cfg_pm, scenario.name);
  result.traces.trace_s = std::move(trace_s);
  result.traces.trace_a = std::move(trace_a);
  result.traces.trace_plus = std::move(trace_plus);
  result.traces.trace_minus = std::move(trace_minus);
  result.transmission = cavity_transmission(scenario.cavity);
  result.truth = GroundTruth{scenario.tmst, state_sa};

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_trace_set(result.traces, out_dir);
    write_pdh(result.transmission, (fs::path(out_dir) / kPdhFile).string());
    write_ground_truth(result.truth, (fs::path(out_dir) / kGroundTruthFile).string());
  }
  return result;
}

ReconstructionReport cmd_reconstruct(const std::string& trace_dir, const std::string& report_path,
                                     ReportFormat format, const ReconstructArgs& args) {
  const TraceSet traces = read_trace_set(trace_dir);
  const fs::path pdh_path = fs::path(trace_dir) / kPdhFile;
  if (!fs::exists(pdh_path)) {
    throw std::runtime_error("trace directory '" + trace_dir + "' is missing " +
                             std::string(kPdhFile));
  }
  const CavityTransmission transmission = read_pdh(pdh_path.string());

  ReconstructOptions options;
  options.estimator = args.estimator;
  options.bootstrap_resamples = args.bootstrap_resamples;
  options.bootstrap_seed = args.bootstrap_seed;
  options.threads = args.threads;
  const ReconstructedState state = reconstruct(traces, transmission.readout, options);

  const ReconstructionReport report =
      make_report(state, traces.trace_s.meta.scenario, traces.trace_s.x.size(),
                  args.bootstrap_resamples, try_read_ground_truth(trace_dir));

  if (!report_path.empty()) {
    if (format == ReportFormat::Machine) {
      write_report(report, report_path);
    } else {
      std::ofstream out(report_path);
      if (!out) throw std::runtime_error("cannot write '" + report_path + "'");
      out << format_report_text(report);
    }
  }
  return report;
}

AnalyzeResult analyze_state(const GaussianTwoModeState& state) {
  AnalyzeResult result;
  result.state = state;
  result.purity_1 = purity(block_mode1(state.cm));
  result.purity_2 = purity(block_mode2(state.cm));
  result.nr_db_1 = noise_reduction_db(block_mode1(state.cm));
  result.nr_db_2 = noise_reduction_db(block_mode2(state.cm));
  const auto [nu1, nu2] = symplectic_eigenvalues(state.cm);
  result.nu_1 = nu1;
  result.nu_2 = nu2;
  const GaussianTwoModeState pm =
      state.basis == ModalBasis::SidebandPM ? state : change_basis(state);
  result.lambda_tilde = ppt_min_symplectic_eigenvalue(pm.cm);
  result.n_total = total_fluctuation_photons(state.cm);
  const PhysicalityCheck check = check_physicality(state.cm);
  result.physicality_margin = check.margin;
  result.physical = check.passes;
  return result;
}

AnalyzeResult cmd_analyze(const std::string& state_path) {
  return analyze_state(read_state(state_path));
}

std::string format_analysis(const AnalyzeResult& result, ReportFormat format) {
  if (format == ReportFormat::Machine) {
    KvDocument doc;
    doc.set("basis", to_string(result.state.basis));
    doc.set_double("purity_1", result.purity_1);
    doc.set_double("purity_2", result.purity_2);
    doc.set_double("nr_db_1", result.nr_db_1);
    doc.set_double("nr_db_2", result.nr_db_2);
    doc.set_double("nu_1", result.nu_1);
    doc.set_double("nu_2", result.nu_2);
    doc.set_double("lambda_tilde", result.lambda_tilde);
    doc.set_double("n_total", result.n_total);
    doc.set_double("physicality_margin", result.physicality_margin);
    doc.set_bool("physical", result.physical);
    return doc.serialize("sbtomo analysis v1");
  }
  std::ostringstream out;
  char buf[128];
  out << "State analysis (basis " << to_string(result.state.basis) << ")\n";
  std::snprintf(buf, sizeof(buf), "  purity            %9.4f  %9.4f\n", result.purity_1,
                result.purity_2);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  noise red. [dB]   %9.4f  %9.4f\n", result.nr_db_1,
                result.nr_db_2);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  sympl. eigenvalues%9.4f  %9.4f\n", result.nu_1, result.nu_2);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  lambda~ (PPT)     %9.4f  %s\n", result.lambda_tilde,
                result.lambda_tilde < 1.0 - 1e-9 ? "[entangled]" : "[separable]");
  out << buf;
  std::snprintf(buf, sizeof(buf), "  N_total           %9.4f\n", result.n_total);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  margin            %12.3e  %s\n", result.physicality_margin,
                result.physical ? "[physical]" : "[UNPHYSICAL]");
  out << buf;
  return out.str();
}

namespace {

AggregateStat aggregate(const std::vector<double>& values) {
  AggregateStat stat;
  const double n = static_cast<double>(values.size());
  if (values.empty()) return stat;
  double sum = 0.0;
  for (double v : values) sum += v;
  stat.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stat.mean) * (v - stat.mean);
    stat.sd = std::sqrt(ss / (n - 1.0));
    stat.se_mean = stat.sd / std::sqrt(n);
  }
  return stat;
}

std::vector<double> collect(const std::vector<ReconstructedState>& runs,
                            const std::function<double(const ReconstructedState&)>& getter) {
  std::vector<double> values;
  values.reserve(runs.size());
  for (const auto& run : runs) {
    const double v = getter(run);
    if (!std::isnan(v)) values.push_back(v);
  }
  return values;
}

}  // namespace

PipelineResult cmd_pipeline(const Scenario& scenario, const PipelineArgs& args) {
  validate(scenario);
  PipelineResult result;
  result.scenario = scenario;
  result.n_repetitions = args.reps.value_or(scenario.pipeline.n_repetitions);
  const std::uint64_t master = args.master_seed.value_or(scenario.pipeline.master_seed);
  const std::size_t bootstrap =
      args.bootstrap_resamples.value_or(scenario.pipeline.bootstrap_resamples);

  result.truth = truth_comparison(GroundTruth{scenario.tmst, change_basis(tmst_state(scenario.tmst))});
  result.runs.resize(result.n_repetitions);

  parallel_for(
      result.n_repetitions,
      [&](std::size_t r) {
        Scenario rep = scenario;
        rep.trace.rng_seed = derive_stream_seed(master, r);
        const SimulateResult sim = cmd_simulate(rep, "");
        ReconstructOptions options;
        options.estimator = args.estimator;
        options.bootstrap_resamples = bootstrap;
        options.bootstrap_seed = derive_stream_seed(master, 0x0B00'7000ULL + r);
        options.threads = 1;  // repetitions already run concurrently
        result.runs[r] = reconstruct(sim.traces, sim.transmission.readout, options);
      },
      args.threads);

  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      result.sigma_prime[i][j] =
          aggregate(collect(result.runs, [&](const auto& s) { return s.sigma_prime(i, j); }));
      result.sigma_omega[i][j] =
          aggregate(collect(result.runs, [&](const auto& s) { return s.sigma_omega(i, j); }));
    }
    result.r_prime[i] =
        aggregate(collect(result.runs, [&](const auto& s) { return s.r_prime(i); }));
    result.r_omega[i] =
        aggregate(collect(result.runs, [&](const auto& s) { return s.r_omega(i); }));
  }
  result.lambda_tilde =
      aggregate(collect(result.runs, [](const auto& s) { return s.metrics.lambda_tilde; }));
  result.purity_s =
      aggregate(collect(result.runs, [](const auto& s) { return s.metrics.purity_s; }));
  result.purity_a =
      aggregate(collect(result.runs, [](const auto& s) { return s.metrics.purity_a; }));
  result.nr_db_s = aggregate(collect(result.runs, [](const auto& s) { return s.metrics.nr_db_s; }));
  result.nr_db_a = aggregate(collect(result.runs, [](const auto& s) { return s.metrics.nr_db_a; }));
  result.n_total = aggregate(collect(result.runs, [](const auto& s) { return s.metrics.n_total; }));
  result.delta_n = aggregate(collect(result.runs, [](const auto& s) { return s.metrics.delta_n; }));
  result.physicality_margin = aggregate(
      collect(result.runs, [](const auto& s) { return s.metrics.physicality_margin; }));

  double max_se = 0.0;
  for (const auto& run : result.runs) {
    max_se = std::max(max_se, run.sigma_prime_se.maxCoeff());
  }
  result.max_entry_se = max_se;
  return result;
}

namespace {

void set_stat(KvDocument& doc, const std::string& key, const AggregateStat& stat) {
  doc.set_double(key + ".mean", stat.mean);
  doc.set_double(key + ".sd", stat.sd);
  doc.set_double(key + ".se_mean", stat.se_mean);
}

}  // namespace

std::string serialize_pipeline_result(const PipelineResult& result) {
  KvDocument doc;
  doc.set("scenario", result.scenario.name);
  doc.set_u64("n_repetitions", result.n_repetitions);
  doc.set_u64("n_samples", result.scenario.trace.n_samples);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      set_stat(doc, "sigma_prime." + std::to_string(i) + "." + std::to_string(j),
               result.sigma_prime[i][j]);
      set_stat(doc, "sigma_omega." + std::to_string(i) + "." + std::to_string(j),
               result.sigma_omega[i][j]);
    }
    set_stat(doc, "r_prime." + std::to_string(i), result.r_prime[i]);
    set_stat(doc, "r_omega." + std::to_string(i), result.r_omega[i]);
  }
  set_stat(doc, "metrics.lambda_tilde", result.lambda_tilde);
  set_stat(doc, "metrics.purity_s", result.purity_s);
  set_stat(doc, "metrics.purity_a", result.purity_a);
  set_stat(doc, "metrics.nr_db_s", result.nr_db_s);
  set_stat(doc, "metrics.nr_db_a", result.nr_db_a);
  set_stat(doc, "metrics.n_total", result.n_total);
  set_stat(doc, "metrics.delta_n", result.delta_n);
  set_stat(doc, "metrics.physicality_margin", result.physicality_margin);
  doc.set_double("max_entry_se", result.max_entry_se);

  doc.set_double("truth.lambda_tilde", result.truth.lambda_tilde);
  doc.set_double("truth.purity_s", result.truth.purity_s);
  doc.set_double("truth.purity_a", result.truth.purity_a);
  doc.set_double("truth.nr_db_s", result.truth.nr_db_s);
  doc.set_double("truth.nr_db_a", result.truth.nr_db_a);
  doc.set_double("truth.n_total", result.truth.n_total);
  doc.set_double("truth.delta_n", result.truth.delta_n);
  return doc.serialize("sbtomo pipeline summary v1");
}

std::string format_pipeline_text(const PipelineResult& result) {
  std::ostringstream out;
  out << "Pipeline summary, scenario '" << result.scenario.name << "', "
      << result.n_repetitions << " repetitions x " << result.scenario.trace.n_samples
      << " samples per trace\n\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "  %-22s %10s %10s %10s\n", "metric", "mean", "sd", "truth");
  out << buf;
  const auto row = [&](const char* label, const AggregateStat& stat, double truth) {
    std::snprintf(buf, sizeof(buf), "  %-22s %10.4f %10.4f %10.4f\n", label, stat.mean, stat.sd,
                  truth);
    out << buf;
  };
  row("lambda~ (PPT)", result.lambda_tilde, result.truth.lambda_tilde);
  row("purity S", result.purity_s, result.truth.purity_s);
  row("purity A", result.purity_a, result.truth.purity_a);
  row("noise reduction S dB", result.nr_db_s, result.truth.nr_db_s);
  row("noise reduction A dB", result.nr_db_a, result.truth.nr_db_a);
  row("N_Omega", result.n_total, result.truth.n_total);
  row("Delta N", result.delta_n, result.truth.delta_n);
  std::snprintf(buf, sizeof(buf), "  %-22s %10.2e\n", "worst margin",
                result.physicality_margin.mean);
  out << buf;
  return out.str();
}

}  // namespace sbt
