#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbt/parallel.hpp"
#include "sbt/report.hpp"
#include "sbt/scenario.hpp"

namespace sbt {

struct SimulateResult {
  TraceSet traces;
  CavityTransmission transmission;
  GroundTruth truth;
};

/// Synthesize the four traces (psi = 0, pi/2, +pi/4, -pi/4 via two dual
/// acquisitions), the PDH readout and the ground-truth sidecar. When out_dir
/// is non-empty the trace files are written there.
SimulateResult cmd_simulate(const Scenario& scenario, const std::string& out_dir);

struct ReconstructArgs {
  EstimatorKind estimator = EstimatorKind::Harmonic;
  std::size_t bootstrap_resamples = 500;
  std::uint64_t bootstrap_seed = 0;
  std::size_t threads = 0;
};

/// Reconstruct from a trace directory; writes the report to report_path when
/// non-empty (machine or text format).
ReconstructionReport cmd_reconstruct(const std::string& trace_dir, const std::string& report_path,
                                     ReportFormat format = ReportFormat::Machine,
                                     const ReconstructArgs& args = {});

/// All scalar metrics of a serialized state file, independent of basis.
struct AnalyzeResult {
  GaussianTwoModeState state;
  double purity_1 = 0.0, purity_2 = 0.0;
  double nr_db_1 = 0.0, nr_db_2 = 0.0;
  double nu_1 = 0.0, nu_2 = 0.0;
  double lambda_tilde = 0.0;
  double n_total = 0.0;
  double physicality_margin = 0.0;
  bool physical = false;
};

AnalyzeResult cmd_analyze(const std::string& state_path);
AnalyzeResult analyze_state(const GaussianTwoModeState& state);
std::string format_analysis(const AnalyzeResult& result, ReportFormat format);

struct AggregateStat {
  double mean = 0.0;
  double sd = 0.0;      ///< spread across repetitions
  double se_mean = 0.0; ///< sd / sqrt(reps)
};

/// Monte Carlo summary over independent simulate+reconstruct repetitions.
struct PipelineResult {
  Scenario scenario;
  std::size_t n_repetitions = 0;
  std::vector<ReconstructedState> runs;
  // Aggregates (mean, sd, se of mean) entrywise and per metric.
  AggregateStat sigma_prime[4][4];
  AggregateStat r_prime[4];
  AggregateStat sigma_omega[4][4];
  AggregateStat r_omega[4];
  AggregateStat lambda_tilde, purity_s, purity_a, nr_db_s, nr_db_a;
  AggregateStat n_total, delta_n, physicality_margin;
  TruthComparison truth;
  double max_entry_se = 0.0;  ///< largest per-entry standard error seen
};

struct PipelineArgs {
  std::optional<std::size_t> reps;           ///< override scenario value
  std::optional<std::uint64_t> master_seed;  ///< override scenario value
  std::optional<std::size_t> bootstrap_resamples;
  EstimatorKind estimator = EstimatorKind::Harmonic;
  std::size_t threads = 0;
};

PipelineResult cmd_pipeline(const Scenario& scenario, const PipelineArgs& args = {});

std::string serialize_pipeline_result(const PipelineResult& result);
std::string format_pipeline_text(const PipelineResult& result);

}  // namespace sbt
