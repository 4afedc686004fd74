#pragma once

#include <optional>
#include <string>

#include "sbt/reconstruction.hpp"
#include "sbt/trace_io.hpp"

namespace sbt {

enum class ReportFormat { Text, Machine };
ReportFormat report_format_from_string(const std::string& name);

/// Ground-truth comparison block attached to a report when the sidecar is
/// available.
struct TruthComparison {
  TmstParams tmst;
  Eigen::Vector4d r_prime;
  Eigen::Matrix4d sigma_prime;
  Eigen::Vector4d r_omega;
  Eigen::Matrix4d sigma_omega;
  double lambda_tilde = 0.0;
  double purity_s = 0.0, purity_a = 0.0;
  double nr_db_s = 0.0, nr_db_a = 0.0;
  double n_total = 0.0;
  double delta_n = 0.0;
};

TruthComparison truth_comparison(const GroundTruth& truth);

/// Full reconstruction record: mirrors the published table layout (R and
/// sigma_Omega with uncertainties) plus the S/A-basis matrices and metrics.
struct ReconstructionReport {
  std::string scenario;
  EstimatorKind estimator = EstimatorKind::Harmonic;
  std::size_t n_samples = 0;
  std::size_t bootstrap_resamples = 0;
  ReconstructedState state;
  std::optional<TruthComparison> truth;
};

ReconstructionReport make_report(const ReconstructedState& state, const std::string& scenario,
                                 std::size_t n_samples, std::size_t bootstrap_resamples,
                                 const std::optional<GroundTruth>& truth);

/// Machine format: flat kv, lossless round trip (write -> read -> write is
/// byte identical).
std::string serialize_report(const ReconstructionReport& report);
ReconstructionReport parse_report(const std::string& text, const std::string& source = "<string>");
void write_report(const ReconstructionReport& report, const std::string& path);
ReconstructionReport read_report(const std::string& path);

/// Human-readable aligned table.
std::string format_report_text(const ReconstructionReport& report);

}  // namespace sbt
