#pragma once

#include <optional>
#include <string>

#include "sbt/gaussian_state.hpp"
#include "sbt/reconstruction.hpp"
#include "sbt/sideband_model.hpp"
#include "sbt/trace_synth.hpp"

namespace sbt {

// Trace files are text: '#'-prefixed "key: value" header lines, then one
// "theta,x" pair per line with 17 significant digits. Write -> read -> write
// reproduces identical bytes.

std::string serialize_trace(const HomodyneTrace& trace);
void write_trace(const HomodyneTrace& trace, const std::string& path);
HomodyneTrace parse_trace(const std::string& text, const std::string& source = "<string>");
HomodyneTrace read_trace(const std::string& path);

// Fixed file names inside a trace directory.
inline constexpr const char* kTraceFileS = "trace_s.txt";
inline constexpr const char* kTraceFileA = "trace_a.txt";
inline constexpr const char* kTraceFilePlus = "trace_plus.txt";
inline constexpr const char* kTraceFileMinus = "trace_minus.txt";
inline constexpr const char* kPdhFile = "pdh.txt";
inline constexpr const char* kGroundTruthFile = "ground_truth.txt";

void write_trace_set(const TraceSet& traces, const std::string& dir);
TraceSet read_trace_set(const std::string& dir);

void write_pdh(const CavityTransmission& transmission, const std::string& path);
CavityTransmission read_pdh(const std::string& path);

/// Serialized Gaussian state (basis tag, R, cm), kv format.
void write_state(const GaussianTwoModeState& state, const std::string& path);
GaussianTwoModeState read_state(const std::string& path);

/// Ground-truth sidecar: generating TMST parameters plus the SymAntisym
/// state they produce.
struct GroundTruth {
  TmstParams tmst;
  GaussianTwoModeState state_sa;
};

void write_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth read_ground_truth(const std::string& path);
std::optional<GroundTruth> try_read_ground_truth(const std::string& dir);

}  // namespace sbt
