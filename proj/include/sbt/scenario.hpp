#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbt/gaussian_state.hpp"
#include "sbt/sideband_model.hpp"
#include "sbt/trace_synth.hpp"

namespace sbt {

struct PipelineConfig {
  std::size_t n_repetitions = 30;
  std::size_t bootstrap_resamples = 500;
  std::uint64_t master_seed = 20160901;
};

/// Everything needed to run one simulated experiment end to end.
struct Scenario {
  std::string name;
  TmstParams tmst;
  CavityModel cavity;
  TraceConfig trace;
  std::optional<RawConfig> raw;
  PipelineConfig pipeline;
};

void validate(const Scenario& scenario);

Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::string& path);

/// Bundled presets: vacuum, coherent, squeezed, squeezed-coherent, coupled.
/// The squeezed and squeezed-coherent presets carry the calibration ground
/// truth matching the published reconstruction targets; coupled derives the
/// thermal fraction from the cavity transmission (r_th = tau+).
Scenario preset_scenario(const std::string& name);
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);

/// Resolve a --scenario argument: preset name or path to a scenario file.
Scenario resolve_scenario(const std::string& name_or_path);

}  // namespace sbt
