#include "sbt/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "sbt/kv.hpp"

namespace sbt {

void validate(const Scenario& scenario) {
  if (scenario.name.empty()) {
    throw std::invalid_argument("Scenario: name must be nonempty");
  }
  validate(scenario.tmst);
  validate(scenario.cavity);
  validate(scenario.trace);
  if (scenario.raw) validate(*scenario.raw);
  if (scenario.pipeline.n_repetitions < 1) {
    throw std::invalid_argument("Scenario: pipeline.n_repetitions must be >= 1");
  }
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "name",
      "tmst.alpha_re",
      "tmst.alpha_im",
      "tmst.n_sq",
      "tmst.n_th",
      "tmst.r_th",
      "cavity.linewidth_fwhm_hz",
      "cavity.fsr_hz",
      "cavity.sideband_offset_hz",
      "cavity.hf_offset_hz",
      "cavity.detuning_hz",
      "trace.n_samples",
      "trace.visibility",
      "trace.electronic_noise_var",
      "trace.rng_seed",
      "trace.theta_ramp",
      "raw.sample_rate_hz",
      "raw.duration_s",
      "raw.omega_hz",
      "raw.lowpass_cutoff_hz",
      "raw.highpass_cutoff_hz",
      "raw.white_noise_var_per_sample",
      "raw.rng_seed",
      "pipeline.n_repetitions",
      "pipeline.bootstrap_resamples",
      "pipeline.master_seed",
  };
  return keys;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  const KvDocument doc = KvDocument::parse(text, source);
  for (const std::string& key : doc.keys()) {
    if (!known_keys().count(key)) {
      throw std::invalid_argument(source + ": unknown scenario key '" + key + "'");
    }
  }

  Scenario sc;
  sc.name = doc.get_string("name");
  sc.tmst.alpha = {doc.get_double_or("tmst.alpha_re", 0.0), doc.get_double_or("tmst.alpha_im", 0.0)};
  sc.tmst.n_sq = doc.get_double_or("tmst.n_sq", 0.0);
  sc.tmst.n_th = doc.get_double_or("tmst.n_th", 0.0);
  sc.tmst.r_th = doc.get_double_or("tmst.r_th", 0.5);

  sc.cavity.linewidth_fwhm = doc.get_double_or("cavity.linewidth_fwhm_hz", 55e6);
  sc.cavity.fsr = doc.get_double_or("cavity.fsr_hz", 3300e6);
  sc.cavity.sideband_offset = doc.get_double_or("cavity.sideband_offset_hz", 3e6);
  sc.cavity.hf_offset = doc.get_double_or("cavity.hf_offset_hz", 110e6);
  sc.cavity.detuning = doc.get_double_or("cavity.detuning_hz", 0.0);

  sc.trace.n_samples = static_cast<std::size_t>(doc.get_u64_or("trace.n_samples", 100000));
  sc.trace.visibility = doc.get_double_or("trace.visibility", 0.95);
  sc.trace.electronic_noise_var = doc.get_double_or("trace.electronic_noise_var", 0.0);
  sc.trace.rng_seed = doc.get_u64_or("trace.rng_seed", 0);
  const std::string ramp = doc.get_string_or("trace.theta_ramp", "linear");
  if (ramp != "linear") {
    throw std::invalid_argument(source +
                                ": trace.theta_ramp: only 'linear' is supported in scenario "
                                "files (explicit phase lists are an API feature)");
  }

  if (doc.has("raw.sample_rate_hz") || doc.has("raw.duration_s")) {
    RawConfig raw;
    raw.sample_rate = doc.get_double("raw.sample_rate_hz");
    raw.duration = doc.get_double("raw.duration_s");
    raw.omega = doc.get_double_or("raw.omega_hz", 3e6);
    raw.lowpass_cutoff = doc.get_double_or("raw.lowpass_cutoff_hz", 3e5);
    raw.highpass_cutoff = doc.get_double_or("raw.highpass_cutoff_hz", 5e5);
    raw.white_noise_var_per_sample = doc.get_double_or("raw.white_noise_var_per_sample", 0.0);
    raw.rng_seed = doc.get_u64_or("raw.rng_seed", 0);
    sc.raw = raw;
  } else {
    for (const char* key : {"raw.omega_hz", "raw.lowpass_cutoff_hz", "raw.highpass_cutoff_hz",
                            "raw.white_noise_var_per_sample", "raw.rng_seed"}) {
      if (doc.has(key)) {
        throw std::invalid_argument(source + ": '" + key +
                                    "' requires raw.sample_rate_hz and raw.duration_s");
      }
    }
  }

  sc.pipeline.n_repetitions = static_cast<std::size_t>(doc.get_u64_or("pipeline.n_repetitions", 30));
  sc.pipeline.bootstrap_resamples =
      static_cast<std::size_t>(doc.get_u64_or("pipeline.bootstrap_resamples", 500));
  sc.pipeline.master_seed = doc.get_u64_or("pipeline.master_seed", 20160901);

  validate(sc);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  const KvDocument doc = KvDocument::load(path);
  return parse_scenario(doc.serialize(), path);
}

std::string serialize_scenario(const Scenario& scenario) {
  KvDocument doc;
  doc.set("name", scenario.name);
  doc.set_double("tmst.alpha_re", scenario.tmst.alpha.real());
  doc.set_double("tmst.alpha_im", scenario.tmst.alpha.imag());
  doc.set_double("tmst.n_sq", scenario.tmst.n_sq);
  doc.set_double("tmst.n_th", scenario.tmst.n_th);
  doc.set_double("tmst.r_th", scenario.tmst.r_th);
  doc.set_double("cavity.linewidth_fwhm_hz", scenario.cavity.linewidth_fwhm);
  doc.set_double("cavity.fsr_hz", scenario.cavity.fsr);
  doc.set_double("cavity.sideband_offset_hz", scenario.cavity.sideband_offset);
  doc.set_double("cavity.hf_offset_hz", scenario.cavity.hf_offset);
  doc.set_double("cavity.detuning_hz", scenario.cavity.detuning);
  doc.set_u64("trace.n_samples", scenario.trace.n_samples);
  doc.set_double("trace.visibility", scenario.trace.visibility);
  doc.set_double("trace.electronic_noise_var", scenario.trace.electronic_noise_var);
  doc.set_u64("trace.rng_seed", scenario.trace.rng_seed);
  doc.set("trace.theta_ramp", "linear");
  if (scenario.raw) {
    doc.set_double("raw.sample_rate_hz", scenario.raw->sample_rate);
    doc.set_double("raw.duration_s", scenario.raw->duration);
    doc.set_double("raw.omega_hz", scenario.raw->omega);
    doc.set_double("raw.lowpass_cutoff_hz", scenario.raw->lowpass_cutoff);
    doc.set_double("raw.highpass_cutoff_hz", scenario.raw->highpass_cutoff);
    doc.set_double("raw.white_noise_var_per_sample", scenario.raw->white_noise_var_per_sample);
    doc.set_u64("raw.rng_seed", scenario.raw->rng_seed);
  }
  doc.set_u64("pipeline.n_repetitions", scenario.pipeline.n_repetitions);
  doc.set_u64("pipeline.bootstrap_resamples", scenario.pipeline.bootstrap_resamples);
  doc.set_u64("pipeline.master_seed", scenario.pipeline.master_seed);
  return doc.serialize("sbtomo scenario v1");
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << serialize_scenario(scenario);
}

namespace {

Scenario base_scenario(const std::string& name, std::uint64_t seed) {
  Scenario sc;
  sc.name = name;
  sc.trace.n_samples = 100000;
  // Loss-free acquisition: the calibration parameters below describe the
  // state as seen by the detector, so the ground truth equals the target.
  sc.trace.visibility = 1.0;
  sc.trace.electronic_noise_var = 0.0;
  sc.trace.rng_seed = seed;
  sc.pipeline.n_repetitions = 30;
  sc.pipeline.bootstrap_resamples = 500;
  sc.pipeline.master_seed = seed * 1000003ULL + 17;
  return sc;
}

// Invert A = 1 + 2 Nsq (1+Nth) + Nth and C = 2 (1+Nth) sqrt(Nsq (1+Nsq))
// for a symmetric state (r_th = 1/2), given the squeezed and antisqueezed
// variances A-C and A+C. Uses (1+Nth)^2 = A^2 - C^2.
TmstParams symmetric_params_from_variances(double a_minus_c, double a_plus_c) {
  const double a = 0.5 * (a_minus_c + a_plus_c);
  const double u = std::sqrt(a_minus_c * a_plus_c);
  TmstParams params;
  params.n_th = u - 1.0;
  params.n_sq = (a - u) / (2.0 * u);
  params.r_th = 0.5;
  return params;
}

}  // namespace

Scenario preset_scenario(const std::string& name) {
  if (name == "vacuum") {
    Scenario sc = base_scenario(name, 1001);
    sc.tmst = TmstParams{{0.0, 0.0}, 0.0, 0.0, 0.5};
    return sc;
  }
  if (name == "coherent") {
    Scenario sc = base_scenario(name, 2001);
    sc.tmst = TmstParams{{1.0, 0.0}, 0.0, 0.0, 0.5};
    return sc;
  }
  if (name == "squeezed") {
    Scenario sc = base_scenario(name, 3001);
    sc.tmst = TmstParams{{0.0, 0.0}, 0.320, 0.471, 0.5};
    return sc;
  }
  if (name == "squeezed-coherent") {
    Scenario sc = base_scenario(name, 4001);
    sc.tmst = symmetric_params_from_variances(0.55, 4.174);
    sc.tmst.alpha = {1.0, 0.0};
    return sc;
  }
  if (name == "coupled") {
    // Detuned cavity; the thermal fraction follows the sideband transmission
    // (r_th = tau+), which keeps dN = (tau+ - tau-) N consistent for n_sq = 0.
    Scenario sc = base_scenario(name, 5001);
    sc.cavity.detuning = 20e6;
    sc.tmst.n_sq = 0.0;
    sc.tmst.n_th = 2.0;
    sc.tmst.r_th = cavity_transmission(sc.cavity).readout.tau_plus;
    return sc;
  }
  throw std::invalid_argument("unknown preset scenario '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"vacuum", "coherent", "squeezed", "squeezed-coherent", "coupled"};
}

bool is_preset(const std::string& name) {
  for (const auto& preset : preset_names()) {
    if (preset == name) return true;
  }
  return false;
}

Scenario resolve_scenario(const std::string& name_or_path) {
  if (is_preset(name_or_path)) return preset_scenario(name_or_path);
  if (!std::filesystem::exists(name_or_path)) {
    throw std::runtime_error("scenario '" + name_or_path +
                             "' is neither a preset nor an existing file");
  }
  return load_scenario(name_or_path);
}

}  // namespace sbt
