#include "sbt/trace_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sbt/kv.hpp"

namespace sbt {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << content;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw std::invalid_argument(source + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

std::string serialize_trace(const HomodyneTrace& trace) {
  std::ostringstream out;
  out << "# sbtomo trace v1\n";
  out << "# scenario: " << trace.meta.scenario << "\n";
  out << "# psi: " << format_g17(trace.psi) << "\n";
  out << "# n_samples: " << trace.theta.size() << "\n";
  out << "# seed: " << trace.meta.config.rng_seed << "\n";
  out << "# visibility: " << format_g17(trace.meta.config.visibility) << "\n";
  out << "# electronic_noise_var: " << format_g17(trace.meta.config.electronic_noise_var) << "\n";
  out << "# theta_ramp: " << (trace.meta.config.explicit_phases.empty() ? "linear" : "explicit")
      << "\n";
  for (std::size_t i = 0; i < trace.theta.size(); ++i) {
    out << format_g17(trace.theta[i]) << "," << format_g17(trace.x[i]) << "\n";
  }
  return out.str();
}

void write_trace(const HomodyneTrace& trace, const std::string& path) {
  write_file(path, serialize_trace(trace));
}

HomodyneTrace parse_trace(const std::string& text, const std::string& source) {
  HomodyneTrace trace;
  std::map<std::string, std::string> header;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto colon = t.find(':');
      if (colon == std::string::npos) continue;  // banner or free comment
      const std::string key = trim(t.substr(1, colon - 1));
      const std::string value = trim(t.substr(colon + 1));
      header[key] = value;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos) {
      parse_fail(source, line_no, "expected 'theta,x' pair, got '" + t + "'");
    }
    double theta = 0.0, x = 0.0;
    try {
      theta = parse_double(trim(t.substr(0, comma)), "theta");
      x = parse_double(trim(t.substr(comma + 1)), "x");
    } catch (const std::invalid_argument& err) {
      parse_fail(source, line_no, err.what());
    }
    trace.theta.push_back(theta);
    trace.x.push_back(x);
  }

  const auto get = [&](const char* key) -> std::string {
    const auto it = header.find(key);
    if (it == header.end()) {
      throw std::invalid_argument(source + ": missing trace header '" + key + "'");
    }
    return it->second;
  };

  trace.psi = parse_double(get("psi"), source + ": psi");
  const std::uint64_t declared = parse_u64(get("n_samples"), source + ": n_samples");
  trace.meta.scenario = header.count("scenario") ? header["scenario"] : "";
  trace.meta.config.rng_seed = parse_u64(get("seed"), source + ": seed");
  trace.meta.config.visibility = parse_double(get("visibility"), source + ": visibility");
  trace.meta.config.electronic_noise_var =
      parse_double(get("electronic_noise_var"), source + ": electronic_noise_var");
  trace.meta.config.n_samples = declared;

  if (declared != trace.theta.size()) {
    throw std::invalid_argument(source + ": header declares " + std::to_string(declared) +
                                " samples but " + std::to_string(trace.theta.size()) +
                                " data lines found");
  }
  return trace;
}

HomodyneTrace read_trace(const std::string& path) { return parse_trace(read_file(path), path); }

void write_trace_set(const TraceSet& traces, const std::string& dir) {
  fs::create_directories(dir);
  write_trace(traces.trace_s, (fs::path(dir) / kTraceFileS).string());
  write_trace(traces.trace_a, (fs::path(dir) / kTraceFileA).string());
  write_trace(traces.trace_plus, (fs::path(dir) / kTraceFilePlus).string());
  write_trace(traces.trace_minus, (fs::path(dir) / kTraceFileMinus).string());
}

TraceSet read_trace_set(const std::string& dir) {
  std::vector<std::string> missing;
  for (const char* name : {kTraceFileS, kTraceFileA, kTraceFilePlus, kTraceFileMinus}) {
    if (!fs::exists(fs::path(dir) / name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw std::runtime_error("trace directory '" + dir + "' is missing: " + list);
  }
  TraceSet traces;
  traces.trace_s = read_trace((fs::path(dir) / kTraceFileS).string());
  traces.trace_a = read_trace((fs::path(dir) / kTraceFileA).string());
  traces.trace_plus = read_trace((fs::path(dir) / kTraceFilePlus).string());
  traces.trace_minus = read_trace((fs::path(dir) / kTraceFileMinus).string());
  validate(traces);
  return traces;
}

void write_pdh(const CavityTransmission& transmission, const std::string& path) {
  KvDocument doc;
  doc.set_double("tau_plus", transmission.readout.tau_plus);
  doc.set_double("tau_minus", transmission.readout.tau_minus);
  doc.set_double("t_plus", transmission.t_plus);
  doc.set_double("t_minus", transmission.t_minus);
  doc.save(path, "sbtomo pdh v1");
}

CavityTransmission read_pdh(const std::string& path) {
  const KvDocument doc = KvDocument::load(path);
  CavityTransmission out;
  out.readout.tau_plus = doc.get_double("tau_plus");
  out.readout.tau_minus = doc.get_double("tau_minus");
  out.t_plus = doc.get_double_or("t_plus", out.readout.tau_plus);
  out.t_minus = doc.get_double_or("t_minus", out.readout.tau_minus);
  validate(out.readout);
  return out;
}

namespace {

void set_state(KvDocument& doc, const std::string& prefix, const GaussianTwoModeState& state) {
  doc.set(prefix + ".basis", to_string(state.basis));
  for (int i = 0; i < 4; ++i) {
    doc.set_double(prefix + ".r." + std::to_string(i), state.first_moments(i));
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      doc.set_double(prefix + ".cm." + std::to_string(i) + "." + std::to_string(j),
                     state.cm(i, j));
    }
  }
}

GaussianTwoModeState get_state(const KvDocument& doc, const std::string& prefix) {
  GaussianTwoModeState state;
  const std::string basis = doc.get_string(prefix + ".basis");
  if (basis == "sideband_pm") {
    state.basis = ModalBasis::SidebandPM;
  } else if (basis == "sym_antisym") {
    state.basis = ModalBasis::SymAntisym;
  } else {
    throw std::invalid_argument(doc.source() + ": unknown basis '" + basis + "'");
  }
  for (int i = 0; i < 4; ++i) {
    state.first_moments(i) = doc.get_double(prefix + ".r." + std::to_string(i));
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      state.cm(i, j) = doc.get_double(prefix + ".cm." + std::to_string(i) + "." + std::to_string(j));
    }
  }
  if (symmetry_defect(state.cm) > kSymmetryTol) {
    throw std::invalid_argument(doc.source() + ": state covariance matrix is not symmetric");
  }
  return state;
}

}  // namespace

void write_state(const GaussianTwoModeState& state, const std::string& path) {
  KvDocument doc;
  set_state(doc, "state", state);
  doc.save(path, "sbtomo state v1");
}

GaussianTwoModeState read_state(const std::string& path) {
  return get_state(KvDocument::load(path), "state");
}

void write_ground_truth(const GroundTruth& truth, const std::string& path) {
  KvDocument doc;
  doc.set_double("tmst.alpha_re", truth.tmst.alpha.real());
  doc.set_double("tmst.alpha_im", truth.tmst.alpha.imag());
  doc.set_double("tmst.n_sq", truth.tmst.n_sq);
  doc.set_double("tmst.n_th", truth.tmst.n_th);
  doc.set_double("tmst.r_th", truth.tmst.r_th);
  set_state(doc, "state", truth.state_sa);
  doc.save(path, "sbtomo ground-truth v1");
}

GroundTruth read_ground_truth(const std::string& path) {
  const KvDocument doc = KvDocument::load(path);
  GroundTruth truth;
  truth.tmst.alpha = {doc.get_double("tmst.alpha_re"), doc.get_double("tmst.alpha_im")};
  truth.tmst.n_sq = doc.get_double("tmst.n_sq");
  truth.tmst.n_th = doc.get_double("tmst.n_th");
  truth.tmst.r_th = doc.get_double("tmst.r_th");
  truth.state_sa = get_state(doc, "state");
  return truth;
}

std::optional<GroundTruth> try_read_ground_truth(const std::string& dir) {
  const fs::path path = fs::path(dir) / kGroundTruthFile;
  if (!fs::exists(path)) return std::nullopt;
  return read_ground_truth(path.string());
}

}  // namespace sbt
