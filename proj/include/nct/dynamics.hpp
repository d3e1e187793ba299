#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nct/connectome.hpp"
#include "nct/errors.hpp"
#include "nct/matrix.hpp"

namespace nct::dynamics {

/// Control input u(k): the same amplitude is injected into every node of
/// `control_nodes` at each listed step; zero everywhere else.
struct InputSchedule {
  std::vector<int> control_nodes;
  std::map<long, double> samples;
  long duration = 0;  // steps after which the schedule must be silent
};

inline InputSchedule impulse(std::vector<int> nodes, double amplitude, long at_step = 0) {
  InputSchedule s;
  s.control_nodes = std::move(nodes);
  s.samples[at_step] = amplitude;
  s.duration = at_step + 1;
  return s;
}

/// Scalar output of a simulated run. Each sample already holds the squared
/// signal magnitude (||x(k)||^2 by default), so power over a window is the
/// plain sum of samples.
struct SignalTrace {
  double sampling_rate = 200.0;
  std::vector<double> samples;
  long seizure_end_index = -1;
  std::optional<Matrix> state_history;  // n x (steps+1), column k = x(k)

  long length() const { return static_cast<long>(samples.size()); }
};

struct SimulateOptions {
  bool store_states = true;
  double sampling_rate = 200.0;
};

/// Exact recursion x(k+1) = A x(k) + B u(k) for k = 0..steps-1. The trace
/// covers k = 0..steps inclusive.
inline SignalTrace simulate_lti(const connectome::ConnectomeMatrix& m,
                                const InputSchedule& schedule, const Vector& x0, long steps,
                                const SimulateOptions& opt = {}) {
  if (m.spectral_radius >= 1.0)
    throw analysis_error("simulate_lti: spectral radius >= 1 (unstable system)");
  if (steps < 1) throw input_error("simulate_lti: steps must be >= 1");
  if (x0.size() != m.n) throw input_error("simulate_lti: initial state dimension mismatch");
  for (int node : schedule.control_nodes)
    if (node < 0 || node >= m.n) throw input_error("simulate_lti: control node out of range");
  for (const auto& [k, u] : schedule.samples) {
    if (k < 0 || k >= schedule.duration)
      throw input_error("simulate_lti: input sample outside schedule duration");
    if (!std::isfinite(u)) throw input_error("simulate_lti: non-finite input amplitude");
  }

  SignalTrace trace;
  trace.sampling_rate = opt.sampling_rate;
  trace.samples.resize(static_cast<std::size_t>(steps) + 1);
  if (opt.store_states) trace.state_history = Matrix::Zero(m.n, steps + 1);

  Vector x = x0;
  trace.samples[0] = x.squaredNorm();
  if (opt.store_states) trace.state_history->col(0) = x;
  for (long k = 0; k < steps; ++k) {
    Vector next = m.adjacency * x;
    auto it = schedule.samples.find(k);
    if (it != schedule.samples.end() && it->second != 0.0)
      for (int node : schedule.control_nodes) next(node) += it->second;
    x = std::move(next);
    trace.samples[static_cast<std::size_t>(k) + 1] = x.squaredNorm();
    if (opt.store_states) trace.state_history->col(k + 1) = x;
  }
  return trace;
}

/// Power over the half-open window [start, end): the sum of the stored
/// squared-magnitude samples.
inline double signal_power(const SignalTrace& trace, long start, long end) {
  if (start < 0 || end < start || end > trace.length())
    throw input_error("signal_power: bad window range");
  double acc = 0.0;
  for (long k = start; k < end; ++k) acc += trace.samples[static_cast<std::size_t>(k)];
  return acc;
}

/// Clinical windowing protocol for the suppression index: mean power of
/// `window_count` contiguous windows on each side of the seizure endpoint,
/// with a guard interval around the endpoint discarded.
struct PsiConfig {
  double window_seconds = 1.28;
  int window_count = 3;
  double guard_seconds = 3.84;
  double sampling_rate = 200.0;
};

struct PsiWindows {
  long window_samples = 0;
  long guard_samples = 0;
  long guard_before = 0;  // guard samples discarded before the endpoint
  long guard_after = 0;
  long seizure_start = 0;      // first sample of the earliest seizure-side window
  long termination_start = 0;  // first sample of the first termination-side window
};

inline PsiWindows psi_windows(const PsiConfig& cfg, long seizure_end, long trace_length) {
  if (cfg.window_seconds <= 0.0 || cfg.window_count < 1 || cfg.sampling_rate <= 0.0 ||
      cfg.guard_seconds < 0.0)
    throw input_error("psi: invalid window configuration");
  PsiWindows w;
  w.window_samples = std::lround(cfg.window_seconds * cfg.sampling_rate);
  w.guard_samples = std::lround(cfg.guard_seconds * cfg.sampling_rate);
  if (w.window_samples < 1) throw input_error("psi: window shorter than one sample");
  // guard split symmetrically around the endpoint
  w.guard_before = w.guard_samples / 2;
  w.guard_after = w.guard_samples - w.guard_before;
  const long span = static_cast<long>(cfg.window_count) * w.window_samples;
  w.seizure_start = seizure_end - w.guard_before - span;
  w.termination_start = seizure_end + w.guard_after;
  if (seizure_end < 0 || seizure_end > trace_length)
    throw input_error("psi: seizure endpoint outside trace");
  if (w.seizure_start < 0 || w.termination_start + span > trace_length)
    throw analysis_error("psi: trace too short for the window protocol");
  return w;
}

struct PsiResult {
  double value = 0.0;  // clamped to [0, 1]
  double raw = 0.0;
  bool clamped = false;
  double seizure_power_mean = 0.0;
  double termination_power_mean = 0.0;
  PsiWindows windows;
};

/// PSI = 1 - meanPower(termination windows) / meanPower(seizure windows).
/// Negative raw values (termination louder than seizure) are clamped to 0
/// with the `clamped` flag set.
inline PsiResult compute_psi(const SignalTrace& trace, const PsiConfig& cfg = {}) {
  if (trace.seizure_end_index < 0)
    throw input_error("compute_psi: trace has no seizure endpoint marker");
  PsiResult r;
  r.windows = psi_windows(cfg, trace.seizure_end_index, trace.length());
  const long w = r.windows.window_samples;
  double seizure = 0.0, termination = 0.0;
  for (int c = 0; c < cfg.window_count; ++c) {
    seizure += signal_power(trace, r.windows.seizure_start + c * w,
                            r.windows.seizure_start + (c + 1) * w);
    termination += signal_power(trace, r.windows.termination_start + c * w,
                                r.windows.termination_start + (c + 1) * w);
  }
  r.seizure_power_mean = seizure / cfg.window_count;
  r.termination_power_mean = termination / cfg.window_count;
  if (r.seizure_power_mean <= 0.0)
    throw analysis_error("compute_psi: seizure-phase power is zero (ratio undefined)");
  r.raw = 1.0 - r.termination_power_mean / r.seizure_power_mean;
  r.value = r.raw;
  if (r.value < 0.0) {
    r.value = 0.0;
    r.clamped = true;
  }
  return r;
}

struct EctOptions {
  double endpoint_fraction = 0.1;      // endpoint = first sample below this fraction of peak
  std::optional<long> fixed_endpoint;  // override detection (shared endpoint across subjects)
  // Constant added to every squared-magnitude sample before power and PSI
  // are computed. Models the postictal baseline level shared across
  // subjects; 0 keeps the pure noise-free response.
  double termination_floor = 0.0;
  bool store_states = false;
};

struct EctResult {
  double output_power = 0.0;   // cumulative power of the whole output response
  double seizure_power = 0.0;  // power over [0, seizure_end)
  std::optional<PsiResult> psi;
  std::string psi_error;  // set when the trace cannot host the window protocol
  long seizure_end_index = -1;
  SignalTrace trace;
};

/// Simulated stimulation run: uniform impulse of `amplitude` into every node
/// at k = 0 from a resting state, autonomous decay afterwards. The seizure
/// endpoint is the first sample after the peak falling below
/// `endpoint_fraction` of the peak.
inline EctResult ect_experiment(const connectome::ConnectomeMatrix& m, double amplitude,
                                const PsiConfig& cfg, long steps, const EctOptions& opt = {}) {
  if (amplitude == 0.0) throw input_error("ect_experiment: zero input amplitude is degenerate");
  if (opt.endpoint_fraction <= 0.0 || opt.endpoint_fraction >= 1.0)
    throw input_error("ect_experiment: endpoint fraction must be in (0, 1)");

  std::vector<int> all_nodes(static_cast<std::size_t>(m.n));
  for (int i = 0; i < m.n; ++i) all_nodes[static_cast<std::size_t>(i)] = i;
  SimulateOptions sim_opt;
  sim_opt.store_states = opt.store_states;
  sim_opt.sampling_rate = cfg.sampling_rate;
  EctResult r;
  r.trace = simulate_lti(m, impulse(all_nodes, amplitude), Vector::Zero(m.n), steps, sim_opt);

  if (opt.fixed_endpoint) {
    if (*opt.fixed_endpoint < 0 || *opt.fixed_endpoint > r.trace.length())
      throw input_error("ect_experiment: fixed endpoint outside trace");
    r.seizure_end_index = *opt.fixed_endpoint;
  } else {
    long peak_index = 0;
    double peak = 0.0;
    for (long k = 0; k < r.trace.length(); ++k)
      if (r.trace.samples[static_cast<std::size_t>(k)] > peak) {
        peak = r.trace.samples[static_cast<std::size_t>(k)];
        peak_index = k;
      }
    long end = -1;
    for (long k = peak_index + 1; k < r.trace.length(); ++k)
      if (r.trace.samples[static_cast<std::size_t>(k)] < opt.endpoint_fraction * peak) {
        end = k;
        break;
      }
    if (end < 0)
      throw analysis_error("ect_experiment: output never decayed below threshold (horizon too short)");
    r.seizure_end_index = end;
  }
  r.trace.seizure_end_index = r.seizure_end_index;

  if (opt.termination_floor > 0.0)
    for (auto& sample : r.trace.samples) sample += opt.termination_floor;

  r.output_power = signal_power(r.trace, 0, r.trace.length());
  r.seizure_power = signal_power(r.trace, 0, r.seizure_end_index);
  try {
    r.psi = compute_psi(r.trace, cfg);
  } catch (const std::exception& e) {
    r.psi_error = e.what();
  }
  return r;
}

}  // namespace nct::dynamics
