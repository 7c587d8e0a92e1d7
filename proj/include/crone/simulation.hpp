#pragma once

// Fixed-step hybrid simulation of the reset loop, trace metrics and
// stepped-sine sensitivity estimation.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "crone/lti.hpp"
#include "crone/stability.hpp"
#include "crone/trajectory.hpp"

namespace crone {

struct FeedforwardSpec {
  double m = 0;  // acceleration coefficient
  double c = 0;  // velocity coefficient
};

// Sine injected at the measurement point.
struct NoiseSpec {
  double amplitude = 0;
  double freq_hz = 0;
};

// Force at the plant input: a pulse of the given width, or a step when width <= 0.
struct DisturbanceSpec {
  double amplitude = 0;
  double onset = 0;
  double width = 0;
  double value(double t) const;
};

struct SimulationConfig {
  double step = 5e-5;
  double duration = 1.0;
  double metric_start = 0.0;  // start of the window for rms / power / peak
  std::optional<ReferenceSpec> reference;
  std::optional<FeedforwardSpec> feedforward;
  std::optional<NoiseSpec> noise;
  std::optional<DisturbanceSpec> disturbance;
  double divergence_bound = 1e12;
  Eigen::VectorXd initial_state;  // empty: start at rest

  void validate() const;
};

struct TraceMetrics {
  double rms_error = 0;
  double avg_power = 0;
  double peak = 0;
  double peak_time = 0;
  double settling_time = std::numeric_limits<double>::infinity();
  bool settled = false;
};

struct SimulationTrace {
  std::vector<double> time, e, u, y;
  std::vector<std::uint32_t> events;  // resets in (t[k-1], t[k]]
  std::vector<double> event_times;
  std::vector<double> event_residuals;  // |e| where each applied jump was located
  double window_start = 0;
  TraceMetrics metrics;
};

SimulationTrace simulate(const ClosedLoop& cl, const SimulationConfig& cfg);

enum class MetricKind { RmsError, AvgPower, Peak, SettlingTime };

double rms(const std::vector<double>& v, std::size_t first = 0);
double mean_square(const std::vector<double>& v, std::size_t first = 0);

struct PeakResult {
  double value = 0;
  double time = 0;
  std::size_t index = 0;
};
// Largest |v|, refined by a parabola through the neighbouring samples.
PeakResult peak_of(const std::vector<double>& t, const std::vector<double>& v, std::size_t first = 0);

struct SettlingResult {
  double time = std::numeric_limits<double>::infinity();  // relative to the peak
  bool settled = false;
};
// Time after the peak until |v| falls below fraction * peak for good.
SettlingResult settling_time(const std::vector<double>& t, const std::vector<double>& v, double fraction = 0.15,
                             std::size_t first = 0);

double noise_reduction_db(double reference_power, double test_power);

TraceMetrics compute_metrics(const SimulationTrace& trace);
double metric(const SimulationTrace& trace, MetricKind kind);

struct SweepSpec {
  std::vector<double> freqs_hz;
  double amplitude = 1e-6;
  double base_step = 5e-5;
  int settle_cycles = 20;
  int measure_cycles = 20;
  double settle_time_constants = 12.0;
  double consistency_tolerance = 0.01;
};

struct SensitivityEstimate {
  FrequencyGridd grid;
  std::vector<std::complex<double>> S, T;
  std::vector<double> freqs_hz;    // accepted points
  std::vector<double> flagged_hz;  // excluded points
};

SensitivityEstimate estimate_sensitivity(const ClosedLoop& cl, const SweepSpec& sweep);

// Analytic S = 1/(1+L), T = L/(1+L) of a linear loop from its closed-loop model.
std::pair<std::complex<double>, std::complex<double>> linear_sensitivity(const ClosedLoop& cl, double omega);

}  // namespace crone
