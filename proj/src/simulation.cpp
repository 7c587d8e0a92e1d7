#include "crone/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crone/flow.hpp"

namespace crone {

namespace {
constexpr double pi = std::numbers::pi;

int sgn(double v) { return (v > 0) - (v < 0); }

// Exogenous signals of one run. Forces are split into the smooth feedforward
// part and the per-step disturbance value.
struct Exogenous {
  std::optional<FourthOrderProfile> profile;
  std::optional<FeedforwardSpec> ff;
  std::optional<NoiseSpec> noise;

  double reference(double t) const { return profile ? (*profile)(t).p : 0.0; }
  double noise_at(double t) const {
    return noise ? noise->amplitude * std::sin(2 * pi * noise->freq_hz * t) : 0.0;
  }
  double w(double t) const { return reference(t) - noise_at(t); }
  double force(double t) const {
    if (!profile || !ff) return 0.0;
    const auto s = (*profile)(t);
    return ff->m * s.a + ff->c * s.v;
  }
  Eigen::Vector2d v(double t, double d) const { return {w(t), force(t) + d}; }
};

class HybridStepper {
 public:
  HybridStepper(const ClosedLoop& cl, const Exogenous& ex, double h)
      : cl_(cl), ex_(ex), h_(h) {
    MatrixX<double> B(cl.states(), 2);
    B << cl.B_w, cl.B_f;
    prop_ = Rk4Propagator<double>(cl.A, B, h);
  }

  double error(const Eigen::VectorXd& x, double t) const { return ex_.w(t) - cl_.C_y.dot(x); }

  Eigen::VectorXd flow(const Eigen::VectorXd& x, double t, double dt, double d) const {
    return prop_.partial(x, ex_.v(t, d), ex_.v(t + dt / 2, d), ex_.v(t + dt, d), dt);
  }

  Eigen::VectorXd full_step(const Eigen::VectorXd& x, double t0, double t1, double d) const {
    return prop_.step(x, ex_.v(t0, d), ex_.v(t0 + h_ / 2, d), ex_.v(t1, d));
  }

  void jump(Eigen::VectorXd& x) const {
    for (auto i : cl_.reset_indices) x[i] *= cl_.jump[i];
  }

  // Crossing time inside [ta, ta + dt] by Illinois-modified regula falsi.
  double locate(const Eigen::VectorXd& xs, double ta, double dt, double d, double fa, double fb) const {
    const double tol = 1e-13 * std::max(std::abs(fa), std::abs(fb));
    double a = 0, b = dt, c = dt;
    int side = 0;
    for (int it = 0; it < 100; ++it) {
      c = (a * fb - b * fa) / (fb - fa);
      if (!(c > a && c < b)) c = (a + b) / 2;
      const double fc = error(flow(xs, ta, c, d), ta + c);
      if (std::abs(fc) <= tol || (b - a) <= 1e-15 * h_) break;
      if (sgn(fc) == sgn(fb)) {
        b = c;
        fb = fc;
        if (side == -1) fa /= 2;
        side = -1;
      } else {
        a = c;
        fa = fc;
        if (side == 1) fb /= 2;
        side = 1;
      }
    }
    return c;
  }

 private:
  const ClosedLoop& cl_;
  const Exogenous& ex_;
  double h_;
  Rk4Propagator<double> prop_;
};
}  // namespace

double DisturbanceSpec::value(double t) const {
  if (t < onset) return 0.0;
  if (width > 0 && t >= onset + width) return 0.0;
  return amplitude;
}

void SimulationConfig::validate() const {
  if (!(step > 0) || !std::isfinite(step)) throw ConfigError("simulation step must be positive");
  if (!(duration >= 10 * step)) throw ConfigError("duration must be at least ten steps");
  if (!(metric_start >= 0 && metric_start < duration)) throw ConfigError("metric window must start inside the run");
  if (noise && (!(noise->freq_hz > 0) || !std::isfinite(noise->amplitude)))
    throw ConfigError("noise needs a positive frequency and finite amplitude");
  if (feedforward && !reference) throw ConfigError("feedforward requires a reference profile");
  if (disturbance && !std::isfinite(disturbance->amplitude)) throw ConfigError("disturbance amplitude must be finite");
}

SimulationTrace simulate(const ClosedLoop& cl, const SimulationConfig& cfg) {
  cfg.validate();
  Exogenous ex;
  if (cfg.reference) ex.profile.emplace(*cfg.reference);
  ex.ff = cfg.feedforward;
  ex.noise = cfg.noise;
  const double h = cfg.step;
  const auto K = static_cast<std::size_t>(std::llround(cfg.duration / h));
  HybridStepper stepper(cl, ex, h);
  const bool resets = !cl.identity_jump();

  SimulationTrace tr;
  tr.time.reserve(K + 1);
  tr.e.reserve(K + 1);
  tr.u.reserve(K + 1);
  tr.y.reserve(K + 1);
  tr.events.reserve(K + 1);
  tr.window_start = cfg.metric_start;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(cl.states());
  if (cfg.initial_state.size() > 0) {
    if (cfg.initial_state.size() != cl.states()) throw ConfigError("initial state has the wrong dimension");
    x = cfg.initial_state;
  }
  auto record = [&](double t, std::uint32_t events) {
    const double e = stepper.error(x, t);
    tr.time.push_back(t);
    tr.e.push_back(e);
    tr.y.push_back(cl.C_y.dot(x));
    tr.u.push_back(cl.C_u.dot(x) + cl.D_R * e + ex.force(t));
    tr.events.push_back(events);
  };
  record(0.0, 0);
  int last_sign = sgn(tr.e.front());

  for (std::size_t k = 0; k < K; ++k) {
    const double t0 = double(k) * h;
    const double t1 = double(k + 1) * h;
    const double d = cfg.disturbance ? cfg.disturbance->value(t0 + h / 2) : 0.0;
    const double e0 = stepper.error(x, t0);
    Eigen::VectorXd x1 = stepper.full_step(x, t0, t1, d);
    const double e1 = stepper.error(x1, t1);
    const int s1 = sgn(e1);
    std::uint32_t events = 0;
    const bool crossed = last_sign != 0 && s1 != last_sign;
    if (crossed && !resets) {
      // Identity jump: keep the unsplit step, only log the event.
      const double frac = std::abs(e0) + std::abs(e1) > 0 ? std::abs(e0) / (std::abs(e0) + std::abs(e1)) : 1.0;
      tr.event_times.push_back(t0 + frac * (t1 - t0));
      ++events;
      x = x1;
      last_sign = s1;
    } else if (crossed) {
      const double sub = h / 10;
      Eigen::VectorXd xs = x;
      for (int j = 0; j < 10; ++j) {
        double ta = t0 + j * sub;
        const double tb = j == 9 ? t1 : t0 + (j + 1) * sub;
        while (true) {
          const double dt = tb - ta;
          Eigen::VectorXd xe = stepper.flow(xs, ta, dt, d);
          const double ee = stepper.error(xe, tb);
          const int se = sgn(ee);
          if (last_sign == 0) {
            last_sign = se;
            xs = xe;
            break;
          }
          if (se == last_sign) {
            xs = xe;
            break;
          }
          if (se == 0) {
            stepper.jump(xe);
            tr.event_times.push_back(tb);
            tr.event_residuals.push_back(0.0);
            ++events;
            last_sign = 0;
            xs = xe;
            break;
          }
          double fa = stepper.error(xs, ta);
          if (sgn(fa) != last_sign) fa = last_sign * std::max(std::abs(fa), 1e-300);
          const double tau = stepper.locate(xs, ta, dt, d, fa, ee);
          xs = stepper.flow(xs, ta, tau, d);
          tr.event_residuals.push_back(std::abs(stepper.error(xs, ta + tau)));
          stepper.jump(xs);
          tr.event_times.push_back(ta + tau);
          ++events;
          last_sign = se;
          ta += tau;
          if (tb - ta <= 0) break;
        }
      }
      x = xs;
    } else {
      x = x1;
      if (last_sign == 0) last_sign = s1;
    }
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > cfg.divergence_bound)
      throw SimulationDiverged("closed-loop state left the admissible bound", t1);
    record(t1, events);
  }
  tr.metrics = compute_metrics(tr);
  return tr;
}

double mean_square(const std::vector<double>& v, std::size_t first) {
  if (first >= v.size()) throw ParameterError("metric window is empty");
  double acc = 0;
  for (std::size_t i = first; i < v.size(); ++i) acc += v[i] * v[i];
  return acc / double(v.size() - first);
}

double rms(const std::vector<double>& v, std::size_t first) { return std::sqrt(mean_square(v, first)); }

PeakResult peak_of(const std::vector<double>& t, const std::vector<double>& v, std::size_t first) {
  if (first >= v.size() || t.size() != v.size()) throw ParameterError("peak window is empty");
  PeakResult r;
  r.index = first;
  for (std::size_t i = first; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[r.index])) r.index = i;
  const std::size_t i = r.index;
  r.value = std::abs(v[i]);
  r.time = t[i];
  if (i > first && i + 1 < v.size()) {
    const double ym = std::abs(v[i - 1]), y0 = std::abs(v[i]), yp = std::abs(v[i + 1]);
    const double curv = ym - 2 * y0 + yp;
    if (curv < 0) {
      const double delta = 0.5 * (ym - yp) / curv;
      r.value = y0 - 0.25 * (ym - yp) * delta;
      r.time = t[i] + delta * (t[i + 1] - t[i]);
    }
  }
  return r;
}

SettlingResult settling_time(const std::vector<double>& t, const std::vector<double>& v, double fraction,
                             std::size_t first) {
  const auto pk = peak_of(t, v, first);
  SettlingResult r;
  if (pk.value == 0) {
    r.time = 0;
    r.settled = true;
    return r;
  }
  const double thr = fraction * pk.value;
  std::size_t last = pk.index;
  for (std::size_t i = pk.index; i < v.size(); ++i)
    if (std::abs(v[i]) > thr) last = i;
  if (last + 1 >= v.size()) return r;
  const double a = std::abs(v[last]), b = std::abs(v[last + 1]);
  const double tc = t[last] + (a - thr) / (a - b) * (t[last + 1] - t[last]);
  r.time = tc - pk.time;
  r.settled = true;
  return r;
}

double noise_reduction_db(double reference_power, double test_power) {
  if (!(reference_power > 0) || !(test_power > 0)) throw ParameterError("powers must be positive");
  return 10 * std::log10(reference_power / test_power);
}

namespace {
std::size_t window_index(const SimulationTrace& trace) {
  const auto it = std::lower_bound(trace.time.begin(), trace.time.end(), trace.window_start - 1e-12);
  return static_cast<std::size_t>(it - trace.time.begin());
}
}  // namespace

TraceMetrics compute_metrics(const SimulationTrace& trace) {
  if (trace.time.empty()) throw ParameterError("trace is empty");
  const auto first = window_index(trace);
  TraceMetrics m;
  m.rms_error = rms(trace.e, first);
  m.avg_power = mean_square(trace.y, first);
  const auto pk = peak_of(trace.time, trace.y, first);
  m.peak = pk.value;
  m.peak_time = pk.time;
  const auto st = settling_time(trace.time, trace.y, 0.15, first);
  m.settling_time = st.time;
  m.settled = st.settled;
  return m;
}

double metric(const SimulationTrace& trace, MetricKind kind) {
  const auto m = compute_metrics(trace);
  switch (kind) {
    case MetricKind::RmsError:
      return m.rms_error;
    case MetricKind::AvgPower:
      return m.avg_power;
    case MetricKind::Peak:
      return m.peak;
    case MetricKind::SettlingTime:
      return m.settling_time;
  }
  return 0;
}

std::pair<std::complex<double>, std::complex<double>> linear_sensitivity(const ClosedLoop& cl, double omega) {
  const StateSpaced loop(cl.A, cl.B_w, cl.C_y, MatrixX<double>::Zero(1, 1));
  const auto T = evaluate_at(loop, omega);
  return {1.0 - T, T};
}

SensitivityEstimate estimate_sensitivity(const ClosedLoop& cl, const SweepSpec& sweep) {
  if (!(sweep.amplitude > 0)) throw ParameterError("sweep amplitude must be positive");
  if (sweep.measure_cycles < 2) throw ParameterError("sweep needs at least two measured cycles");
  double slow = 0;
  for (const auto& l : cl.eigenvalues) {
    const double re = std::abs(l.real());
    if (re > 0) slow = slow == 0 ? re : std::min(slow, re);
  }
  SensitivityEstimate out;
  std::vector<double> accepted;
  for (double f : sweep.freqs_hz) {
    if (!(f > 0)) throw ParameterError("sweep frequencies must be positive");
    const double T = 1.0 / f;
    const auto M = static_cast<long>(std::ceil(T / sweep.base_step));
    long settle = sweep.settle_cycles;
    if (slow > 0) settle = std::max<long>(settle, static_cast<long>(std::ceil(sweep.settle_time_constants / slow / T)));
    const long total = settle + sweep.measure_cycles;
    SimulationConfig cfg;
    cfg.step = T / double(M);
    cfg.duration = double(total * M) * cfg.step;
    cfg.noise = NoiseSpec{sweep.amplitude, f};
    const auto tr = simulate(cl, cfg);
    const double w = 2 * pi * f;
    auto project = [&](long c0, long c1) {
      std::complex<double> Y(0);
      const long i0 = c0 * M, i1 = c1 * M;
      for (long i = i0; i < i1; ++i) {
        const double ph = w * tr.time[i];
        Y += tr.y[i] * std::complex<double>(std::sin(ph), std::cos(ph));
      }
      return Y * (2.0 / double(i1 - i0));
    };
    const long half = sweep.measure_cycles / 2;
    const auto Y = project(settle, total);
    const auto Y1 = project(settle, settle + half);
    const auto Y2 = project(settle + half, total);
    const auto Tf = -Y / sweep.amplitude;
    const auto Sf = (Y + sweep.amplitude) / sweep.amplitude;
    const bool consistent = std::abs(Y1 - Y2) <= sweep.consistency_tolerance * std::max(std::abs(Y), 1e-300) &&
                            std::abs(Y1 - Y2) <= sweep.consistency_tolerance * std::abs(Y + sweep.amplitude);
    if (!consistent) {
      out.flagged_hz.push_back(f);
      continue;
    }
    accepted.push_back(w);
    out.freqs_hz.push_back(f);
    out.S.push_back(Sf);
    out.T.push_back(Tf);
  }
  out.grid = FrequencyGridd(accepted);
  return out;
}

}  // namespace crone
