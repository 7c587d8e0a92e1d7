#include "crone/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crone/errors.hpp"

namespace crone {

namespace {
ProfileSample advance(const ProfileSample& s, double snap, double dt) {
  const double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt;
  ProfileSample o;
  o.p = s.p + s.v * dt + s.a * dt2 / 2 + s.j * dt3 / 6 + snap * dt4 / 24;
  o.v = s.v + s.a * dt + s.j * dt2 / 2 + snap * dt3 / 6;
  o.a = s.a + s.j * dt + snap * dt2 / 2;
  o.j = s.j + snap * dt;
  return o;
}
}  // namespace

double FourthOrderProfile::max_amplitude(double snap, double period) {
  const double t1 = period / 16;
  return 2 * snap * t1 * t1 * t1 * (period / 4);
}

FourthOrderProfile::FourthOrderProfile(const ReferenceSpec& spec) : spec_(spec) {
  if (!(spec.period > 0) || !std::isfinite(spec.period)) throw ProfileError("reference period must be positive");
  if (!(spec.amplitude >= 0)) throw ProfileError("reference amplitude must be non-negative");
  if (spec.amplitude == 0) return;
  if (!(spec.snap > 0)) throw ProfileError("snap bound must be positive");
  const double T = spec.period;
  const double A = spec.amplitude;
  const double S = spec.snap;
  if (A > max_amplitude(S, T))
    throw ProfileError("snap bound too low for the requested stroke and period (max stroke " +
                       std::to_string(max_amplitude(S, T)) + " m)");
  // stroke(t1) = 2 S t1^3 (T/2 - 4 t1) is increasing on [0, T/16].
  double lo = 0, hi = T / 16;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    if (2 * S * mid * mid * mid * (T / 2 - 4 * mid) < A) lo = mid; else hi = mid;
  }
  t1_ = (lo + hi) / 2;
  tc_ = std::max(0.0, T / 2 - 8 * t1_);
  const double snaps[9] = {S, -S, -S, S, 0, -S, S, S, -S};
  const double durs[9] = {t1_, t1_, t1_, t1_, tc_, t1_, t1_, t1_, t1_};
  seg_start_[0] = 0;
  seg_state_[0] = ProfileSample{};
  for (int k = 0; k < 9; ++k) {
    seg_snap_[k] = snaps[k];
    seg_start_[k + 1] = seg_start_[k] + durs[k];
    seg_state_[k + 1] = advance(seg_state_[k], snaps[k], durs[k]);
  }
  vmax_ = seg_state_[4].v;
  // Remove the last-digit mismatch of the closed-form stroke.
  const double scale = A / seg_state_[9].p;
  for (auto& s : seg_state_) {
    s.p *= scale;
    s.v *= scale;
    s.a *= scale;
    s.j *= scale;
  }
  for (auto& s : seg_snap_) s *= scale;
  vmax_ *= scale;
}

ProfileSample FourthOrderProfile::move(double tau) const {
  if (tau <= 0) return seg_state_[0];
  if (tau >= seg_start_[9]) return seg_state_[9];
  int k = 0;
  while (k < 8 && tau >= seg_start_[k + 1]) ++k;
  return advance(seg_state_[k], seg_snap_[k], tau - seg_start_[k]);
}

ProfileSample FourthOrderProfile::operator()(double t) const {
  if (spec_.amplitude == 0) return {};
  const double T = spec_.period;
  double tau = std::fmod(t, T);
  if (tau < 0) tau += T;
  if (tau < T / 2) return move(tau);
  const auto s = move(tau - T / 2);
  return {spec_.amplitude - s.p, -s.v, -s.a, -s.j};
}

ReferenceSamples generate_reference(const ReferenceSpec& spec, const std::vector<double>& times) {
  const FourthOrderProfile profile(spec);
  ReferenceSamples out;
  out.position.reserve(times.size());
  out.velocity.reserve(times.size());
  out.acceleration.reserve(times.size());
  for (double t : times) {
    const auto s = profile(t);
    out.position.push_back(s.p);
    out.velocity.push_back(s.v);
    out.acceleration.push_back(s.a);
  }
  return out;
}

std::vector<double> feedforward(const std::vector<double>& velocity, const std::vector<double>& acceleration,
                                double m, double c) {
  if (velocity.size() != acceleration.size()) throw ParameterError("velocity and acceleration lengths differ");
  std::vector<double> f(velocity.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = m * acceleration[i] + c * velocity[i];
  return f;
}

}  // namespace crone
