#pragma once

// Snap-limited (fourth order) symmetric triangular reference and the
// mass/damping feedforward that accompanies it.

#include <array>
#include <vector>

namespace crone {

struct ReferenceSpec {
  double amplitude = 0;  // stroke, m
  double period = 1;     // s
  double snap = 0;       // bound, m/s^4
};

struct ProfileSample {
  double p = 0, v = 0, a = 0, j = 0;
};

// Each half period is a rest-to-rest move of the full stroke built from four
// snap pulses, a cruise phase and four mirrored pulses. The second half
// returns to zero.
class FourthOrderProfile {
 public:
  explicit FourthOrderProfile(const ReferenceSpec& spec);

  ProfileSample operator()(double t) const;

  double pulse_time() const { return t1_; }
  double cruise_time() const { return tc_; }
  double peak_velocity() const { return vmax_; }
  const ReferenceSpec& spec() const { return spec_; }

  // Largest stroke reachable with the given snap bound and period.
  static double max_amplitude(double snap, double period);

 private:
  ProfileSample move(double tau) const;

  ReferenceSpec spec_;
  double t1_ = 0, tc_ = 0, vmax_ = 0;
  std::array<double, 10> seg_start_{};
  std::array<double, 9> seg_snap_{};
  std::array<ProfileSample, 10> seg_state_{};
};

struct ReferenceSamples {
  std::vector<double> position, velocity, acceleration;
};

ReferenceSamples generate_reference(const ReferenceSpec& spec, const std::vector<double>& times);

// F = m a + c v elementwise.
std::vector<double> feedforward(const std::vector<double>& velocity, const std::vector<double>& acceleration,
                                double m, double c);

}  // namespace crone
