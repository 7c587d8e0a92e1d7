#pragma once

// Identified precision-stage model and the reference design parameters used
// throughout the tests and examples.

#include <numbers>

#include "crone/lti.hpp"

namespace crone {

inline constexpr double kStageGain = 0.5474;
inline constexpr double kStageMass = 0.5718;
inline constexpr double kStageDamping = 0.9;
inline constexpr double kStageDampingAlt = 0.95;
inline constexpr double kStageStiffness = 146.3;
inline constexpr double kStageDelay = 2.5e-4;

inline double hz(double f) { return 2.0 * std::numbers::pi * f; }
inline double to_hz(double w) { return w / (2.0 * std::numbers::pi); }
inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double rad(double degrees) { return degrees * std::numbers::pi / 180.0; }

// 0.5474 / (0.5718 s^2 + c s + 146.3) * exp(-2.5e-4 s); c selects the damping reading.
inline RationalTransferd stage_plant(double damping = kStageDamping, bool with_delay = true) {
  return RationalTransferd((VectorX<double>(1) << kStageGain).finished(),
                           (VectorX<double>(3) << kStageMass, damping, kStageStiffness).finished(),
                           with_delay ? kStageDelay : 0.0);
}

// Feedforward coefficients expressed in plant-input units.
inline double stage_feedforward_mass(double gain = kStageGain) { return kStageMass / gain; }
inline double stage_feedforward_damping(double damping = kStageDamping, double gain = kStageGain) {
  return damping / gain;
}

}  // namespace crone
