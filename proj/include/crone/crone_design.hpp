#pragma once

// Linear first and second generation CRONE synthesis.

#include <string>
#include <vector>

#include "crone/fractional.hpp"
#include "crone/lti.hpp"

namespace crone {

enum class Generation { First = 1, Second = 2 };

struct CroneDesignSpec {
  double phase_margin = 0;  // rad
  double wcg = 0;           // rad/s
  double wi = 0;
  double wb = 0;
  double wh = 0;
  double wf = 0;
  int ni = 0;
  int nf = 0;
  int N = 4;
  Generation generation = Generation::First;
  // Second generation only: count the uninverted plant delay in the phase budget.
  bool compensate_delay = true;

  // Throws ParameterError on hard violations; returns soft ordering warnings.
  std::vector<std::string> validate() const;
};

// Reference parameter set for the precision stage (55 deg, 100 Hz crossover).
CroneDesignSpec reference_spec(Generation generation);

// Phase budget numerator common to both generations, radians. The plant phase
// enters for the first generation only; `delay` is used by the second
// generation when delay compensation is requested.
double slope_numerator(const CroneDesignSpec& spec, double plant_phase, double delay = 0.0);
double slope_denominator(const CroneDesignSpec& spec);

// Fractional order; throws DesignInfeasible outside [0,1] (gen 1) or [1,2] (gen 2).
double compute_nu(const CroneDesignSpec& spec, double plant_phase, double delay = 0.0);

// Range check shared with the retuned order.
void check_order_range(Generation generation, double nu, const char* name);

struct CroneController {
  CroneDesignSpec spec;
  double nu = 0;
  double c0 = 1;
  FactoredTransferd integrator;     // (1 + wI/s)^nI
  FactoredTransferd fractional;     // lead^nu (gen 1) or lead^-nu (gen 2)
  FactoredTransferd lowpass;        // (1 + s/wF)^-nF
  FactoredTransferd plant_inverse;  // unity for gen 1

  // Shaping part without plant inverse or gain.
  FactoredTransferd shape() const;
  // Desired open loop (gen 2) or C_0 times shape (gen 1).
  FactoredTransferd beta0() const;
  // Complete controller transfer.
  FactoredTransferd transfer() const;
  StateSpaced realize() const { return transfer().realize(spec.N); }
};

// Builds the unscaled factors (c0 = 1) for a given order.
CroneController build_controller(const CroneDesignSpec& spec, double nu, const RationalTransferd& plant);

// Gain such that |C G| (gen 1) or |beta0| (gen 2) equals one at the crossover,
// using exact fractional factors.
double normalize_gain(const CroneController& controller, const RationalTransferd& plant);

CroneController synthesize(const CroneDesignSpec& spec, const RationalTransferd& plant);

// Open loop C(s) G(s) as a factored transfer (exact fractional powers).
FactoredTransferd open_loop(const CroneController& controller, const RationalTransferd& plant);

}  // namespace crone
