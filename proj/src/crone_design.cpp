#include "crone/crone_design.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "crone/plant.hpp"

namespace crone {

namespace {
constexpr double pi = std::numbers::pi;

VectorX<double> unit(double a, double b) { return (VectorX<double>(2) << a, b).finished(); }
}  // namespace

std::vector<std::string> CroneDesignSpec::validate() const {
  const double freqs[] = {wcg, wi, wb, wh, wf};
  for (double w : freqs)
    if (!(w > 0) || !std::isfinite(w)) throw ParameterError("design frequencies must be positive and finite");
  if (!(phase_margin > 0 && phase_margin < pi)) throw ParameterError("phase margin must lie in (0, pi)");
  if (N < 1) throw ParameterError("approximation order N must be >= 1");
  if (ni < 0 || nf < 0) throw ParameterError("integrator and filter orders must be non-negative");
  if (!(wb < wh)) throw ParameterError("band corners must satisfy wb < wh");
  if (generation != Generation::First && generation != Generation::Second)
    throw ParameterError("generation must be 1 or 2");
  std::vector<std::string> warnings;
  if (!(wi < wb)) warnings.emplace_back("integrator corner not below wb");
  if (!(wb < wcg)) warnings.emplace_back("wb not below crossover");
  if (!(wcg < wh)) warnings.emplace_back("crossover not below wh");
  if (!(wh < wf)) warnings.emplace_back("filter corner not above wh");
  return warnings;
}

CroneDesignSpec reference_spec(Generation generation) {
  CroneDesignSpec s;
  s.phase_margin = rad(55.0);
  s.wcg = hz(100.0);
  s.wb = hz(12.5);
  s.wh = hz(800.0);
  s.wi = hz(8.33);
  s.wf = hz(1200.0);
  s.N = 4;
  s.generation = generation;
  s.ni = generation == Generation::First ? 1 : 2;
  s.nf = generation == Generation::First ? 1 : 3;
  return s;
}

double slope_numerator(const CroneDesignSpec& spec, double plant_phase, double delay) {
  double num = -pi + spec.phase_margin + spec.nf * std::atan(spec.wcg / spec.wf) +
               spec.ni * (pi / 2 - std::atan(spec.wcg / spec.wi));
  if (spec.generation == Generation::First) {
    num -= plant_phase;
  } else if (spec.compensate_delay) {
    num += spec.wcg * delay;
  }
  return num;
}

double slope_denominator(const CroneDesignSpec& spec) {
  const double d = std::atan(spec.wcg / spec.wb) - std::atan(spec.wcg / spec.wh);
  return spec.generation == Generation::First ? d : -d;
}

void check_order_range(Generation generation, double nu, const char* name) {
  const double lo = generation == Generation::First ? 0.0 : 1.0;
  const double hi = lo + 1.0;
  // Roundoff slack only; the value itself is never moved.
  const double slack = 64 * std::numeric_limits<double>::epsilon();
  if (!(nu >= lo - slack && nu <= hi + slack))
    throw DesignInfeasible(std::string(name) + " outside the admissible interval [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]",
                           nu);
}

double compute_nu(const CroneDesignSpec& spec, double plant_phase, double delay) {
  spec.validate();
  const double nu = slope_numerator(spec, plant_phase, delay) / slope_denominator(spec);
  check_order_range(spec.generation, nu, "fractional order");
  return nu;
}

FactoredTransferd CroneController::shape() const {
  FactoredTransferd out;
  out.multiply(integrator).multiply(fractional).multiply(lowpass);
  return out;
}

FactoredTransferd CroneController::beta0() const { return shape().scale(c0); }

FactoredTransferd CroneController::transfer() const {
  auto out = beta0();
  out.multiply(plant_inverse);
  return out;
}

CroneController build_controller(const CroneDesignSpec& spec, double nu, const RationalTransferd& plant) {
  CroneController c;
  c.spec = spec;
  c.nu = nu;
  c.integrator.multiply_unit(unit(1.0, spec.wi), spec.ni).divide_unit(unit(1.0, 0.0), spec.ni);
  const double order = spec.generation == Generation::First ? nu : -nu;
  c.fractional.multiply_fractional(order, spec.wb, spec.wh);
  c.lowpass.divide_unit(unit(1.0 / spec.wf, 1.0), spec.nf);
  if (spec.generation == Generation::Second) {
    const auto rational = plant.without_delay();
    for (const auto& z : zeros(rational))
      if (z.real() >= 0) throw ParameterError("plant has a non-minimum-phase zero; inversion refused");
    for (const auto& p : poles(rational))
      if (p.real() >= 0) throw ParameterError("plant has an unstable or marginal pole; inversion refused");
    c.plant_inverse = FactoredTransferd().multiply(rational).inverse();
  }
  return c;
}

FactoredTransferd open_loop(const CroneController& controller, const RationalTransferd& plant) {
  auto out = controller.transfer();
  out.multiply(plant);
  return out;
}

double normalize_gain(const CroneController& controller, const RationalTransferd& plant) {
  CroneController unit_gain = controller;
  unit_gain.c0 = 1.0;
  const double w = controller.spec.wcg;
  const double mag = controller.spec.generation == Generation::First
                         ? std::abs(open_loop(unit_gain, plant).exact(w))
                         : std::abs(unit_gain.beta0().exact(w));
  if (!(mag > 0) || !std::isfinite(mag)) throw ParameterError("loop gain at crossover is zero or not finite");
  return 1.0 / mag;
}

CroneController synthesize(const CroneDesignSpec& spec, const RationalTransferd& plant) {
  spec.validate();
  const double phase = continuous_phase(plant, spec.wcg);
  const double nu = compute_nu(spec, phase, plant.delay());
  auto c = build_controller(spec, nu, plant);
  c.c0 = normalize_gain(c, plant);
  return c;
}

}  // namespace crone
