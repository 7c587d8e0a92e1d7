#include "crone/reset_design.hpp"

#include <cmath>

namespace crone {

double compute_nu_star(const CroneDesignSpec& spec, double plant_phase, double phi_r, double delay) {
  spec.validate();
  if (!(phi_r >= 0 && phi_r < std::numbers::pi / 2)) throw ParameterError("reset phase lead must lie in [0, pi/2)");
  const double nu_star = (slope_numerator(spec, plant_phase, delay) - phi_r) / slope_denominator(spec);
  check_order_range(spec.generation, nu_star, "retuned fractional order");
  return nu_star;
}

std::complex<double> df_open_loop(const CroneResetDesign& design, const RationalTransferd& plant, double omega) {
  return gdf_star_at(design.controller, omega) * evaluate_at(plant, omega);
}

CroneResetDesign design_pipeline(const CroneDesignSpec& spec, const RationalTransferd& plant,
                                 const ResetStrategy& strategy, const PipelineOptions& options) {
  strategy.validate();
  CroneResetDesign d;
  d.spec = spec;
  d.strategy = strategy;
  d.linear = synthesize(spec, plant);
  d.nu = d.linear.nu;

  const double w = spec.wcg;
  d.phi_r = phase_lead(strategy, w, spec.wb, spec.wh);
  const auto element = isolated_element(strategy.kind, spec.wb, spec.wh, spec.wi, strategy);
  const double measured = std::arg(gdf_star_at(element, w) / evaluate_at(element.base(), w));
  if (std::abs(measured - d.phi_r) > options.cross_check_tolerance)
    throw DecompositionError("analytic reset phase lead disagrees with the describing function by " +
                             std::to_string((measured - d.phi_r) * 180 / std::numbers::pi) + " deg");

  const double plant_phase = continuous_phase(plant, w);
  d.nu_star = compute_nu_star(spec, plant_phase, d.phi_r, plant.delay());
  d.retuned = build_controller(spec, d.nu_star, plant);
  d.retuned.c0 = normalize_gain(d.retuned, plant);
  d.controller = build_reset_controller(d.retuned, strategy);
  if (options.gain_mode == GainMode::DescribingFunction) {
    const double mag = std::abs(df_open_loop(d, plant, w));
    if (!(mag > 0) || !std::isfinite(mag)) throw ParameterError("describing-function loop gain is zero");
    d.retuned.c0 /= mag;
    d.controller = build_reset_controller(d.retuned, strategy);
  }
  d.c0 = d.retuned.c0;
  d.feasible = true;
  return d;
}

}  // namespace crone
