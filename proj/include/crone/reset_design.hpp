#pragma once

// Three-step CRONE reset design: linear CRONE, reset phase lead at crossover,
// retuned slope and gain.

#include "crone/crone_design.hpp"
#include "crone/describing_function.hpp"
#include "crone/reset_elements.hpp"

namespace crone {

enum class GainMode { DescribingFunction, BaseLinear };

struct PipelineOptions {
  GainMode gain_mode = GainMode::DescribingFunction;
  double cross_check_tolerance = 0.5 * std::numbers::pi / 180.0;  // rad
};

struct CroneResetDesign {
  CroneDesignSpec spec;
  ResetStrategy strategy;
  double nu = 0;
  double phi_r = 0;  // rad, at crossover
  double nu_star = 0;
  double c0 = 1;
  bool feasible = false;
  CroneController linear;
  CroneController retuned;
  ResetControllerModel controller;
};

// Retuned order with the reset phase lead removed from the phase budget.
double compute_nu_star(const CroneDesignSpec& spec, double plant_phase, double phi_r, double delay = 0.0);

CroneResetDesign design_pipeline(const CroneDesignSpec& spec, const RationalTransferd& plant,
                                 const ResetStrategy& strategy, const PipelineOptions& options = {});

// Describing-function open loop G*_DF(jw) G(jw) with the exact plant.
std::complex<double> df_open_loop(const CroneResetDesign& design, const RationalTransferd& plant, double omega);

}  // namespace crone
