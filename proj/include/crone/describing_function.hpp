#pragma once

// Sinusoidal-input describing functions of reset systems.

#include <complex>
#include <vector>

#include "crone/lti.hpp"
#include "crone/reset_elements.hpp"

namespace crone {

struct DFResult {
  FrequencyGridd grid;
  std::vector<std::complex<double>> values;
  std::vector<double> phase_lead;  // rad, relative to the base linear response
};

// Theta_D(omega) for flow matrix A and jump map A_rho.
MatrixX<double> theta_d(const MatrixX<double>& A, const MatrixX<double>& A_rho, double omega);

// Closed form of Theta_D for a single first-order state with pole -b.
double theta_d_first_order(double omega, double b, double gamma);

// C (jwI - A)^-1 (I + j Theta_D) B + D for the given reset system.
std::complex<double> reset_df(const StateSpaced& base, const MatrixX<double>& A_rho, double omega);

// p * base + (1 - p) * DF of the resetting core, per grid point.
DFResult gdf_star(const ResetControllerModel& model, const FrequencyGridd& grid);
std::complex<double> gdf_star_at(const ResetControllerModel& model, double omega);

// Analytic phase lead for a strategy. For Lag, a = wh and b = wb; for Lead the
// corners swap; FirstOrderFilter uses b = wb.
double phase_lead(const ResetStrategy& strategy, double omega, double wb, double wh);

// First harmonic of the reset system's output under e(t) = sin(omega t),
// computed by time integration with resets at the known crossings.
struct OracleOptions {
  int cycles = 48;                  // record length; the first half, or more for slow modes, is discarded
  int min_steps_per_half = 200;
  double max_step_scale = 0.1;      // |lambda|max * h bound
  double settle_time_constants = 25.0;
  double drift_tolerance = 0.01;
};

std::complex<double> numeric_first_harmonic(const ResetControllerModel& model, double omega,
                                            const OracleOptions& options = {});

}  // namespace crone
