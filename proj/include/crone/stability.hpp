#pragma once

// Closed-loop assembly of a reset controller with a plant, and quadratic
// stability certification through the H_beta condition.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "crone/lti.hpp"
#include "crone/reset_elements.hpp"

namespace crone {

// State x = [x_R; x_p]. Flow: x' = A x + B_w w + B_f f with w = r - n the
// loop input and f the force added at the plant input. e = w - C_y x.
struct ClosedLoop {
  MatrixX<double> A;
  MatrixX<double> B_w;
  MatrixX<double> B_f;
  Eigen::RowVectorXd C_y;  // plant output
  Eigen::RowVectorXd C_u;  // controller output without the direct term
  double D_R = 0;          // controller direct term, u = C_u x + D_R e
  Eigen::VectorXd jump;    // diagonal of the full-state jump map
  std::vector<Eigen::Index> reset_indices;   // states changed by the jump
  std::vector<Eigen::Index> plant_indices;
  Eigen::Index n_controller = 0;
  Eigen::Index n_plant = 0;
  std::vector<std::complex<double>> eigenvalues;

  Eigen::Index states() const { return A.rows(); }
  bool hurwitz() const;
  bool identity_jump() const { return reset_indices.empty(); }
};

ClosedLoop build_closed_loop(const ResetControllerModel& controller, const StateSpaced& plant);

struct HBetaCertificate {
  Eigen::VectorXd beta;
  MatrixX<double> p_rho;
  double min_real_part = 0;
  bool high_frequency_ok = false;
};

struct HBetaSearchResult {
  bool found = false;
  HBetaCertificate best;  // certificate if found, otherwise best candidate
  std::size_t grid_points = 0;
};

struct HBetaOptions {
  double beta_max = 10.0;
  int beta_points = 41;
  int refine_factor = 10;
  double p_min = 1e-3;
  double p_max = 1e3;
  int p_points = 25;
  int workers = 0;  // 0: hardware concurrency
};

// Default SPR test grid: 2000 log-spaced points over [1e-2, 1e6] rad/s.
FrequencyGridd default_spr_grid(std::size_t points = 2000);

// Minimum over the grid of the smallest eigenvalue of He H_beta(jw).
double h_beta_min_real_part(const ClosedLoop& cl, const Eigen::VectorXd& beta, const MatrixX<double>& p_rho,
                            const FrequencyGridd& grid);
bool h_beta_high_frequency_ok(const ClosedLoop& cl, const Eigen::VectorXd& beta, const MatrixX<double>& p_rho);

// Throws StabilityPreconditionError when the flow matrix is not Hurwitz.
HBetaSearchResult h_beta_search(const ClosedLoop& cl, const FrequencyGridd& grid, const HBetaOptions& options = {});

struct StabilityReport {
  bool hurwitz = false;
  bool certified = false;
  HBetaCertificate certificate;
  std::size_t grid_points = 0;
  std::string verdict() const { return certified ? "certified" : "uncertified"; }
};

// Hurwitz test followed by the certificate search; never throws on an
// unstable flow, it reports it instead.
StabilityReport certify(const ClosedLoop& cl, const FrequencyGridd& grid = default_spr_grid(),
                        const HBetaOptions& options = {});

}  // namespace crone
