#pragma once

// First-order reset elements: strategy decompositions of a CRONE controller,
// block assembly of the reset system, partial reset and reset percentage.

#include <string>
#include <vector>

#include "crone/crone_design.hpp"
#include "crone/lti.hpp"

namespace crone {

enum class ResetKind { Integrator, Lag, FirstOrderFilter, Lead };

std::string to_string(ResetKind kind);
ResetKind reset_kind_from_string(const std::string& name);

struct ResetStrategy {
  ResetKind kind = ResetKind::Lag;
  double gamma = 1.0;  // after-reset fraction of the reset state
  double p = 1.0;      // linear share of the convex combination

  void validate() const;
};

struct ResetDecomposition {
  FactoredTransferd sigma_r;   // reset factor, exactly first order
  FactoredTransferd sigma_nr;  // complement, carries gain and fractional parts
};

// Base linear system (A, B, C, D) plus the jump map. State order is
// [reset block; non-reset block]; for a convex combination the reset block is
// [linear copy; resetting copy].
struct ResetControllerModel {
  ResetKind kind = ResetKind::Lag;
  double gamma = 1.0;
  double p = 0.0;
  StateSpaced sigma_r;
  StateSpaced sigma_nr;
  MatrixX<double> A, B, C, D;
  MatrixX<double> A_rho;
  Eigen::Index n_reset_block = 0;  // states of the (possibly duplicated) reset block
  std::vector<Eigen::Index> reset_indices;  // states subject to the jump

  Eigen::Index states() const { return A.rows(); }
  StateSpaced base() const { return StateSpaced(A, B, C, D); }
  bool augmented() const { return n_reset_block != sigma_r.states(); }
  // True when the jump leaves every state unchanged.
  bool identity_jump() const;
  // Same element with p = 0 (no linear copy).
  ResetControllerModel core() const;
};

// Splits the controller into reset and non-reset factors for the given kind.
ResetDecomposition decompose(const CroneController& controller, ResetKind kind);

// Observable canonical realization of a first-order reset factor.
StateSpaced realize_reset_factor(const FactoredTransferd& sigma_r);

// Series assembly with Sigma_r feeding Sigma_nr; A_rho = diag(gamma I, I).
// The returned model is the p = 0 core.
ResetControllerModel assemble(const StateSpaced& sigma_r, const StateSpaced& sigma_nr, const ResetStrategy& strategy);

// Convex combination with linear share p. p = 0 returns the model unchanged,
// p = 1 returns the base system with an identity jump.
ResetControllerModel convex_combine(const ResetControllerModel& model, double p);

// decompose + realize + assemble + convex_combine.
ResetControllerModel build_reset_controller(const CroneController& controller, const ResetStrategy& strategy);

// Plain linear controller as a model with no reset states.
ResetControllerModel linear_model(const StateSpaced& controller);

// Stand-alone reset element (no non-reset part) for phase-lead checks.
ResetControllerModel isolated_element(ResetKind kind, double wb, double wh, double wi, const ResetStrategy& strategy);

}  // namespace crone
