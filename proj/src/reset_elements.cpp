#include "crone/reset_elements.hpp"

#include <cmath>

namespace crone {

namespace {
VectorX<double> unit(double a, double b) { return (VectorX<double>(2) << a, b).finished(); }

FactoredTransferd reset_factor(ResetKind kind, double wb, double wh, double wi) {
  FactoredTransferd f;
  switch (kind) {
    case ResetKind::Integrator:
      f.scale(wi).divide_unit(unit(1.0, 0.0));
      break;
    case ResetKind::Lag:
      f.multiply_unit(unit(1.0 / wh, 1.0)).divide_unit(unit(1.0 / wb, 1.0));
      break;
    case ResetKind::FirstOrderFilter:
      f.divide_unit(unit(1.0 / wb, 1.0));
      break;
    case ResetKind::Lead:
      f.multiply_unit(unit(1.0 / wb, 1.0)).divide_unit(unit(1.0 / wh, 1.0));
      break;
  }
  return f;
}
}  // namespace

std::string to_string(ResetKind kind) {
  switch (kind) {
    case ResetKind::Integrator:
      return "integrator";
    case ResetKind::Lag:
      return "lag";
    case ResetKind::FirstOrderFilter:
      return "fof";
    case ResetKind::Lead:
      return "lead";
  }
  return "unknown";
}

ResetKind reset_kind_from_string(const std::string& name) {
  if (name == "integrator") return ResetKind::Integrator;
  if (name == "lag") return ResetKind::Lag;
  if (name == "fof" || name == "first_order_filter") return ResetKind::FirstOrderFilter;
  if (name == "lead") return ResetKind::Lead;
  throw ParameterError("unknown reset strategy '" + name + "'");
}

void ResetStrategy::validate() const {
  if (!(gamma >= 0 && gamma <= 1)) throw ParameterError("gamma must lie in [0, 1]");
  if (!(p >= 0 && p <= 1)) throw ParameterError("p must lie in [0, 1]");
}

bool ResetControllerModel::identity_jump() const { return A_rho.isIdentity(0.0); }

ResetControllerModel ResetControllerModel::core() const {
  ResetStrategy s{kind, gamma, 0.0};
  return assemble(sigma_r, sigma_nr, s);
}

ResetDecomposition decompose(const CroneController& controller, ResetKind kind) {
  const auto& spec = controller.spec;
  const double kappa = spec.generation == Generation::First ? controller.nu : -controller.nu;
  ResetDecomposition d;
  d.sigma_r = reset_factor(kind, spec.wb, spec.wh, spec.wi);
  auto& nr = d.sigma_nr;
  nr.scale(controller.c0);
  switch (kind) {
    case ResetKind::Integrator:
      if (spec.ni < 1) throw DecompositionError("integrator reset requires at least one integrator (nI >= 1)");
      nr.scale(std::pow(spec.wi, spec.ni - 1)).divide_unit(unit(1.0, 0.0), spec.ni - 1);
      nr.multiply_unit(unit(1.0 / spec.wi, 1.0), spec.ni);
      nr.multiply_fractional(kappa, spec.wb, spec.wh);
      break;
    case ResetKind::Lag:
      nr.multiply_fractional(kappa + 1.0, spec.wb, spec.wh).multiply(controller.integrator);
      break;
    case ResetKind::FirstOrderFilter:
      nr.multiply_fractional(kappa, spec.wb, spec.wh).multiply_unit(unit(1.0 / spec.wb, 1.0));
      nr.multiply(controller.integrator);
      break;
    case ResetKind::Lead:
      nr.multiply_fractional(kappa - 1.0, spec.wb, spec.wh).multiply(controller.integrator);
      break;
  }
  nr.multiply(controller.lowpass).multiply(controller.plant_inverse);
  return d;
}

StateSpaced realize_reset_factor(const FactoredTransferd& sigma_r) {
  const auto tf = sigma_r.collapse(1);
  if (tf.den_degree() != 1) throw DecompositionError("reset factor must be first order");
  return observable_canonical(tf);
}

ResetControllerModel assemble(const StateSpaced& sigma_r, const StateSpaced& sigma_nr, const ResetStrategy& strategy) {
  strategy.validate();
  if (!sigma_r.is_siso() || !sigma_nr.is_siso()) throw ParameterError("reset and non-reset parts must be SISO");
  const auto joined = series(sigma_r, sigma_nr);
  ResetControllerModel m;
  m.kind = strategy.kind;
  m.gamma = strategy.gamma;
  m.p = 0.0;
  m.sigma_r = sigma_r;
  m.sigma_nr = sigma_nr;
  m.A = joined.A();
  m.B = joined.B();
  m.C = joined.C();
  m.D = joined.D();
  m.n_reset_block = sigma_r.states();
  m.A_rho = MatrixX<double>::Identity(m.A.rows(), m.A.rows());
  for (Eigen::Index i = 0; i < sigma_r.states(); ++i) {
    m.A_rho(i, i) = strategy.gamma;
    m.reset_indices.push_back(i);
  }
  return m;
}

ResetControllerModel convex_combine(const ResetControllerModel& model, double p) {
  if (!(p >= 0 && p <= 1)) throw ParameterError("p must lie in [0, 1]");
  if (model.augmented() || model.p != 0.0) throw ParameterError("convex combination expects an unaugmented model");
  if (p == 0.0) return model;
  if (p == 1.0) {
    auto m = model;
    m.p = 1.0;
    m.A_rho.setIdentity();
    return m;
  }
  const auto& r = model.sigma_r;
  const auto nr = r.states();
  MatrixX<double> A = MatrixX<double>::Zero(2 * nr, 2 * nr);
  A.topLeftCorner(nr, nr) = r.A();
  A.bottomRightCorner(nr, nr) = r.A();
  MatrixX<double> B(2 * nr, 1);
  B << r.B(), r.B();
  MatrixX<double> C(1, 2 * nr);
  C << p * r.C(), (1.0 - p) * r.C();
  const StateSpaced doubled(A, B, C, r.D());
  const auto joined = series(doubled, model.sigma_nr);
  ResetControllerModel m = model;
  m.p = p;
  m.A = joined.A();
  m.B = joined.B();
  m.C = joined.C();
  m.D = joined.D();
  m.n_reset_block = 2 * nr;
  m.A_rho = MatrixX<double>::Identity(m.A.rows(), m.A.rows());
  m.reset_indices.clear();
  for (Eigen::Index i = nr; i < 2 * nr; ++i) {
    m.A_rho(i, i) = model.gamma;
    m.reset_indices.push_back(i);
  }
  return m;
}

ResetControllerModel build_reset_controller(const CroneController& controller, const ResetStrategy& strategy) {
  strategy.validate();
  const auto parts = decompose(controller, strategy.kind);
  const auto core = assemble(realize_reset_factor(parts.sigma_r), parts.sigma_nr.realize(controller.spec.N), strategy);
  return convex_combine(core, strategy.p);
}

ResetControllerModel linear_model(const StateSpaced& controller) {
  if (!controller.is_siso()) throw ParameterError("controller must be SISO");
  const auto ss = balance(controller);
  ResetControllerModel m;
  m.p = 1.0;
  m.sigma_r = StateSpaced::gain(1.0);
  m.sigma_nr = ss;
  m.A = ss.A();
  m.B = ss.B();
  m.C = ss.C();
  m.D = ss.D();
  m.A_rho = MatrixX<double>::Identity(m.A.rows(), m.A.rows());
  return m;
}

ResetControllerModel isolated_element(ResetKind kind, double wb, double wh, double wi, const ResetStrategy& strategy) {
  const auto core =
      assemble(realize_reset_factor(reset_factor(kind, wb, wh, wi)), StateSpaced::gain(1.0), strategy);
  return convex_combine(core, strategy.p);
}

}  // namespace crone
