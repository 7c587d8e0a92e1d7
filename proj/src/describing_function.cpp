#include "crone/describing_function.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

#include "crone/flow.hpp"

namespace crone {

namespace {
constexpr double pi = std::numbers::pi;
using Complex = std::complex<double>;
using MatrixXc = MatrixX<Complex>;

bool well_conditioned(const Eigen::PartialPivLU<MatrixX<double>>& lu) {
  return lu.rcond() > 64 * std::numeric_limits<double>::epsilon();
}
}  // namespace

MatrixX<double> theta_d(const MatrixX<double>& A, const MatrixX<double>& A_rho, double omega) {
  if (!(omega > 0)) throw ParameterError("describing function needs omega > 0");
  const auto n = A.rows();
  if (A.cols() != n || A_rho.rows() != n || A_rho.cols() != n)
    throw ParameterError("theta_d: dimension mismatch");
  if (A_rho.isIdentity(0.0)) return MatrixX<double>::Zero(n, n);
  const MatrixX<double> I = MatrixX<double>::Identity(n, n);
  const MatrixX<double> lambda = omega * omega * I + A * A;
  Eigen::PartialPivLU<MatrixX<double>> lambda_lu(lambda);
  if (!well_conditioned(lambda_lu)) throw DescribingFunctionUndefined("Lambda is singular", omega);
  const MatrixX<double> expA = (A * (pi / omega)).exp();
  const MatrixX<double> delta = I + expA;
  const MatrixX<double> delta_d = I + A_rho * expA;
  Eigen::PartialPivLU<MatrixX<double>> delta_d_lu(delta_d);
  if (!well_conditioned(delta_d_lu)) throw DescribingFunctionUndefined("Delta_D is singular", omega);
  const MatrixX<double> lambda_inv = lambda_lu.inverse();
  const MatrixX<double> gamma_d = delta_d_lu.solve(A_rho * delta * lambda_inv);
  return -(2 * omega * omega / pi) * delta * (gamma_d - lambda_inv);
}

double theta_d_first_order(double omega, double b, double gamma) {
  const double r = b / omega;
  const double q = std::exp(-pi * r);
  return (2 / pi) * (1 + q) / (1 + r * r) * (1 - gamma) / (1 + gamma * q);
}

std::complex<double> reset_df(const StateSpaced& base, const MatrixX<double>& A_rho, double omega) {
  if (!base.is_siso()) throw ParameterError("describing function needs a SISO model");
  if (base.states() == 0 || A_rho.isIdentity(0.0)) return evaluate_at(base, omega);
  const auto n = base.states();
  const MatrixX<double> theta = theta_d(base.A(), A_rho, omega);
  MatrixXc resolvent = -base.A().cast<Complex>();
  resolvent.diagonal().array() += Complex(0, omega);
  Eigen::PartialPivLU<MatrixXc> lu(resolvent);
  if (!(lu.rcond() > 64 * std::numeric_limits<double>::epsilon()))
    throw EvaluationError("resolvent (jwI - A) is singular", omega);
  MatrixXc shaped = MatrixXc::Identity(n, n) + Complex(0, 1) * theta.cast<Complex>();
  const MatrixXc x = lu.solve(shaped * base.B().cast<Complex>());
  return (base.C().cast<Complex>() * x)(0, 0) + base.D()(0, 0);
}

std::complex<double> gdf_star_at(const ResetControllerModel& model, double omega) {
  const Complex base = evaluate_at(model.base(), omega);
  if (model.p == 1.0 || model.identity_jump() || model.gamma == 1.0) return base;
  try {
    const auto core = model.core();
    const Complex df = reset_df(core.base(), core.A_rho, omega);
    return model.p * base + (1 - model.p) * df;
  } catch (const DescribingFunctionUndefined&) {
    throw;
  } catch (const EvaluationError& e) {
    throw DescribingFunctionUndefined(e.what(), omega);
  }
}

DFResult gdf_star(const ResetControllerModel& model, const FrequencyGridd& grid) {
  DFResult out;
  out.grid = grid;
  for (double w : grid) {
    const Complex base = evaluate_at(model.base(), w);
    const Complex value = gdf_star_at(model, w);
    out.values.push_back(value);
    out.phase_lead.push_back(std::arg(value / base));
  }
  return out;
}

double phase_lead(const ResetStrategy& strategy, double omega, double wb, double wh) {
  strategy.validate();
  const double g = strategy.gamma;
  const double q = 1 - strategy.p;
  auto lead_lag = [&](double a, double b) {
    const double th = theta_d_first_order(omega, b, g);
    const double k = q * th * (1 - b / a);
    return std::atan(k / (1 + (omega / a) * (omega / a) + (omega / a) * k));
  };
  switch (strategy.kind) {
    case ResetKind::Integrator:
      return std::atan((4 / pi) * q * (1 - g) / (1 + g));
    case ResetKind::Lag:
      return lead_lag(wh, wb);
    case ResetKind::Lead:
      return lead_lag(wb, wh);
    case ResetKind::FirstOrderFilter:
      return std::atan(q * theta_d_first_order(omega, wb, g));
  }
  return 0;
}

namespace {
// Least-squares fit y ~ a sin + b cos + c + d t with Simpson weights over
// half-cycle segments. Returns a + j b.
struct HarmonicFit {
  Eigen::Matrix4d gram = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();

  void add(const Eigen::Vector4d& phi, double y, double w) {
    gram.noalias() += w * phi * phi.transpose();
    rhs.noalias() += w * y * phi;
  }
  Complex solve() const {
    const Eigen::Vector4d c = gram.ldlt().solve(rhs);
    return {c[0], c[1]};
  }
};
}  // namespace

std::complex<double> numeric_first_harmonic(const ResetControllerModel& model, double omega,
                                            const OracleOptions& options) {
  if (!(omega > 0)) throw ParameterError("oracle needs omega > 0");
  if (options.cycles < 4) throw ParameterError("oracle needs at least 4 cycles");
  const auto n = model.states();
  const double half = pi / omega;

  double lambda_max = 0, lambda_slow = 0;
  if (n > 0) {
    Eigen::EigenSolver<MatrixX<double>> es(model.A, false);
    for (Eigen::Index i = 0; i < n; ++i) lambda_max = std::max(lambda_max, std::abs(es.eigenvalues()[i]));
    const double floor = 1e-9 * std::max(1.0, lambda_max);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = std::abs(es.eigenvalues()[i].real());
      if (re > floor) lambda_slow = lambda_slow == 0 ? re : std::min(lambda_slow, re);
    }
  }
  long m = std::max<long>(options.min_steps_per_half,
                          static_cast<long>(std::ceil(half * lambda_max / options.max_step_scale)));
  if (m % 2) ++m;
  const double h = half / m;
  const int measure = options.cycles - options.cycles / 2;
  long warm = options.cycles / 2;
  if (lambda_slow > 0)
    warm = std::max<long>(warm, static_cast<long>(std::ceil(options.settle_time_constants / lambda_slow / (2 * half))));

  const MatrixX<double> B = n > 0 ? model.B : MatrixX<double>(0, 1);
  Rk4Propagator<double> prop(model.A, B, h);
  const Eigen::RowVectorXd C = model.C.row(0);
  const double D = model.D(0, 0);
  const Eigen::VectorXd jump = model.A_rho.diagonal();
  const bool identity = model.identity_jump();

  std::vector<double> s(m + 1), sm(m);
  for (long i = 0; i <= m; ++i) s[i] = (i == 0 || i == m) ? 0.0 : std::sin(pi * double(i) / double(m));
  for (long i = 0; i < m; ++i) sm[i] = std::sin(pi * (double(i) + 0.5) / double(m));

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::Matrix<double, 1, 1> v0, vm, v1;
  std::vector<HarmonicFit> per_cycle(measure);
  HarmonicFit total;
  const long total_halves = 2 * (warm + measure);
  const double t_ref = 2 * half * double(warm + measure / 2.0);
  for (long k = 0; k < total_halves; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const long cycle = k / 2 - warm;
    auto record = [&](long i) {
      if (cycle < 0) return;
      const double e = sign * s[i];
      const double y = C.dot(x) + D * e;
      const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const double theta = pi * double(i) / double(m);
      const double t = (double(k) + double(i) / double(m)) * half;
      Eigen::Vector4d phi(sign * std::sin(theta), sign * std::cos(theta), 1.0, (t - t_ref) / half);
      per_cycle[cycle].add(phi, y, w);
      total.add(phi, y, w);
    };
    record(0);
    for (long i = 0; i < m; ++i) {
      v0[0] = sign * s[i];
      vm[0] = sign * sm[i];
      v1[0] = sign * s[i + 1];
      x = prop.step(x, v0, vm, v1);
      if (i + 1 < m) record(i + 1);
    }
    record(m);
    if (!x.allFinite()) throw OracleUnstable("oracle state diverged");
    if (!identity) x = jump.cwiseProduct(x);
  }
  const Complex last = per_cycle[measure - 1].solve();
  const Complex prev = per_cycle[measure - 2].solve();
  const Complex g = total.solve();
  if (std::abs(last - prev) > options.drift_tolerance * std::abs(last))
    throw OracleUnstable("first-harmonic estimate drifts between the last two cycles");
  return g;
}

}  // namespace crone
