#include "crone/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace crone {

namespace {
using Complex = std::complex<double>;
using MatrixXc = MatrixX<Complex>;

// Resolvent pieces per frequency: plant-output row and reset block of
// (jwI - A)^-1 restricted to the reset columns.
struct ResolventSamples {
  std::vector<Eigen::RowVectorXcd> output;  // C_y X, 1 x n_r
  std::vector<MatrixXc> reset;              // X(R, :), n_r x n_r
};

ResolventSamples sample_resolvent(const ClosedLoop& cl, const FrequencyGridd& grid) {
  const auto n = cl.states();
  const auto nr = static_cast<Eigen::Index>(cl.reset_indices.size());
  MatrixXc E = MatrixXc::Zero(n, nr);
  for (Eigen::Index j = 0; j < nr; ++j) E(cl.reset_indices[j], j) = 1.0;
  ResolventSamples out;
  out.output.reserve(grid.size());
  out.reset.reserve(grid.size());
  const MatrixXc Ac = cl.A.cast<Complex>();
  const Eigen::RowVectorXcd Cy = cl.C_y.cast<Complex>();
  for (double w : grid) {
    MatrixXc M = -Ac;
    M.diagonal().array() += Complex(0, w);
    Eigen::PartialPivLU<MatrixXc> lu(M);
    const MatrixXc X = lu.solve(E);
    out.output.push_back(Cy * X);
    MatrixXc R(nr, nr);
    for (Eigen::Index i = 0; i < nr; ++i) R.row(i) = X.row(cl.reset_indices[i]);
    out.reset.push_back(R);
  }
  return out;
}

double min_hermitian_eigenvalue(const MatrixXc& H) {
  const MatrixXc he = (H + H.adjoint()) / 2.0;
  if (he.rows() == 1) return he(0, 0).real();
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(he, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double min_real_part(const ResolventSamples& rs, const Eigen::VectorXd& beta, const MatrixX<double>& p_rho) {
  double worst = std::numeric_limits<double>::infinity();
  const MatrixXc b = beta.cast<Complex>();
  const MatrixXc P = p_rho.cast<Complex>();
  for (std::size_t k = 0; k < rs.output.size(); ++k) {
    const MatrixXc H = b * rs.output[k] + P * rs.reset[k];
    worst = std::min(worst, min_hermitian_eigenvalue(H));
  }
  return worst;
}

bool positive_definite(const MatrixX<double>& S) {
  Eigen::SelfAdjointEigenSolver<MatrixX<double>> es((S + S.transpose()) / 2.0, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 0;
}

struct Candidate {
  HBetaCertificate cert;
  bool certified = false;
  double score = -std::numeric_limits<double>::infinity();
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.certified != b.certified) return a.certified;
  return a.score > b.score;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

std::vector<double> logspace(double lo, double hi, int n) {
  auto v = linspace(std::log10(lo), std::log10(hi), n);
  for (auto& x : v) x = std::pow(10.0, x);
  return v;
}

// Enumerates all beta / P_rho combinations, parallel over beta candidates.
Candidate search_grid(const ClosedLoop& cl, const ResolventSamples& rs, const std::vector<Eigen::VectorXd>& betas,
                      const std::vector<MatrixX<double>>& ps, int workers) {
  std::vector<Candidate> per_beta(betas.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < betas.size(); i = next++) {
      Candidate best;
      for (const auto& P : ps) {
        Candidate c;
        c.cert.beta = betas[i];
        c.cert.p_rho = P;
        c.cert.min_real_part = min_real_part(rs, betas[i], P);
        c.cert.high_frequency_ok = h_beta_high_frequency_ok(cl, betas[i], P);
        c.certified = c.cert.min_real_part > 0 && c.cert.high_frequency_ok;
        const double scale = betas[i].lpNorm<Eigen::Infinity>() + P.norm();
        c.score = c.cert.min_real_part / scale;
        if (better(c, best)) best = c;
      }
      per_beta[i] = best;
    }
  };
  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(betas.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  Candidate best;
  for (const auto& c : per_beta)
    if (better(c, best)) best = c;
  return best;
}

std::vector<Eigen::VectorXd> beta_grid(const std::vector<std::vector<double>>& axes) {
  std::vector<Eigen::VectorXd> out;
  if (axes.size() == 1) {
    for (double b : axes[0]) out.push_back(Eigen::VectorXd::Constant(1, b));
  } else {
    for (double b0 : axes[0])
      for (double b1 : axes[1]) out.push_back((Eigen::VectorXd(2) << b0, b1).finished());
  }
  return out;
}

std::vector<MatrixX<double>> p_grid(const std::vector<std::vector<double>>& axes) {
  std::vector<MatrixX<double>> out;
  if (axes.size() == 1) {
    for (double p : axes[0]) out.push_back(MatrixX<double>::Constant(1, 1, p));
  } else {
    for (double p0 : axes[0])
      for (double p1 : axes[1]) {
        MatrixX<double> P = MatrixX<double>::Zero(2, 2);
        P(0, 0) = p0;
        P(1, 1) = p1;
        out.push_back(P);
      }
  }
  return out;
}
}  // namespace

bool ClosedLoop::hurwitz() const {
  return std::all_of(eigenvalues.begin(), eigenvalues.end(), [](const auto& l) { return l.real() < 0; });
}

ClosedLoop build_closed_loop(const ResetControllerModel& controller, const StateSpaced& plant) {
  if (!plant.is_siso()) throw ParameterError("closed loop needs a SISO plant");
  if (plant.D()(0, 0) != 0.0) throw ParameterError("closed loop needs a strictly proper plant");
  if (controller.B.cols() != 1 || controller.C.rows() != 1) throw ParameterError("controller must be SISO");
  const auto nR = controller.states();
  const auto np = plant.states();
  const auto n = nR + np;
  const double DR = controller.D(0, 0);
  ClosedLoop cl;
  cl.n_controller = nR;
  cl.n_plant = np;
  cl.D_R = DR;
  cl.A = MatrixX<double>::Zero(n, n);
  cl.A.topLeftCorner(nR, nR) = controller.A;
  cl.A.topRightCorner(nR, np) = -controller.B * plant.C();
  cl.A.bottomLeftCorner(np, nR) = plant.B() * controller.C;
  cl.A.bottomRightCorner(np, np) = plant.A() - DR * plant.B() * plant.C();
  cl.B_w = MatrixX<double>::Zero(n, 1);
  cl.B_w.topRows(nR) = controller.B;
  cl.B_w.bottomRows(np) = DR * plant.B();
  cl.B_f = MatrixX<double>::Zero(n, 1);
  cl.B_f.bottomRows(np) = plant.B();
  cl.C_y = Eigen::RowVectorXd::Zero(n);
  cl.C_y.tail(np) = plant.C().row(0);
  cl.C_u = Eigen::RowVectorXd::Zero(n);
  cl.C_u.head(nR) = controller.C.row(0);
  cl.jump = Eigen::VectorXd::Ones(n);
  for (auto i : controller.reset_indices) {
    if (controller.A_rho(i, i) != 1.0) {
      cl.jump[i] = controller.A_rho(i, i);
      cl.reset_indices.push_back(i);
    }
  }
  for (Eigen::Index i = nR; i < n; ++i) cl.plant_indices.push_back(i);
  if (n > 0) {
    Eigen::EigenSolver<MatrixX<double>> es(cl.A, false);
    for (Eigen::Index i = 0; i < n; ++i) cl.eigenvalues.push_back(es.eigenvalues()[i]);
  }
  return cl;
}

FrequencyGridd default_spr_grid(std::size_t points) { return FrequencyGridd::log_count(1e-2, 1e6, points); }

double h_beta_min_real_part(const ClosedLoop& cl, const Eigen::VectorXd& beta, const MatrixX<double>& p_rho,
                            const FrequencyGridd& grid) {
  if (cl.reset_indices.empty()) return std::numeric_limits<double>::infinity();
  return min_real_part(sample_resolvent(cl, grid), beta, p_rho);
}

bool h_beta_high_frequency_ok(const ClosedLoop& cl, const Eigen::VectorXd& beta, const MatrixX<double>& p_rho) {
  const auto nr = static_cast<Eigen::Index>(cl.reset_indices.size());
  if (nr == 0) return true;
  MatrixX<double> c = beta * cl.C_y;
  for (Eigen::Index i = 0; i < nr; ++i)
    for (Eigen::Index j = 0; j < nr; ++j) c(i, cl.reset_indices[j]) += p_rho(i, j);
  MatrixX<double> b = MatrixX<double>::Zero(cl.states(), nr);
  for (Eigen::Index j = 0; j < nr; ++j) b(cl.reset_indices[j], j) = 1.0;
  const MatrixX<double> cb = c * b;
  const MatrixX<double> cab = c * cl.A * b;
  return positive_definite(cb + cb.transpose()) && positive_definite(-(cab + cab.transpose()));
}

HBetaSearchResult h_beta_search(const ClosedLoop& cl, const FrequencyGridd& grid, const HBetaOptions& options) {
  if (!cl.hurwitz()) throw StabilityPreconditionError("closed-loop flow matrix is not Hurwitz");
  HBetaSearchResult result;
  result.grid_points = grid.size();
  const auto nr = cl.reset_indices.size();
  if (nr == 0) {
    result.found = true;
    result.best.min_real_part = std::numeric_limits<double>::infinity();
    result.best.high_frequency_ok = true;
    return result;
  }
  if (nr > 2) throw ParameterError("certificate search supports at most two reset states");
  const int workers = options.workers > 0 ? options.workers
                                          : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const auto rs = sample_resolvent(cl, grid);

  const int p_points = nr == 1 ? options.p_points : std::min(options.p_points, 7);
  const auto beta_axis = linspace(-options.beta_max, options.beta_max, options.beta_points);
  const auto p_axis = logspace(options.p_min, options.p_max, p_points);
  Candidate best = search_grid(cl, rs, beta_grid(std::vector<std::vector<double>>(nr, beta_axis)),
                               p_grid(std::vector<std::vector<double>>(nr, p_axis)), workers);

  // Refine around the best candidate with a ten times finer spacing.
  const double db = beta_axis.size() > 1 ? beta_axis[1] - beta_axis[0] : options.beta_max;
  const double dp = p_axis.size() > 1 ? std::log10(p_axis[1] / p_axis[0]) : 1.0;
  const int r = std::max(1, options.refine_factor);
  std::vector<std::vector<double>> fine_beta, fine_p;
  for (std::size_t i = 0; i < nr; ++i) {
    const double b = best.cert.beta[static_cast<Eigen::Index>(i)];
    const double p = best.cert.p_rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    fine_beta.push_back(linspace(b - db, b + db, 2 * r + 1));
    fine_p.push_back(logspace(p * std::pow(10.0, -dp), p * std::pow(10.0, dp), nr == 1 ? 2 * r + 1 : 5));
  }
  const Candidate refined = search_grid(cl, rs, beta_grid(fine_beta), p_grid(fine_p), workers);
  if (better(refined, best)) best = refined;

  result.found = best.certified;
  result.best = best.cert;
  return result;
}

StabilityReport certify(const ClosedLoop& cl, const FrequencyGridd& grid, const HBetaOptions& options) {
  StabilityReport report;
  report.grid_points = grid.size();
  report.hurwitz = cl.hurwitz();
  if (!report.hurwitz) return report;
  const auto result = h_beta_search(cl, grid, options);
  report.certified = result.found;
  report.certificate = result.best;
  return report;
}

}  // namespace crone
