#include "crone/io.hpp"

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "crone/plant.hpp"

namespace crone {

namespace {
template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key);
}

Json matrix_json(const MatrixX<double>& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
    rows.push_back(row);
  }
  return rows;
}

MatrixX<double> matrix_from(const Json& j, const char* key, Eigen::Index cols_if_empty) {
  const auto rows = field<std::vector<std::vector<double>>>(j, key);
  if (rows.empty()) return MatrixX<double>(0, cols_if_empty);
  const auto cols = static_cast<Eigen::Index>(rows.front().size());
  MatrixX<double> M(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) throw ConfigError(std::string("ragged matrix '") + key + "'");
    for (Eigen::Index k = 0; k < cols; ++k) M(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
  }
  return M;
}

VectorX<double> vector_from(const std::vector<double>& v) {
  return Eigen::Map<const VectorX<double>>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const VectorX<double>& v) { return {v.data(), v.data() + v.size()}; }

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename F>
auto as_config(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> unwrapped_phase_deg(const std::vector<std::complex<double>>& values) {
  std::vector<double> ph;
  ph.reserve(values.size());
  for (const auto& v : values) ph.push_back(std::arg(v));
  ph = unwrap(ph);
  for (auto& p : ph) p = deg(p);
  return ph;
}
}  // namespace

Json to_json(const RationalTransferd& tf) {
  return {{"num", to_std(tf.num())}, {"den", to_std(tf.den())}, {"delay", tf.delay()}};
}

RationalTransferd transfer_from_json(const Json& j) {
  return as_config([&] {
    return RationalTransferd(vector_from(field<std::vector<double>>(j, "num")),
                             vector_from(field<std::vector<double>>(j, "den")), field_or<double>(j, "delay", 0.0));
  });
}

Json to_json(const StateSpaced& ss) {
  return {{"A", matrix_json(ss.A())}, {"B", matrix_json(ss.B())}, {"C", matrix_json(ss.C())}, {"D", matrix_json(ss.D())}};
}

StateSpaced state_space_from_json(const Json& j) {
  return as_config([&] {
    const auto D = matrix_from(j, "D", 0);
    auto A = matrix_from(j, "A", 0);
    if (A.size() == 0) A.resize(0, 0);
    auto B = matrix_from(j, "B", D.cols());
    auto C = matrix_from(j, "C", 0);
    if (A.rows() == 0) {
      B.resize(0, D.cols());
      C.resize(D.rows(), 0);
    }
    return StateSpaced(A, B, C, D);
  });
}

Json to_json(const CroneDesignSpec& s) {
  return {{"pm_deg", deg(s.phase_margin)}, {"wcg_hz", to_hz(s.wcg)}, {"wb_hz", to_hz(s.wb)},
          {"wh_hz", to_hz(s.wh)},          {"wi_hz", to_hz(s.wi)},   {"wf_hz", to_hz(s.wf)},
          {"ni", s.ni},                    {"nf", s.nf},             {"N", s.N},
          {"generation", static_cast<int>(s.generation)},           {"compensate_delay", s.compensate_delay}};
}

CroneDesignSpec spec_from_json(const Json& j) {
  CroneDesignSpec s;
  s.phase_margin = rad(field<double>(j, "pm_deg"));
  s.wcg = hz(field<double>(j, "wcg_hz"));
  s.wb = hz(field<double>(j, "wb_hz"));
  s.wh = hz(field<double>(j, "wh_hz"));
  s.wi = hz(field<double>(j, "wi_hz"));
  s.wf = hz(field<double>(j, "wf_hz"));
  s.ni = field<int>(j, "ni");
  s.nf = field<int>(j, "nf");
  s.N = field<int>(j, "N");
  const int g = field_or<int>(j, "generation", 1);
  if (g != 1 && g != 2) throw ConfigError("generation must be 1 or 2");
  s.generation = g == 1 ? Generation::First : Generation::Second;
  s.compensate_delay = field_or<bool>(j, "compensate_delay", true);
  as_config([&] { return s.validate(); });
  return s;
}

Json to_json(const ResetStrategy& s) { return {{"kind", to_string(s.kind)}, {"gamma", s.gamma}, {"p", s.p}}; }

ResetStrategy strategy_from_json(const Json& j) {
  ResetStrategy s;
  s.kind = as_config([&] { return reset_kind_from_string(field_or<std::string>(j, "kind", "lag")); });
  s.gamma = field<double>(j, "gamma");
  s.p = field<double>(j, "p");
  as_config([&] {
    s.validate();
    return 0;
  });
  return s;
}

Json to_json(const ResetControllerModel& m) {
  Json idx = Json::array();
  for (auto i : m.reset_indices) idx.push_back(i);
  return {{"strategy", to_string(m.kind)},
          {"gamma", m.gamma},
          {"p", m.p},
          {"A", matrix_json(m.A)},
          {"B", matrix_json(m.B)},
          {"C", matrix_json(m.C)},
          {"D", matrix_json(m.D)},
          {"A_rho", matrix_json(m.A_rho)},
          {"reset_indices", idx},
          {"sigma_r", to_json(m.sigma_r)},
          {"sigma_nr", to_json(m.sigma_nr)}};
}

ResetControllerModel controller_from_json(const Json& j) {
  ResetStrategy s;
  s.kind = as_config([&] { return reset_kind_from_string(field<std::string>(j, "strategy")); });
  s.gamma = field<double>(j, "gamma");
  s.p = field<double>(j, "p");
  const auto sigma_r = state_space_from_json(field<Json>(j, "sigma_r"));
  const auto sigma_nr = state_space_from_json(field<Json>(j, "sigma_nr"));
  const auto model = as_config([&] { return convex_combine(assemble(sigma_r, sigma_nr, {s.kind, s.gamma, 0.0}), s.p); });
  const auto A = matrix_from(j, "A", 0);
  const auto B = matrix_from(j, "B", 1);
  const auto C = matrix_from(j, "C", 0);
  const auto D = matrix_from(j, "D", 1);
  auto same = [](const MatrixX<double>& x, const MatrixX<double>& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || (x - y).cwiseAbs().maxCoeff() <=
                                                                                 1e-12 * (1 + y.cwiseAbs().maxCoeff()));
  };
  if (!same(A, model.A) || !same(B, model.B) || !same(C, model.C) || !same(D, model.D))
    throw ConfigError("controller matrices are inconsistent with its reset and non-reset parts");
  return model;
}

Json design_report(const CroneResetDesign& d) {
  return {{"nu", d.nu},
          {"nu_star", d.nu_star},
          {"phi_r_deg", deg(d.phi_r)},
          {"c0", d.c0},
          {"feasible", d.feasible},
          {"strategy", to_json(d.strategy)},
          {"spec", to_json(d.spec)},
          {"controller", to_json(d.controller)}};
}

Json certificate_report(const StabilityReport& r) {
  Json beta = Json::array();
  for (Eigen::Index i = 0; i < r.certificate.beta.size(); ++i) beta.push_back(r.certificate.beta[i]);
  return {{"hurwitz", r.hurwitz},
          {"beta", beta},
          {"p_rho", matrix_json(r.certificate.p_rho)},
          {"min_real_part", r.hurwitz ? finite_or_null(r.certificate.min_real_part) : Json(nullptr)},
          {"grid_points", r.grid_points},
          {"verdict", r.verdict()}};
}

Json metrics_json(const TraceMetrics& m) {
  return {{"rms_error", m.rms_error},
          {"avg_power", m.avg_power},
          {"peak", m.peak},
          {"peak_time", m.peak_time},
          {"settling_time", finite_or_null(m.settling_time)},
          {"settled", m.settled}};
}

SimulationConfig simulation_config_from_json(const Json& j) {
  SimulationConfig c;
  c.step = field_or<double>(j, "step", c.step);
  c.duration = field<double>(j, "duration");
  c.metric_start = field_or<double>(j, "metric_start", 0.0);
  if (j.contains("reference") && !j["reference"].is_null()) {
    const auto& r = j["reference"];
    c.reference = ReferenceSpec{field<double>(r, "amplitude"), field<double>(r, "period"), field<double>(r, "snap")};
  }
  if (j.contains("feedforward") && !j["feedforward"].is_null()) {
    const auto& f = j["feedforward"];
    c.feedforward = FeedforwardSpec{field<double>(f, "m"), field<double>(f, "c")};
  }
  if (j.contains("noise") && !j["noise"].is_null()) {
    const auto& n = j["noise"];
    c.noise = NoiseSpec{field<double>(n, "amplitude"), field<double>(n, "freq_hz")};
  }
  if (j.contains("disturbance") && !j["disturbance"].is_null()) {
    const auto& d = j["disturbance"];
    c.disturbance =
        DisturbanceSpec{field<double>(d, "amplitude"), field_or<double>(d, "onset", 0.0), field_or<double>(d, "width", 0.0)};
  }
  c.validate();
  if (c.reference) {
    try {
      FourthOrderProfile check(*c.reference);
    } catch (const ProfileError& e) {
      throw ConfigError(e.what());
    }
  }
  return c;
}

Json to_json(const SimulationConfig& c) {
  Json j = {{"step", c.step}, {"duration", c.duration}, {"metric_start", c.metric_start}};
  if (c.reference) j["reference"] = {{"amplitude", c.reference->amplitude}, {"period", c.reference->period}, {"snap", c.reference->snap}};
  if (c.feedforward) j["feedforward"] = {{"m", c.feedforward->m}, {"c", c.feedforward->c}};
  if (c.noise) j["noise"] = {{"amplitude", c.noise->amplitude}, {"freq_hz", c.noise->freq_hz}};
  if (c.disturbance)
    j["disturbance"] = {{"amplitude", c.disturbance->amplitude}, {"onset", c.disturbance->onset}, {"width", c.disturbance->width}};
  return j;
}

void write_df_csv(std::ostream& os, const DFResult& df) {
  os << "freq_hz,re,im,mag_db,phase_deg,phase_lead_deg\n" << std::setprecision(12);
  const auto ph = unwrapped_phase_deg(df.values);
  for (std::size_t k = 0; k < df.values.size(); ++k) {
    const auto v = df.values[k];
    os << to_hz(df.grid[k]) << ',' << v.real() << ',' << v.imag() << ',' << 20 * std::log10(std::abs(v)) << ','
       << ph[k] << ',' << deg(df.phase_lead[k]) << '\n';
  }
}

void write_bode_csv(std::ostream& os, const FrequencyGridd& grid, const std::vector<std::complex<double>>& linear,
                    const std::vector<std::complex<double>>& df) {
  os << "freq_hz,linear_mag_db,linear_phase_deg,df_mag_db,df_phase_deg\n" << std::setprecision(12);
  const auto pl = unwrapped_phase_deg(linear);
  const auto pd = unwrapped_phase_deg(df);
  for (std::size_t k = 0; k < grid.size(); ++k)
    os << to_hz(grid[k]) << ',' << 20 * std::log10(std::abs(linear[k])) << ',' << pl[k] << ','
       << 20 * std::log10(std::abs(df[k])) << ',' << pd[k] << '\n';
}

void write_trace_csv(std::ostream& os, const SimulationTrace& tr) {
  os << "time,e,u,y,event\n" << std::setprecision(17);
  for (std::size_t k = 0; k < tr.time.size(); ++k)
    os << tr.time[k] << ',' << tr.e[k] << ',' << tr.u[k] << ',' << tr.y[k] << ',' << tr.events[k] << '\n';
}

void write_sensitivity_csv(std::ostream& os, const SensitivityEstimate& est) {
  os << "freq_hz,S_re,S_im,T_re,T_im\n" << std::setprecision(12);
  for (std::size_t k = 0; k < est.freqs_hz.size(); ++k)
    os << est.freqs_hz[k] << ',' << est.S[k].real() << ',' << est.S[k].imag() << ',' << est.T[k].real() << ','
       << est.T[k].imag() << '\n';
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace crone
