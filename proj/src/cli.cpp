#include "crone/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "crone/io.hpp"
#include "crone/plant.hpp"

namespace crone {

namespace {
namespace fs = std::filesystem;

struct LoadedConfig {
  Json raw;
  std::string hash;
  RationalTransferd plant;
  int delay_order = 1;
};

LoadedConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  LoadedConfig c;
  try {
    c.raw = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!c.raw.is_object()) throw ConfigError("config must be a JSON object");
  c.hash = content_hash(c.raw.dump());
  const Json plant = c.raw.value("plant", Json::object());
  if (plant.contains("num")) {
    c.plant = transfer_from_json(plant);
  } else {
    const double damping = plant.value("damping", kStageDamping);
    if (!(damping > 0)) throw ConfigError("plant damping must be positive");
    c.plant = stage_plant(damping, plant.value("delay", true));
  }
  c.delay_order = plant.value("delay_order", 1);
  if (c.delay_order < 1) throw ConfigError("delay_order must be >= 1");
  return c;
}

CroneDesignSpec design_spec(const LoadedConfig& c) {
  if (!c.raw.contains("design")) throw ConfigError("config needs a 'design' section");
  return spec_from_json(c.raw["design"]);
}

ResetStrategy strategy(const LoadedConfig& c) {
  if (!c.raw.contains("reset")) return ResetStrategy{ResetKind::Lag, 1.0, 1.0};
  return strategy_from_json(c.raw["reset"]);
}

PipelineOptions pipeline_options(const LoadedConfig& c) {
  PipelineOptions o;
  const auto mode = c.raw.value("reset", Json::object()).value("gain_mode", std::string("df"));
  if (mode == "df") o.gain_mode = GainMode::DescribingFunction;
  else if (mode == "linear") o.gain_mode = GainMode::BaseLinear;
  else throw ConfigError("gain_mode must be 'df' or 'linear'");
  return o;
}

// Decade-aligned log grid so that round frequencies appear exactly.
FrequencyGridd analysis_grid(const LoadedConfig& c, double ppd) {
  const Json a = c.raw.value("analysis", Json::object());
  const double lo = a.value("f_min_hz", 0.1), hi = a.value("f_max_hz", 10000.0);
  if (!(lo > 0) || !(hi > lo) || !(ppd > 0)) throw ConfigError("analysis band or grid density invalid");
  std::vector<double> w;
  const auto k0 = static_cast<long>(std::ceil(std::log10(lo) * ppd - 1e-9));
  const auto k1 = static_cast<long>(std::floor(std::log10(hi) * ppd + 1e-9));
  for (long k = k0; k <= k1; ++k) w.push_back(hz(std::pow(10.0, double(k) / ppd)));
  return FrequencyGridd(w);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
}

template <typename F>
void write_stream(const fs::path& p, F&& f) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  f(out);
}

ClosedLoop loop_for(const CroneResetDesign& d, const LoadedConfig& c) {
  return build_closed_loop(d.controller, realize(c.plant, c.delay_order));
}

int cmd_design(const LoadedConfig& c, const CommandRequest& r, std::ostream& log) {
  const auto d = design_pipeline(design_spec(c), c.plant, strategy(c), pipeline_options(c));
  const auto path = fs::path(r.out_dir) / ("design_" + c.hash + ".json");
  write_text(path, design_report(d).dump(2));
  log << "nu = " << d.nu << ", nu* = " << d.nu_star << ", phi_r = " << deg(d.phi_r) << " deg -> " << path.string()
      << '\n';
  return exit_code::ok;
}

int cmd_bode(const LoadedConfig& c, const CommandRequest& r, std::ostream& log) {
  const auto grid = analysis_grid(c, r.points_per_decade);
  std::vector<std::complex<double>> lin, df;
  if (c.raw.contains("design")) {
    const auto d = design_pipeline(design_spec(c), c.plant, strategy(c), pipeline_options(c));
    const auto linear_loop = open_loop(d.linear, c.plant).approximated(d.spec.N);
    for (double w : grid) {
      lin.push_back(linear_loop.exact(w));
      df.push_back(df_open_loop(d, c.plant, w));
    }
  } else {
    for (double w : grid) lin.push_back(evaluate_at(c.plant, w));
    df = lin;
  }
  const auto path = fs::path(r.out_dir) / ("bode_" + c.hash + ".csv");
  write_stream(path, [&](std::ostream& os) { write_bode_csv(os, grid, lin, df); });
  log << "bode -> " << path.string() << '\n';
  return exit_code::ok;
}

int cmd_df(const LoadedConfig& c, const CommandRequest& r, std::ostream& log) {
  const auto d = design_pipeline(design_spec(c), c.plant, strategy(c), pipeline_options(c));
  const auto df = gdf_star(d.controller, analysis_grid(c, r.points_per_decade));
  const auto path = fs::path(r.out_dir) / ("df_" + c.hash + ".csv");
  write_stream(path, [&](std::ostream& os) { write_df_csv(os, df); });
  log << "describing function -> " << path.string() << '\n';
  return exit_code::ok;
}

StabilityReport run_certificate(const CroneResetDesign& d, const LoadedConfig& c, int workers) {
  HBetaOptions opts;
  opts.workers = workers;
  return certify(loop_for(d, c), default_spr_grid(), opts);
}

int cmd_stability(const LoadedConfig& c, const CommandRequest& r, std::ostream& log) {
  const auto d = design_pipeline(design_spec(c), c.plant, strategy(c), pipeline_options(c));
  const auto report = run_certificate(d, c, r.workers);
  const auto path = fs::path(r.out_dir) / ("stability_" + c.hash + ".json");
  write_text(path, certificate_report(report).dump(2));
  log << "verdict: " << report.verdict() << (report.hurwitz ? "" : " (flow matrix not Hurwitz)") << " -> "
      << path.string() << '\n';
  if (!report.certified && r.strict) return exit_code::uncertified;
  return exit_code::ok;
}

SimulationConfig sim_config(const LoadedConfig& c) {
  if (!c.raw.contains("simulation")) throw ConfigError("config needs a 'simulation' section");
  return simulation_config_from_json(c.raw["simulation"]);
}

int cmd_simulate(const LoadedConfig& c, const CommandRequest& r, std::ostream& log) {
  const auto d = design_pipeline(design_spec(c), c.plant, strategy(c), pipeline_options(c));
  const auto cfg = sim_config(c);
  const auto report = run_certificate(d, c, r.workers);
  if (!report.certified) {
    log << "warning: H_beta certificate not found (" << (report.hurwitz ? "Hurwitz" : "not Hurwitz") << ")\n";
    if (r.strict) return exit_code::uncertified;
  }
  const auto cl = loop_for(d, c);
  const auto tr = simulate(cl, cfg);
  const auto trace_path = fs::path(r.out_dir) / ("trace_" + c.hash + ".csv");
  const auto metrics_path = fs::path(r.out_dir) / ("metrics_" + c.hash + ".json");
  write_stream(trace_path, [&](std::ostream& os) { write_trace_csv(os, tr); });
  write_text(metrics_path, metrics_json(tr.metrics).dump(2));
  if (c.raw.contains("sensitivity")) {
    const auto& s = c.raw["sensitivity"];
    SweepSpec sweep;
    try {
      sweep.freqs_hz = s.at("freqs_hz").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("sensitivity.freqs_hz: ") + e.what());
    }
    sweep.amplitude = s.value("amplitude", sweep.amplitude);
    sweep.settle_cycles = s.value("settle_cycles", sweep.settle_cycles);
    sweep.measure_cycles = s.value("measure_cycles", sweep.measure_cycles);
    sweep.base_step = cfg.step;
    const auto est = [&] {
      try {
        return estimate_sensitivity(cl, sweep);
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
    }();
    const auto sens_path = fs::path(r.out_dir) / ("sensitivity_" + c.hash + ".csv");
    write_stream(sens_path, [&](std::ostream& os) { write_sensitivity_csv(os, est); });
    log << "sensitivity -> " << sens_path.string() << " (" << est.flagged_hz.size() << " flagged)\n";
  }
  log << "rms error " << tr.metrics.rms_error << ", power " << tr.metrics.avg_power << " -> " << trace_path.string()
      << '\n';
  return exit_code::ok;
}

int cmd_sweep(const LoadedConfig& c, const CommandRequest& r, std::ostream& log) {
  const auto spec = design_spec(c);
  const auto base = strategy(c);
  const auto opts = pipeline_options(c);
  const auto cfg = sim_config(c);
  const Json sw = c.raw.value("sweep", Json::object());
  std::vector<double> gammas, ps;
  try {
    gammas = sw.value("gamma", std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    ps = sw.value("p", std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sweep grid: ") + e.what());
  }
  struct Row {
    double gamma, p, nu_star = NAN, c0 = NAN;
    TraceMetrics m;
    std::string status = "ok";
  };
  std::vector<Row> rows;
  for (double g : gammas)
    for (double p : ps) {
      ResetStrategy s{base.kind, g, p};
      try {
        s.validate();
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
      Row row;
      row.gamma = g;
      row.p = p;
      rows.push_back(row);
    }
  const auto plant_ss = realize(c.plant, c.delay_order);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto& row = rows[i];
      try {
        const auto d = design_pipeline(spec, c.plant, {base.kind, row.gamma, row.p}, opts);
        row.nu_star = d.nu_star;
        row.c0 = d.c0;
        row.m = simulate(build_closed_loop(d.controller, plant_ss), cfg).metrics;
      } catch (const DesignInfeasible&) {
        row.status = "infeasible";
      } catch (const SimulationDiverged&) {
        row.status = "diverged";
      } catch (const Error&) {
        row.status = "error";
      }
    }
  };
  const int n = std::max(1, r.workers > 0 ? r.workers : static_cast<int>(std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(n, static_cast<int>(rows.size())); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  const auto path = fs::path(r.out_dir) / ("sweep_" + c.hash + ".csv");
  write_stream(path, [&](std::ostream& os) {
    os << "gamma,p,nu_star,c0,rms_error,avg_power,peak,settling_time,status\n" << std::setprecision(12);
    for (const auto& row : rows)
      os << row.gamma << ',' << row.p << ',' << row.nu_star << ',' << row.c0 << ',' << row.m.rms_error << ','
         << row.m.avg_power << ',' << row.m.peak << ',' << row.m.settling_time << ',' << row.status << '\n';
  });
  log << rows.size() << " sweep points -> " << path.string() << '\n';
  return exit_code::ok;
}
}  // namespace

int run(const CommandRequest& request, std::ostream& log) {
  try {
    const auto c = load(request.config_path);
    std::error_code ec;
    fs::create_directories(request.out_dir, ec);
    if (!fs::is_directory(request.out_dir)) throw Error("output directory '" + request.out_dir + "' is not usable");
    const auto& s = request.subcommand;
    if (s == "design") return cmd_design(c, request, log);
    if (s == "bode") return cmd_bode(c, request, log);
    if (s == "df") return cmd_df(c, request, log);
    if (s == "stability") return cmd_stability(c, request, log);
    if (s == "simulate") return cmd_simulate(c, request, log);
    if (s == "sweep") return cmd_sweep(c, request, log);
    throw ConfigError("unknown subcommand '" + s + "'");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return exit_code::config_invalid;
  } catch (const DesignInfeasible& e) {
    log << "design infeasible: " << e.what() << '\n';
    return exit_code::design_infeasible;
  } catch (const SimulationDiverged& e) {
    log << "simulation diverged: " << e.what() << '\n';
    return exit_code::diverged;
  } catch (const nlohmann::json::exception& e) {
    log << "config error: " << e.what() << '\n';
    return exit_code::config_invalid;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_code::failure;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"CRONE reset controller design, analysis and simulation"};
  app.require_subcommand(1);
  CommandRequest req;
  const char* names[][2] = {{"design", "Design a CRONE reset controller and write the report"},
                            {"bode", "Write linear and describing-function open-loop responses"},
                            {"df", "Write the controller describing function"},
                            {"stability", "Certify closed-loop stability (H_beta condition)"},
                            {"simulate", "Simulate the closed loop and write trace and metrics"},
                            {"sweep", "Simulate over a (gamma, p) grid"}};
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n[0], n[1]);
    sub->add_option("--config", req.config_path, "Config JSON path")->required();
    sub->add_option("--out", req.out_dir, "Output directory");
    sub->add_option("--grid", req.points_per_decade, "Frequency grid points per decade")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", req.strict, "Treat an uncertified stability verdict as fatal");
    sub->add_option("--workers", req.workers, "Worker threads for parallel subcommands")->check(CLI::NonNegativeNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_code::ok : exit_code::config_invalid;
  }
  req.subcommand = app.get_subcommands().front()->get_name();
  return run(req, std::cerr);
}

}  // namespace crone
