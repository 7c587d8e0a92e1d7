#pragma once

// JSON and CSV boundary: frequencies in Hz and angles in degrees here,
// radians per second and radians everywhere else.

#include <iosfwd>
#include <json.hpp>
#include <string>

#include "crone/describing_function.hpp"
#include "crone/reset_design.hpp"
#include "crone/simulation.hpp"
#include "crone/stability.hpp"

namespace crone {

using Json = nlohmann::json;

Json to_json(const RationalTransferd& tf);
RationalTransferd transfer_from_json(const Json& j);

Json to_json(const StateSpaced& ss);
StateSpaced state_space_from_json(const Json& j);

Json to_json(const CroneDesignSpec& spec);
CroneDesignSpec spec_from_json(const Json& j);

Json to_json(const ResetStrategy& s);
ResetStrategy strategy_from_json(const Json& j);

Json to_json(const ResetControllerModel& m);
ResetControllerModel controller_from_json(const Json& j);

Json design_report(const CroneResetDesign& d);
Json certificate_report(const StabilityReport& r);
Json metrics_json(const TraceMetrics& m);

SimulationConfig simulation_config_from_json(const Json& j);
Json to_json(const SimulationConfig& c);

void write_df_csv(std::ostream& os, const DFResult& df);
void write_bode_csv(std::ostream& os, const FrequencyGridd& grid, const std::vector<std::complex<double>>& linear,
                    const std::vector<std::complex<double>>& df);
void write_trace_csv(std::ostream& os, const SimulationTrace& tr);
void write_sensitivity_csv(std::ostream& os, const SensitivityEstimate& est);

// Stable 64-bit FNV-1a digest as 16 hex digits.
std::string content_hash(const std::string& text);

}  // namespace crone
