#pragma once

#include <iosfwd>
#include <string>

namespace crone {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config_invalid = 2;
inline constexpr int design_infeasible = 3;
inline constexpr int uncertified = 4;
inline constexpr int diverged = 5;
}  // namespace exit_code

struct CommandRequest {
  std::string subcommand;  // design | bode | df | stability | simulate | sweep
  std::string config_path;
  std::string out_dir = ".";
  double points_per_decade = 50;
  bool strict = false;
  int workers = 0;
};

// Executes one request, writing artifacts into out_dir. Diagnostics go to `log`.
int run(const CommandRequest& request, std::ostream& log);

// Argument parsing front end.
int run_cli(int argc, char** argv);

}  // namespace crone
