#pragma once

#include "savbcfd/adaptive.hpp"
#include "savbcfd/harness.hpp"
#include "savbcfd/linsolve.hpp"
#include "savbcfd/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace savbcfd {

enum class Command { Run, Converge, Adapt };

/// Fully validated run configuration with every default applied.
struct RunConfig {
  Command command = Command::Run;
  Flow flow = Flow::L2;
  int nx = 0, ny = 0;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double T = 0;
  double dt = 0;
  double epsilon = 0;
  double beta = 0;
  double mobility = 0;
  double c0 = 0;
  std::uint64_t seed = 1;
  double amplitude = 0.05;
  InitialData initial = InitialData::Random;
  bool adaptive = false;
  AdaptiveConfig adapt;
  LinearSolverConfig solver;
  std::vector<int> grids;  // converge: cells per axis, doubling
  std::string out_dir = ".";
  std::vector<double> snapshots;
};

/// Rejected configuration; key() names the offending setting.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Thrown when the command line asked for help or version output; the
/// message is the text to print, exit status 0.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `savbcfd <run|converge|adapt> [flags]`, reading `--config PATH`
/// (flat key=value lines, keys are the long flag names) before flags, which
/// override it. Throws ConfigError on any missing, malformed, unknown or
/// out-of-range setting.
RunConfig parse_config(const std::vector<std::string>& args);

/// Checks every constraint; throws ConfigError naming the first violation.
void validate(const RunConfig& cfg);

/// key=value text of the effective configuration, re-readable via --config.
std::string echo_config(const RunConfig& cfg);

const char* to_string(Command c);

}  // namespace savbcfd

namespace savbcfd {

/// Command-line entry point. Returns 0 on success, 1 for configuration
/// errors and 2 for numerical failures; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace savbcfd
