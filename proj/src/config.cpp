#include "savbcfd/config.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <optional>
#include <sstream>

namespace savbcfd {

const char* to_string(Command c) {
  switch (c) {
    case Command::Run: return "run";
    case Command::Converge: return "converge";
    case Command::Adapt: return "adapt";
  }
  return "?";
}

namespace {

// Everything the command line may set; unset values take per-command
// defaults in finalize().
struct RawConfig {
  std::optional<std::string> flow;
  std::optional<int> nx, ny;
  std::optional<double> x0, x1, y0, y1;
  std::optional<double> T, dt, epsilon, beta, mobility, c0;
  std::optional<std::uint64_t> seed;
  std::optional<double> amplitude;
  std::optional<std::string> init;
  bool adaptive = false;
  std::optional<double> dt_min, dt_max, tol, rho;
  std::optional<int> max_retries;
  std::optional<std::string> solver;
  std::optional<double> rel_tol;
  std::optional<long> max_iters;
  std::optional<std::vector<int>> grids;
  std::optional<std::string> out;
  std::optional<std::vector<double>> snapshots;
};

template <typename T>
T require(const std::optional<T>& v, const char* key, Command cmd) {
  if (!v)
    throw ConfigError(key, std::string("required for '") + to_string(cmd) +
                               "' but not given");
  return *v;
}

RunConfig finalize(const RawConfig& raw, Command cmd) {
  RunConfig cfg;
  cfg.command = cmd;

  if (raw.flow) {
    if (*raw.flow == "ac") cfg.flow = Flow::L2;
    else if (*raw.flow == "ch") cfg.flow = Flow::Hm1;
    else throw ConfigError("flow", "must be 'ac' or 'ch', got '" + *raw.flow + "'");
  } else if (cmd == Command::Run) {
    throw ConfigError("flow", "required for 'run' but not given");
  } else {
    cfg.flow = cmd == Command::Adapt ? Flow::Hm1 : Flow::L2;
  }

  if (raw.solver) {
    if (*raw.solver == "cg") cfg.solver.method = SolverMethod::CG;
    else if (*raw.solver == "dense") cfg.solver.method = SolverMethod::Dense;
    else if (*raw.solver == "spectral") cfg.solver.method = SolverMethod::Spectral;
    else throw ConfigError("solver", "must be cg, dense or spectral, got '" +
                                         *raw.solver + "'");
  }
  cfg.solver.rel_tol = raw.rel_tol.value_or(1e-11);
  cfg.solver.max_iters = raw.max_iters.value_or(0);

  cfg.x0 = raw.x0.value_or(0.0);
  cfg.x1 = raw.x1.value_or(1.0);
  cfg.y0 = raw.y0.value_or(0.0);
  cfg.y1 = raw.y1.value_or(1.0);
  cfg.beta = raw.beta.value_or(0.0);
  cfg.c0 = raw.c0.value_or(0.0);
  cfg.seed = raw.seed.value_or(1);
  cfg.amplitude = raw.amplitude.value_or(0.05);
  if (raw.init) {
    if (*raw.init == "random") cfg.initial = InitialData::Random;
    else if (*raw.init == "cosine") cfg.initial = InitialData::Cosine;
    else throw ConfigError("init", "must be 'random' or 'cosine', got '" + *raw.init + "'");
  }
  cfg.out_dir = raw.out.value_or(".");
  cfg.snapshots = raw.snapshots.value_or(std::vector<double>{});
  cfg.adaptive = raw.adaptive || cmd == Command::Adapt;

  AdaptiveConfig ad;
  cfg.adapt.dt_min = raw.dt_min.value_or(ad.dt_min);
  cfg.adapt.dt_max = raw.dt_max.value_or(ad.dt_max);
  cfg.adapt.tol = raw.tol.value_or(ad.tol);
  cfg.adapt.rho = raw.rho.value_or(ad.rho);
  cfg.adapt.max_retries = raw.max_retries.value_or(ad.max_retries);

  switch (cmd) {
    case Command::Run:
      cfg.nx = require(raw.nx, "nx", cmd);
      cfg.ny = raw.ny.value_or(cfg.nx);
      cfg.T = require(raw.T, "T", cmd);
      cfg.dt = cfg.adaptive ? raw.dt.value_or(cfg.adapt.dt_min)
                            : require(raw.dt, "dt", cmd);
      cfg.epsilon = require(raw.epsilon, "epsilon", cmd);
      cfg.mobility = require(raw.mobility, "mobility", cmd);
      break;
    case Command::Converge: {
      // Accuracy test defaults: Allen-Cahn eps = 0.08, Cahn-Hilliard 0.2.
      cfg.T = raw.T.value_or(0.5);
      cfg.dt = raw.dt.value_or(5e-4);
      cfg.epsilon = raw.epsilon.value_or(cfg.flow == Flow::L2 ? 0.08 : 0.2);
      cfg.mobility = raw.mobility.value_or(0.01);
      cfg.grids = raw.grids.value_or(std::vector<int>{10, 20, 40, 80, 160});
      cfg.nx = cfg.ny = cfg.grids.empty() ? 0 : cfg.grids.front();
      if (raw.nx || raw.ny)
        throw ConfigError("nx", "not used by 'converge'; pass --grids");
      break;
    }
    case Command::Adapt:
      cfg.nx = raw.nx.value_or(128);
      cfg.ny = raw.ny.value_or(cfg.nx);
      cfg.T = raw.T.value_or(1.0);
      cfg.dt = raw.dt.value_or(cfg.adapt.dt_min);
      cfg.epsilon = raw.epsilon.value_or(0.01);
      cfg.beta = raw.beta.value_or(6.0);
      cfg.mobility = raw.mobility.value_or(0.002);
      if (!raw.snapshots) cfg.snapshots = {0.02, 0.1, 1.0};
      break;
  }
  validate(cfg);
  return cfg;
}

void positive(double v, const char* key) {
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(key, "must be positive");
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.command == Command::Converge) {
    if (c.grids.size() < 2)
      throw ConfigError("grids", "need at least two resolutions");
    for (std::size_t k = 0; k < c.grids.size(); ++k) {
      if (c.grids[k] < 2) throw ConfigError("grids", "cell counts must be >= 2");
      if (k > 0 && c.grids[k] != 2 * c.grids[k - 1])
        throw ConfigError("grids", "each resolution must double the previous");
    }
  } else {
    if (c.nx < 2) throw ConfigError("nx", "must be >= 2");
    if (c.ny < 2) throw ConfigError("ny", "must be >= 2");
  }
  if (!(c.x1 > c.x0)) throw ConfigError("x1", "must exceed x0");
  if (!(c.y1 > c.y0)) throw ConfigError("y1", "must exceed y0");
  positive(c.T, "T");
  positive(c.dt, "dt");
  if (!c.adaptive && c.command != Command::Converge && c.dt > c.T)
    throw ConfigError("dt", "must not exceed T");
  positive(c.epsilon, "epsilon");
  positive(c.mobility, "mobility");
  if (!(c.beta >= 0)) throw ConfigError("beta", "must be >= 0");
  if (!std::isfinite(c.c0)) throw ConfigError("C0", "must be finite");
  if (!(c.amplitude >= 0)) throw ConfigError("amplitude", "must be >= 0");
  positive(c.solver.rel_tol, "rel-tol");
  if (c.solver.max_iters < 0) throw ConfigError("max-iters", "must be >= 0 (0 selects 10 Nx Ny)");
  if (c.adaptive) {
    positive(c.adapt.dt_min, "dt-min");
    positive(c.adapt.dt_max, "dt-max");
    if (c.adapt.dt_min > c.adapt.dt_max)
      throw ConfigError("dt-min", "dt-min must not exceed dt-max");
    positive(c.adapt.tol, "tol");
    if (!(c.adapt.rho > 0 && c.adapt.rho <= 1))
      throw ConfigError("rho", "must lie in (0, 1]");
    if (c.adapt.max_retries < 1) throw ConfigError("max-retries", "must be >= 1");
    if (c.dt < c.adapt.dt_min || c.dt > c.adapt.dt_max)
      throw ConfigError("dt", "initial step must lie in [dt-min, dt-max]");
  }
  for (double t : c.snapshots)
    if (!(t >= 0) || t > c.T)
      throw ConfigError("snapshots", "times must lie in [0, T]");
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RawConfig raw;
  CLI::App app{"SAV/Crank-Nicolson block-centered finite differences for "
               "Allen-Cahn and Cahn-Hilliard gradient flows",
               "savbcfd"};
  app.set_config("--config", "", "flat key=value configuration file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "fixed-step (or --adaptive) simulation");
  auto* converge = app.add_subcommand("converge", "Cauchy-error convergence study");
  auto* adapt = app.add_subcommand("adapt", "adaptive coarsening run");
  for (auto* sub : {run, converge, adapt}) sub->fallthrough();

  app.add_option("--flow", raw.flow, "ac (L2) or ch (H^-1)");
  app.add_option("--nx", raw.nx, "cells in x");
  app.add_option("--ny", raw.ny, "cells in y (default: nx)");
  app.add_option("--x0", raw.x0);
  app.add_option("--x1", raw.x1);
  app.add_option("--y0", raw.y0);
  app.add_option("--y1", raw.y1);
  app.add_option("--T", raw.T, "final time");
  app.add_option("--dt", raw.dt, "time step (initial step when adaptive)");
  app.add_option("--epsilon", raw.epsilon, "interface width");
  app.add_option("--beta", raw.beta, "stabilization shift (default 0)");
  app.add_option("--mobility", raw.mobility, "mobility M");
  app.add_option("--C0", raw.c0, "additive constant in E1 (default 0)");
  app.add_option("--seed", raw.seed, "random initial data seed");
  app.add_option("--amplitude", raw.amplitude, "random data half-width");
  app.add_option("--init", raw.init, "initial data: random (default) or cosine");
  app.add_flag("--adaptive", raw.adaptive, "adaptive time stepping");
  app.add_option("--dt-min", raw.dt_min);
  app.add_option("--dt-max", raw.dt_max);
  app.add_option("--tol", raw.tol, "adaptive reference tolerance");
  app.add_option("--rho", raw.rho, "adaptive safety coefficient");
  app.add_option("--max-retries", raw.max_retries);
  app.add_option("--solver", raw.solver, "cg (default), dense or spectral");
  app.add_option("--rel-tol", raw.rel_tol, "linear solver relative tolerance");
  app.add_option("--max-iters", raw.max_iters, "CG iteration cap (0: 10 Nx Ny)");
  app.add_option("--grids", raw.grids, "converge: cells per axis, e.g. 10,20,40")
      ->delimiter(',');
  app.add_option("--out", raw.out, "output directory");
  app.add_option("--snapshots", raw.snapshots, "snapshot times t1,t2,...")
      ->delimiter(',');

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.get_name(), e.what());
  }
  Command cmd = Command::Run;
  if (converge->parsed()) cmd = Command::Converge;
  if (adapt->parsed()) cmd = Command::Adapt;
  return finalize(raw, cmd);
}

std::string echo_config(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  auto join = [](const auto& v) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t k = 0; k < v.size(); ++k) s << (k ? "," : "") << v[k];
    return s.str();
  };
  os << "# command: " << to_string(c.command) << '\n'
     << "flow=" << to_string(c.flow) << '\n';
  if (c.command == Command::Converge)
    os << "grids=\"" << join(c.grids) << "\"\n";
  else
    os << "nx=" << c.nx << "\nny=" << c.ny << '\n';
  os << "x0=" << c.x0 << "\nx1=" << c.x1 << "\ny0=" << c.y0 << "\ny1=" << c.y1
     << "\nT=" << c.T << "\ndt=" << c.dt << "\nepsilon=" << c.epsilon
     << "\nbeta=" << c.beta << "\nmobility=" << c.mobility << "\nC0=" << c.c0
     << "\nseed=" << c.seed << "\namplitude=" << c.amplitude
     << "\ninit=" << (c.initial == InitialData::Random ? "random" : "cosine")
     << "\nadaptive=" << (c.adaptive ? "true" : "false")
     << "\ndt-min=" << c.adapt.dt_min << "\ndt-max=" << c.adapt.dt_max
     << "\ntol=" << c.adapt.tol << "\nrho=" << c.adapt.rho
     << "\nmax-retries=" << c.adapt.max_retries
     << "\nsolver=" << to_string(c.solver.method)
     << "\nrel-tol=" << c.solver.rel_tol
     << "\nmax-iters=" << c.solver.max_iters << '\n';
  if (!c.snapshots.empty()) os << "snapshots=\"" << join(c.snapshots) << "\"\n";
  return os.str();
}

}  // namespace savbcfd
