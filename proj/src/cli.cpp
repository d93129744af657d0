#include "savbcfd/config.hpp"
#include "savbcfd/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace savbcfd {

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << text;
}

CoarseningSetup coarsening_setup(const RunConfig& c) {
  CoarseningSetup s;
  s.nx = c.nx;
  s.ny = c.ny;
  s.x0 = c.x0;
  s.x1 = c.x1;
  s.y0 = c.y0;
  s.y1 = c.y1;
  s.T = c.T;
  s.epsilon = c.epsilon;
  s.beta = c.beta;
  s.mobility = c.mobility;
  s.c0 = c.c0;
  s.flow = c.flow;
  s.seed = c.seed;
  s.amplitude = c.amplitude;
  s.initial = c.initial;
  s.adaptive = c.adaptive;
  s.dt = c.dt;
  s.adapt = c.adapt;
  s.solver = c.solver;
  s.snapshot_times = c.snapshots;
  return s;
}

nlohmann::json simulate(const RunConfig& c, const fs::path& dir) {
  const CoarseningResult res = run_coarsening(coarsening_setup(c));
  const RunHistory& h = res.history;
  write_history_csv((dir / "history.csv").string(), h);
  const Grid2 grid(c.nx, c.ny, c.x0, c.x1, c.y0, c.y1);
  for (const Snapshot& s : res.snapshots)
    write_snapshot_csv((dir / snapshot_filename(s.requested_t)).string(), grid,
                       s);

  double drift = 0;
  for (double m : h.masses) drift = std::max(drift, std::abs(m - h.masses.front()));
  double dt_min = 0, dt_max = 0;
  if (h.dts.size() > 1) {
    const auto [lo, hi] = std::minmax_element(h.dts.begin() + 1, h.dts.end());
    dt_min = *lo;
    dt_max = *hi;
  }
  return {
      {"final_time", h.times.back()},
      {"final_energy", h.energies.back()},
      {"initial_energy", h.energies.front()},
      {"final_roughness", h.roughness.back()},
      {"mass_drift", drift},
      {"min_dt", dt_min},
      {"max_dt", dt_max},
      {"total_steps", res.steps},
      {"rejected_steps", res.retries},
      {"forced_acceptances", res.forced},
      {"e1_clamped_steps", res.e1_clamped},
      {"max_residual_ratio", res.max_residual_ratio},
  };
}

nlohmann::json converge(const RunConfig& c, const fs::path& dir) {
  ConvergenceSetup s;
  s.flow = c.flow;
  s.cells = c.grids;
  s.x0 = c.x0;
  s.x1 = c.x1;
  s.y0 = c.y0;
  s.y1 = c.y1;
  s.T = c.T;
  s.dt = c.dt;
  s.epsilon = c.epsilon;
  s.beta = c.beta;
  s.mobility = c.mobility;
  s.c0 = c.c0;
  s.solver = c.solver;
  const auto rows = run_convergence(s);
  write_convergence_csv((dir / "convergence.csv").string(), rows);
  nlohmann::json finest = nlohmann::json::object();
  for (const auto& [q, r] : rows.back().rates) finest[q] = r;
  return {{"rows", rows.size()},
          {"finest_h", rows.back().h},
          {"finest_rates", finest},
          {"total_steps", std::lround(c.T / c.dt)}};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const HelpRequested& h) {
    out << h.what();
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }

  const fs::path dir(cfg.out_dir);
  try {
    fs::create_directories(dir);
    write_text(dir / "config.ini", echo_config(cfg));
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return 1;
  }

  const auto start = std::chrono::steady_clock::now();
  nlohmann::json summary;
  try {
    summary = cfg.command == Command::Converge ? converge(cfg, dir)
                                               : simulate(cfg, dir);
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  summary["command"] = to_string(cfg.command);
  summary["flow"] = to_string(cfg.flow);
  summary["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  try {
    write_text(dir / "summary.json", summary.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return 2;
  }
  out << summary.dump(2) << '\n';
  return 0;
}

}  // namespace savbcfd
