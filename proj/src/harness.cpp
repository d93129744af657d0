#include "savbcfd/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace savbcfd {

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double CounterRng::uniform(std::uint64_t counter) const {
  return double(bits(counter) >> 11) * 0x1.0p-53;
}

Field2 random_field(const Grid2& grid, std::uint64_t seed, double lo,
                    double hi) {
  const CounterRng rng(seed);
  Field2 z(grid.cells());
  for (Eigen::Index k = 0; k < z.size(); ++k)
    z[k] = lo + (hi - lo) * rng.uniform(std::uint64_t(k));
  return z;
}

Field2 restrict_to_coarse(const Field2& fine, const Grid2& fine_grid) {
  if (fine_grid.nx() % 2 != 0 || fine_grid.ny() % 2 != 0)
    throw std::invalid_argument("restrict_to_coarse: fine grid must be even");
  detail::require_size(fine.size(), fine_grid.cells(), "restrict_to_coarse");
  const int nx = fine_grid.nx() / 2, ny = fine_grid.ny() / 2;
  const auto F = detail::as_matrix(fine, fine_grid.nx(), fine_grid.ny());
  Field2 coarse(Eigen::Index(nx) * ny);
  auto C = detail::as_matrix(coarse, nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      C(i, j) = 0.25 * (F(2 * i, 2 * j) + F(2 * i + 1, 2 * j) +
                        F(2 * i, 2 * j + 1) + F(2 * i + 1, 2 * j + 1));
  return coarse;
}

namespace {

void require_refinement(const Grid2& coarse, const Grid2& fine) {
  if (!(coarse.refined() == fine))
    throw std::invalid_argument(
        "cauchy_error: fine grid must have exactly twice the cells per axis "
        "on the same domain");
}

}  // namespace

double cauchy_error(const Field2& coarse, const Grid2& coarse_grid,
                    const Field2& fine, const Grid2& fine_grid,
                    Quantity quantity) {
  if (quantity == Quantity::R) {
    if (coarse.size() != 1 || fine.size() != 1)
      throw std::invalid_argument("cauchy_error: R expects 1-vectors");
    return cauchy_error_scalar(coarse[0], fine[0]);
  }
  require_refinement(coarse_grid, fine_grid);
  const Field2 diff = coarse - restrict_to_coarse(fine, fine_grid);
  switch (quantity) {
    case Quantity::Field:
    case Quantity::W:
      return norm_m(diff, coarse_grid);
    case Quantity::Gradient:
    case Quantity::dW:
      return grad_norm(diff, coarse_grid);
    case Quantity::R:
      break;
  }
  throw std::logic_error("cauchy_error: unknown quantity");
}

double cauchy_error_scalar(double coarse, double fine) {
  return std::abs(coarse - fine);
}

std::optional<double> compute_rate(double e_coarse, double e_fine) {
  if (!(e_coarse > 0) || !(e_fine > 0)) return std::nullopt;
  return std::log2(e_coarse / e_fine);
}

Field2 cosine_field(const Grid2& grid) {
  return sample(grid, [](double x, double y) {
    return std::cos(std::numbers::pi * x) * std::cos(std::numbers::pi * y);
  });
}

ConvergenceSetup ConvergenceSetup::example(Example ex) {
  ConvergenceSetup s;
  if (ex == Example::AC) {
    s.flow = Flow::L2;
    s.epsilon = 0.08;
  } else {
    s.flow = Flow::Hm1;
    s.epsilon = 0.2;
  }
  return s;
}

const std::vector<std::string>& convergence_quantities() {
  static const std::vector<std::string> names = {
      "Z_inf2", "dZ_inf2", "R_inf", "W_inf2", "W_22", "dW_inf2", "dW_22"};
  return names;
}

std::vector<ConvergenceRow> run_convergence(const ConvergenceSetup& setup) {
  const auto& cells = setup.cells;
  if (cells.size() < 2)
    throw std::invalid_argument("run_convergence: need at least two grids");
  for (std::size_t k = 0; k + 1 < cells.size(); ++k)
    if (cells[k + 1] != 2 * cells[k])
      throw std::invalid_argument(
          "run_convergence: grids must be consecutive halvings of h");
  if (!(setup.dt > 0) || !(setup.T > 0))
    throw std::invalid_argument("run_convergence: T and dt must be positive");

  const EnergyModel<double> model(setup.epsilon, setup.beta, setup.mobility,
                                  setup.flow, setup.c0);
  std::vector<SavStepper<double>> steppers;
  std::vector<SavState<double>> states;
  for (int n : cells) {
    steppers.emplace_back(Grid2(n, n, setup.x0, setup.x1, setup.y0, setup.y1),
                          model, setup.solver);
    states.push_back(
        steppers.back().initial_state(cosine_field(steppers.back().grid())));
  }

  const std::size_t pairs = cells.size() - 1;
  const auto& names = convergence_quantities();
  std::vector<std::map<std::string, double>> acc(pairs);
  for (auto& a : acc)
    for (const auto& q : names) a[q] = 0;

  const long steps = std::lround(setup.T / setup.dt);
  std::vector<Field2> W(cells.size());
  for (long n = 0; n < steps; ++n) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      auto res = steppers[k].step_cn(states[k], setup.dt);
      res.state.t = double(n + 1) * setup.dt;
      states[k] = std::move(res.state);
      W[k] = std::move(res.W);
    }
    for (std::size_t k = 0; k < pairs; ++k) {
      const Grid2& gc = steppers[k].grid();
      const Grid2& gf = steppers[k + 1].grid();
      const Field2 dz = states[k].Z - restrict_to_coarse(states[k + 1].Z, gf);
      const Field2 dw = W[k] - restrict_to_coarse(W[k + 1], gf);
      const double ez = norm_m(dz, gc);
      const double edz = grad_norm(dz, gc);
      const double er = cauchy_error_scalar(states[k].R, states[k + 1].R);
      const double ew = norm_m(dw, gc);
      const double edw = grad_norm(dw, gc);
      auto& a = acc[k];
      a["Z_inf2"] = std::max(a["Z_inf2"], ez);
      a["dZ_inf2"] = std::max(a["dZ_inf2"], edz);
      a["R_inf"] = std::max(a["R_inf"], er);
      a["W_inf2"] = std::max(a["W_inf2"], ew);
      a["dW_inf2"] = std::max(a["dW_inf2"], edw);
      a["W_22"] += setup.dt * ew * ew;
      a["dW_22"] += setup.dt * edw * edw;
    }
  }

  std::vector<ConvergenceRow> rows(pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    rows[k].h = steppers[k].grid().hx();
    rows[k].errors = acc[k];
    rows[k].errors["W_22"] = std::sqrt(acc[k]["W_22"]);
    rows[k].errors["dW_22"] = std::sqrt(acc[k]["dW_22"]);
    if (k > 0)
      for (const auto& q : names)
        if (auto r = compute_rate(rows[k - 1].errors[q], rows[k].errors[q]))
          rows[k].rates[q] = *r;
  }
  return rows;
}

namespace {

void record(RunHistory& h, const SavState<double>& s, double dt,
            const EnergyModel<double>& model, const Grid2& grid) {
  h.times.push_back(s.t);
  h.dts.push_back(dt);
  h.energies.push_back(discrete_energy(s, model, grid));
  h.physical_energies.push_back(physical_energy(s, model, grid));
  h.roughness.push_back(roughness(s.Z, grid));
  h.masses.push_back(mass(s.Z, grid));
}

void note_report(CoarseningResult& out, const StepReport<double>& rep) {
  if (rep.e1_clamped) ++out.e1_clamped;
  if (rep.residual_scale > 0)
    out.max_residual_ratio = std::max(
        out.max_residual_ratio, rep.residual_scheme / rep.residual_scale);
}

}  // namespace

CoarseningResult run_coarsening(const CoarseningSetup& setup) {
  if (!(setup.T > 0)) throw std::invalid_argument("run_coarsening: T <= 0");
  const Grid2 grid(setup.nx, setup.ny, setup.x0, setup.x1, setup.y0, setup.y1);
  const EnergyModel<double> model(setup.epsilon, setup.beta, setup.mobility,
                                  setup.flow, setup.c0);
  const SavStepper<double> stepper(grid, model, setup.solver);

  std::vector<double> snaps = setup.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::remove_if(snaps.begin(), snaps.end(),
                             [&](double t) { return t < 0 || t > setup.T; }),
              snaps.end());

  CoarseningResult out;
  SavState<double> state = stepper.initial_state(
      setup.initial == InitialData::Cosine
          ? cosine_field(grid)
          : random_field(grid, setup.seed, -setup.amplitude, setup.amplitude));
  record(out.history, state, 0.0, model, grid);

  std::size_t next_snap = 0;
  auto take_snapshots = [&](double tol) {
    while (next_snap < snaps.size() && state.t >= snaps[next_snap] - tol) {
      out.snapshots.push_back({snaps[next_snap], state.t, state.Z});
      ++next_snap;
    }
  };

  if (!setup.adaptive) {
    if (!(setup.dt > 0))
      throw std::invalid_argument("run_coarsening: dt must be positive");
    const long steps = std::lround(setup.T / setup.dt);
    take_snapshots(setup.dt / 2);
    for (long n = 0; n < steps; ++n) {
      auto res = stepper.step_cn(state, setup.dt);
      note_report(out, res.report);
      state = std::move(res.state);
      state.t = double(n + 1) * setup.dt;
      record(out.history, state, setup.dt, model, grid);
      ++out.steps;
      take_snapshots(setup.dt / 2);
    }
  } else {
    const AdaptiveConfig& cfg = setup.adapt;
    cfg.validate();
    const double eps_t = 1e-12 * std::max(1.0, setup.T);
    take_snapshots(eps_t);
    double dt = cfg.dt_min;
    while (setup.T - state.t >= cfg.dt_min - eps_t) {
      // Land exactly on the next output time when that step is admissible.
      double target = setup.T;
      if (next_snap < snaps.size()) target = std::min(target, snaps[next_snap]);
      double trial = dt;
      const double gap = target - state.t;
      if (gap < trial && gap >= cfg.dt_min - eps_t) trial = std::max(gap, cfg.dt_min);
      auto res = adaptive_step(stepper, state, trial, cfg);
      note_report(out, res.step.report);
      out.retries += res.retries;
      if (res.forced) ++out.forced;
      state = std::move(res.step.state);
      if (std::abs(state.t - target) < eps_t) state.t = target;
      record(out.history, state, res.accepted_dt, model, grid);
      ++out.steps;
      take_snapshots(eps_t);
      dt = res.next_dt;
    }
  }
  out.final_state = std::move(state);
  return out;
}

double interpolate(const std::vector<double>& times,
                   const std::vector<double>& values, double t) {
  if (times.empty() || times.size() != values.size())
    throw std::invalid_argument("interpolate: empty or misaligned series");
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = std::size_t(it - times.begin());
  const double t0 = times[k - 1], t1 = times[k];
  const double w = (t - t0) / (t1 - t0);
  return (1 - w) * values[k - 1] + w * values[k];
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  return f;
}

}  // namespace

void write_convergence_csv(const std::string& path,
                           const std::vector<ConvergenceRow>& rows) {
  auto f = open_out(path);
  f << "h,quantity,error,rate\n";
  for (const auto& row : rows)
    for (const auto& q : convergence_quantities()) {
      const auto e = row.errors.find(q);
      if (e == row.errors.end()) continue;
      f << format_double(row.h) << ',' << q << ',' << format_double(e->second)
        << ',';
      if (const auto r = row.rates.find(q); r != row.rates.end())
        f << format_double(r->second);
      f << '\n';
    }
}

void write_history_csv(const std::string& path, const RunHistory& h) {
  auto f = open_out(path);
  f << "t,dt,energy,roughness,mass\n";
  for (std::size_t k = 0; k < h.times.size(); ++k)
    f << format_double(h.times[k]) << ',' << format_double(h.dts[k]) << ','
      << format_double(h.energies[k]) << ',' << format_double(h.roughness[k])
      << ',' << format_double(h.masses[k]) << '\n';
}

void write_snapshot_csv(const std::string& path, const Grid2& grid,
                        const Snapshot& snap) {
  detail::require_size(snap.Z.size(), grid.cells(), "write_snapshot_csv");
  auto f = open_out(path);
  f << grid.nx() << ',' << grid.ny() << ',' << format_double(grid.hx()) << ','
    << format_double(grid.hy()) << ',' << format_double(snap.t) << '\n';
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      if (i > 0) f << ',';
      f << format_double(snap.Z[grid.index(i, j)]);
    }
    f << '\n';
  }
}

std::string snapshot_filename(double t) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, t);
  return "snapshot_t" + std::string(buf, res.ptr) + ".csv";
}

}  // namespace savbcfd
