#pragma once

// Experiment drivers: Cauchy-error convergence studies on successively
// refined grids, and the random-data coarsening run with optional adaptive
// stepping. Everything here works in double precision.

#include "savbcfd/adaptive.hpp"
#include "savbcfd/grid.hpp"
#include "savbcfd/linsolve.hpp"
#include "savbcfd/model.hpp"
#include "savbcfd/sav_stepper.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace savbcfd {

using Grid2 = Grid<double>;
using Field2 = CellField<double>;

/// SplitMix64 evaluated at a counter: value k of stream `seed` is
/// mix(seed + (k + 1) * 0x9E3779B97F4A7C15) with the standard SplitMix64
/// finalizer. Uniform doubles take the top 53 bits.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t bits(std::uint64_t counter) const;
  /// Uniform on [0, 1).
  double uniform(std::uint64_t counter) const;

 private:
  std::uint64_t seed_;
};

/// Cell k (storage order) gets lo + (hi - lo) * uniform(k).
Field2 random_field(const Grid2& grid, std::uint64_t seed, double lo,
                    double hi);

/// Averages each 2x2 block of fine cells onto the coarse grid.
Field2 restrict_to_coarse(const Field2& fine, const Grid2& fine_grid);

enum class Quantity { Field, Gradient, W, dW, R };

/// Cauchy error at one time level between a coarse-grid quantity and the
/// same quantity on the twice-refined grid. Field and W use ||.||_m of the
/// difference after restriction; Gradient and dW use ||d(coarse) -
/// d(restricted fine)||_TM. R is a scalar, pass it as a 1-vector.
double cauchy_error(const Field2& coarse, const Grid2& coarse_grid,
                    const Field2& fine, const Grid2& fine_grid,
                    Quantity quantity);

/// |R_h - R_{h/2}|
double cauchy_error_scalar(double coarse, double fine);

/// log2(e_coarse / e_fine); empty when either error is not positive.
std::optional<double> compute_rate(double e_coarse, double e_fine);

struct ConvergenceRow {
  double h = 0;
  std::map<std::string, double> errors;
  std::map<std::string, double> rates;  // absent in the first row
};

enum class Example { AC, CH };

Field2 cosine_field(const Grid2& grid);

struct ConvergenceSetup {
  Flow flow = Flow::L2;
  std::vector<int> cells = {10, 20, 40, 80, 160};  // per axis, doubling
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double T = 0.5;
  double dt = 5e-4;
  double epsilon = 0.08;
  double beta = 0;
  double mobility = 0.01;
  double c0 = 0;
  LinearSolverConfig solver{SolverMethod::Spectral};

  /// Allen-Cahn (eps = 0.08) or Cahn-Hilliard (eps = 0.2) accuracy test on
  /// the unit square with phi0 = cos(pi x) cos(pi y).
  static ConvergenceSetup example(Example ex);
};

/// Names of the aggregated Cauchy norms, in reporting order:
///   Z_inf2  max_n ||e_Z^n||_m          dZ_inf2  max_n ||e_dZ^n||_TM
///   R_inf   max_n |e_R^n|
///   W_inf2  max_n ||e_W^{n-1/2}||_m    W_22     (sum dt ||e_W||_m^2)^1/2
///   dW_inf2 max_n ||e_dW||_TM          dW_22    (sum dt ||e_dW||_TM^2)^1/2
const std::vector<std::string>& convergence_quantities();

/// Runs every resolution to T in lockstep and returns one row per
/// consecutive (h, h/2) pair, labelled by the coarse h.
std::vector<ConvergenceRow> run_convergence(const ConvergenceSetup& setup);

struct RunHistory {
  std::vector<double> times;
  std::vector<double> dts;        // 0 for the initial record
  std::vector<double> energies;   // E_d
  std::vector<double> physical_energies;  // E_d with the dropped constant
  std::vector<double> roughness;
  std::vector<double> masses;
};

struct Snapshot {
  double requested_t = 0;
  double t = 0;
  Field2 Z;
};

enum class InitialData {
  Random,  // uniform in [-amplitude, amplitude] from CounterRng(seed)
  Cosine,  // cos(pi x) cos(pi y)
};

struct CoarseningSetup {
  int nx = 128, ny = 128;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double T = 1.0;
  double epsilon = 0.01;
  double beta = 6;
  double mobility = 0.002;
  double c0 = 0;
  Flow flow = Flow::Hm1;
  std::uint64_t seed = 1;
  double amplitude = 0.05;
  InitialData initial = InitialData::Random;
  bool adaptive = true;
  double dt = 1e-5;  // fixed-step mode
  AdaptiveConfig adapt;
  LinearSolverConfig solver{SolverMethod::Spectral};
  std::vector<double> snapshot_times;
};

struct CoarseningResult {
  RunHistory history;
  std::vector<Snapshot> snapshots;
  long steps = 0;
  long retries = 0;
  long forced = 0;
  long e1_clamped = 0;
  double max_residual_ratio = 0;  // residual_scheme / residual_scale
  SavState<double> final_state;
};

CoarseningResult run_coarsening(const CoarseningSetup& setup);

/// Linear interpolation of (times, values) at t; clamps outside the range.
double interpolate(const std::vector<double>& times,
                   const std::vector<double>& values, double t);

// CSV output, 17 significant digits throughout.
std::string format_double(double v);
void write_convergence_csv(const std::string& path,
                           const std::vector<ConvergenceRow>& rows);
void write_history_csv(const std::string& path, const RunHistory& history);
void write_snapshot_csv(const std::string& path, const Grid2& grid,
                        const Snapshot& snap);
/// snapshot_t<time>.csv with the shortest round-trip form of the time.
std::string snapshot_filename(double t);

}  // namespace savbcfd
