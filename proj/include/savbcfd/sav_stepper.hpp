#pragma once

// One step of the SAV block-centered scheme for the L2 (Allen-Cahn) and
// H^-1 (Cahn-Hilliard) gradient flows:
//
//   (Z1 - Z0)/dt = M G W
//   W            = L Z_th + R_th b,         L = -Lap_h + lambda
//   (R1 - R0)/dt = 1/2 (b, (Z1 - Z0)/dt)_m, b = F'(Zt) / sqrt(E1_h(Zt))
//
// with G = -I (L2) or Lap_h (H^-1). Crank-Nicolson takes th = 1/2 and the
// extrapolated predictor Zt = (3 Z0 - Z_prev)/2; the first-order variant
// takes th = 1 and Zt = Z0. Eliminating R turns the system into
//
//   A Z1 = c + kappa (b, Z1)_m G b,   A = I - th dt M G L,  kappa = th dt M / 2
//
// which is solved with two SPD solves sharing A and a scalar correction.

#include "savbcfd/grid.hpp"
#include "savbcfd/linsolve.hpp"
#include "savbcfd/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace savbcfd {

enum class Scheme { CrankNicolson, BackwardEuler };

template <typename Scalar>
struct StepReport {
  Scalar energy_before = 0;
  Scalar energy_after = 0;
  /// (E_d(Z1) - E_d(Z0)) / dt
  Scalar dissipation_lhs = 0;
  /// -M ||d W||_TM^2 (H^-1) or -M ||W||_m^2 (L2)
  Scalar dissipation_rhs = 0;
  Scalar mass = 0;
  long solver_iters_1 = 0;
  long solver_iters_2 = 0;
  /// Normalized max residual of the three discrete equations.
  Scalar residual_scheme = 0;
  /// Conditioning factor for residual_scheme: the largest term entering the
  /// residuals (same normalization) times sqrt(Nx Ny), the max-norm to
  /// m-norm equivalence constant for cell fields. A solve to relative
  /// tolerance tol leaves residual_scheme of order tol * residual_scale.
  Scalar residual_scale = 0;
  /// 1 - kappa (b, v)_m from the scalar correction.
  Scalar denominator = 1;
  bool e1_clamped = false;
};

template <typename Scalar>
struct StepResult {
  SavState<Scalar> state;
  /// Chemical potential at the scheme's natural level (half step for CN).
  CellField<Scalar> W;
  StepReport<Scalar> report;
};

class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (3 Z - Z_prev) / 2
template <typename Scalar>
CellField<Scalar> extrapolate_half(const SavState<Scalar>& state) {
  return (Scalar(3) * state.Z - state.Z_prev) / Scalar(2);
}

/// L = -Lap_h + lambda I
template <typename Scalar>
CellField<Scalar> apply_L(const CellField<Scalar>& z,
                          const EnergyModel<Scalar>& model,
                          const Grid<Scalar>& grid) {
  return model.lambda() * z - laplacian_bcfd(z, grid);
}

/// G = -I (L2) or Lap_h (H^-1)
template <typename Scalar>
CellField<Scalar> apply_G(const CellField<Scalar>& z,
                          const EnergyModel<Scalar>& model,
                          const Grid<Scalar>& grid) {
  if (model.flow() == Flow::L2) return -z;
  return laplacian_bcfd(z, grid);
}

/// x - coeff G L x; SPD under homogeneous Neumann conditions for coeff >= 0.
template <typename Scalar>
struct HalfStepOperator {
  const Grid<Scalar>* grid;
  const EnergyModel<Scalar>* model;
  Scalar coeff;

  CellField<Scalar> operator()(const CellField<Scalar>& x) const {
    return x - coeff * apply_G(apply_L(x, *model, *grid), *model, *grid);
  }

  /// Eigenvalue on a Laplacian eigenvector with eigenvalue mu <= 0.
  Scalar symbol(Scalar mu) const {
    const Scalar l = model->lambda() - mu;
    const Scalar g = model->flow() == Flow::L2 ? Scalar(-1) : mu;
    return Scalar(1) - coeff * g * l;
  }
};

template <typename Scalar>
Scalar max_abs(const CellField<Scalar>& f) {
  return f.size() == 0 ? Scalar(0) : f.cwiseAbs().maxCoeff();
}

namespace detail {

template <typename Scalar>
Scalar implicitness(Scheme scheme) {
  return scheme == Scheme::CrankNicolson ? Scalar(0.5) : Scalar(1);
}

template <typename Scalar>
CellField<Scalar> predictor(const SavState<Scalar>& state, Scheme scheme) {
  return scheme == Scheme::CrankNicolson ? extrapolate_half(state) : state.Z;
}

}  // namespace detail

struct ResidualParts {
  double value;  // normalized max residual
  double scale;  // normalized largest term times sqrt(cells)
};

/// Evaluates the residuals of the three discrete equations for a candidate
/// (Z_new, R_new, W) and returns max-norm residual / max(1, ||Z_new||_inf).
template <typename Scalar>
ResidualParts residual_parts(const CellField<Scalar>& z_new, Scalar r_new,
                             const CellField<Scalar>& w,
                             const SavState<Scalar>& state, Scalar dt,
                             const EnergyModel<Scalar>& model,
                             const Grid<Scalar>& grid,
                             Scheme scheme = Scheme::CrankNicolson) {
  const Scalar th = detail::implicitness<Scalar>(scheme);
  const CellField<Scalar> zt = detail::predictor(state, scheme);
  const Scalar sqrt_e1 = std::sqrt(E1_h(zt, model, grid).value);
  const CellField<Scalar> fp = F_prime(zt, model);
  const CellField<Scalar> b = fp / sqrt_e1;
  const CellField<Scalar> z_th = th * z_new + (1 - th) * state.Z;
  const Scalar r_th = th * r_new + (1 - th) * state.R;
  const CellField<Scalar> dz = (z_new - state.Z) / dt;

  const CellField<Scalar> mgw = model.mobility() * apply_G(w, model, grid);
  const CellField<Scalar> lz = apply_L(z_th, model, grid);
  const Scalar res1 = max_abs(CellField<Scalar>(dz - mgw));
  const Scalar res2 = max_abs(CellField<Scalar>(w - lz - r_th * b));
  const Scalar res3 =
      std::abs((r_new - state.R) / dt - inner_m(fp, dz, grid) / (2 * sqrt_e1));

  const Scalar norm = std::max(Scalar(1), max_abs(z_new));
  const Scalar scale = std::max(
      {max_abs(z_new) / dt, max_abs(state.Z) / dt, max_abs(mgw), max_abs(w),
       max_abs(lz), std::abs(r_th) * max_abs(b),
       std::abs(r_new - state.R) / dt});
  const Scalar equiv = std::sqrt(Scalar(grid.cells()));
  return {double(std::max({res1, res2, res3}) / norm),
          double(equiv * scale / norm)};
}

template <typename Scalar>
Scalar residual_check(const CellField<Scalar>& z_new, Scalar r_new,
                      const CellField<Scalar>& w,
                      const SavState<Scalar>& state, Scalar dt,
                      const EnergyModel<Scalar>& model,
                      const Grid<Scalar>& grid,
                      Scheme scheme = Scheme::CrankNicolson) {
  return Scalar(
      residual_parts(z_new, r_new, w, state, dt, model, grid, scheme).value);
}

/// Steps a fixed (grid, model, solver) triple. Holds the spectral basis when
/// that backend is selected, so repeated steps do not rebuild it.
template <typename Scalar>
class SavStepper {
 public:
  SavStepper(Grid<Scalar> grid, EnergyModel<Scalar> model,
             LinearSolverConfig solver = {})
      : grid_(std::move(grid)), model_(std::move(model)), solver_(solver) {
    if (solver_.method == SolverMethod::Spectral)
      spectral_ = SpectralSolver<Scalar>(grid_);
  }

  const Grid<Scalar>& grid() const { return grid_; }
  const EnergyModel<Scalar>& model() const { return model_; }
  const LinearSolverConfig& solver() const { return solver_; }

  SavState<Scalar> initial_state(CellField<Scalar> z0, Scalar t0 = 0) const {
    return savbcfd::initial_state(std::move(z0), model_, grid_, t0);
  }

  StepResult<Scalar> step_cn(const SavState<Scalar>& state, Scalar dt) const {
    return step(state, dt, Scheme::CrankNicolson);
  }

  StepResult<Scalar> step_be(const SavState<Scalar>& state, Scalar dt) const {
    return step(state, dt, Scheme::BackwardEuler);
  }

  StepResult<Scalar> step(const SavState<Scalar>& state, Scalar dt,
                          Scheme scheme) const {
    if (!(dt > 0) || !std::isfinite(dt))
      throw StepFailure("time step must be positive and finite, got " +
                        std::to_string(double(dt)));
    detail::require_size(state.Z.size(), grid_.cells(), "step: Z");
    detail::require_size(state.Z_prev.size(), grid_.cells(), "step: Z_prev");

    const Scalar th = detail::implicitness<Scalar>(scheme);
    const Scalar m = model_.mobility();
    const CellField<Scalar> zt = detail::predictor(state, scheme);
    const auto e1 = E1_h(zt, model_, grid_);
    const CellField<Scalar> b = F_prime(zt, model_) / std::sqrt(e1.value);
    const CellField<Scalar> gb = apply_G(b, model_, grid_);
    const Scalar b_z0 = inner_m(b, state.Z, grid_);

    CellField<Scalar> c = state.Z + dt * m * (state.R - th / 2 * b_z0) * gb;
    if (th < 1)
      c += (1 - th) * dt * m *
           apply_G(apply_L(state.Z, model_, grid_), model_, grid_);

    const HalfStepOperator<Scalar> A{&grid_, &model_, th * dt * m};
    const Scalar kappa = th * dt * m / 2;

    SolveResult<Scalar> u, v;
    try {
      u = solve_spd(A, c, solver_, grid_, &spectral_);
      v = solve_spd(A, gb, solver_, grid_, &spectral_);
    } catch (const SolverError& err) {
      throw StepFailure(std::string("linear solve failed at t = ") +
                        std::to_string(double(state.t)) + ", dt = " +
                        std::to_string(double(dt)) + ": " + err.what() +
                        " (iterations " + std::to_string(err.iterations()) +
                        ")");
    }

    const Scalar denom = 1 - kappa * inner_m(b, v.x, grid_);
    if (!(std::abs(denom) >= Scalar(1e-12)))
      throw StepFailure("scalar correction denominator vanished: " +
                        std::to_string(double(denom)));
    const Scalar b_z1 = inner_m(b, u.x, grid_) / denom;

    StepResult<Scalar> out;
    SavState<Scalar>& next = out.state;
    next.Z = u.x + (kappa * b_z1) * v.x;
    next.R = state.R + (b_z1 - b_z0) / 2;
    next.Z_prev = state.Z;
    next.t = state.t + dt;
    next.dt_prev = dt;

    const CellField<Scalar> z_th = th * next.Z + (1 - th) * state.Z;
    const Scalar r_th = th * next.R + (1 - th) * state.R;
    out.W = apply_L(z_th, model_, grid_) + r_th * b;

    if (!next.Z.allFinite() || !std::isfinite(next.R) || !out.W.allFinite())
      throw StepFailure("non-finite values produced at t = " +
                        std::to_string(double(state.t)));

    StepReport<Scalar>& rep = out.report;
    rep.energy_before = discrete_energy(state, model_, grid_);
    rep.energy_after = discrete_energy(next, model_, grid_);
    rep.dissipation_lhs = (rep.energy_after - rep.energy_before) / dt;
    if (model_.flow() == Flow::Hm1) {
      const Scalar g = grad_norm(out.W, grid_);
      rep.dissipation_rhs = -m * g * g;
    } else {
      rep.dissipation_rhs = -m * inner_m(out.W, out.W, grid_);
    }
    rep.mass = mass(next.Z, grid_);
    rep.solver_iters_1 = u.iterations;
    rep.solver_iters_2 = v.iterations;
    const ResidualParts res = residual_parts(next.Z, next.R, out.W, state, dt,
                                             model_, grid_, scheme);
    rep.residual_scheme = Scalar(res.value);
    rep.residual_scale = Scalar(res.scale);
    rep.denominator = denom;
    rep.e1_clamped = e1.clamped;
    return out;
  }

 private:
  Grid<Scalar> grid_;
  EnergyModel<Scalar> model_;
  LinearSolverConfig solver_;
  SpectralSolver<Scalar> spectral_;
};

template <typename Scalar>
StepResult<Scalar> step_cn(const SavState<Scalar>& state, Scalar dt,
                           const EnergyModel<Scalar>& model,
                           const Grid<Scalar>& grid,
                           const LinearSolverConfig& solver = {}) {
  return SavStepper<Scalar>(grid, model, solver).step_cn(state, dt);
}

template <typename Scalar>
StepResult<Scalar> step_be(const SavState<Scalar>& state, Scalar dt,
                           const EnergyModel<Scalar>& model,
                           const Grid<Scalar>& grid,
                           const LinearSolverConfig& solver = {}) {
  return SavStepper<Scalar>(grid, model, solver).step_be(state, dt);
}

}  // namespace savbcfd
