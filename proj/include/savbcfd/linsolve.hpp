#pragma once

// SPD solvers for the constant-coefficient operators that appear in a SAV
// step. Three backends share one contract:
//   CG        matrix-free conjugate gradient in the (., .)_m inner product
//   Dense     assembled matrix + Cholesky, for small grids and oracles
//   Spectral  fast diagonalization in the even-reflection cosine basis,
//             exact for any polynomial in the Neumann Laplacian

#include "savbcfd/grid.hpp"

#include <cmath>
#include <concepts>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace savbcfd {

enum class SolverMethod { CG, Dense, Spectral };

inline const char* to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::CG: return "cg";
    case SolverMethod::Dense: return "dense";
    case SolverMethod::Spectral: return "spectral";
  }
  return "?";
}

struct LinearSolverConfig {
  SolverMethod method = SolverMethod::CG;
  double rel_tol = 1e-11;
  /// 0 selects the default 10 * Nx * Ny.
  long max_iters = 0;
  /// Record per-iteration diagnostics (CG only).
  bool record_history = false;

  long iteration_cap(Eigen::Index cells) const {
    return max_iters > 0 ? max_iters : 10 * long(cells);
  }
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, long iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  long iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  long iterations_;
  double residual_;
};

template <typename Scalar>
struct SolveResult {
  CellField<Scalar> x;
  long iterations = 0;
  /// ||A x - rhs||_m / ||rhs||_m at exit.
  Scalar relative_residual = 0;
  /// CG only, filled when record_history is set: relative residual and the
  /// quadratic functional 1/2 (x, A x)_m - (rhs, x)_m after every iterate.
  std::vector<Scalar> residual_history;
  std::vector<Scalar> functional_history;
};

/// Conjugate gradient in the m-inner product. Since the weight h_x h_y is a
/// constant, this is Euclidean CG up to scaling; the reductions run in index
/// order so results are deterministic.
template <typename Scalar, typename ApplyA>
SolveResult<Scalar> solve_cg(ApplyA&& apply_A, const CellField<Scalar>& rhs,
                             const LinearSolverConfig& cfg,
                             const Grid<Scalar>& grid) {
  detail::require_size(rhs.size(), grid.cells(), "solve_cg");
  if (!(cfg.rel_tol > 0)) throw std::invalid_argument("rel_tol must be > 0");
  SolveResult<Scalar> out;
  out.x = CellField<Scalar>::Zero(rhs.size());
  const Scalar rhs_norm = norm_m(rhs, grid);
  if (rhs_norm == Scalar(0)) return out;

  const long cap = cfg.iteration_cap(grid.cells());
  const Scalar target = Scalar(cfg.rel_tol) * rhs_norm;
  CellField<Scalar> r = rhs;
  CellField<Scalar> p = r;
  Scalar rr = inner_m(r, r, grid);
  auto record = [&] {
    if (!cfg.record_history) return;
    out.residual_history.push_back(std::sqrt(rr) / rhs_norm);
    // A x = rhs - r, so 1/2 (x, A x) - (rhs, x) = -1/2 (x, rhs + r).
    out.functional_history.push_back(-inner_m(out.x, rhs + r, grid) / 2);
  };
  record();
  while (std::sqrt(rr) > target) {
    if (out.iterations >= cap) {
      const double rel = double(std::sqrt(rr) / rhs_norm);
      throw SolverError("CG did not converge in " + std::to_string(cap) +
                            " iterations (relative residual " +
                            std::to_string(rel) + ")",
                        out.iterations, rel);
    }
    const CellField<Scalar> Ap = apply_A(p);
    const Scalar pAp = inner_m(p, Ap, grid);
    if (!(pAp > 0))
      throw SolverError("CG: operator is not positive definite",
                        out.iterations, double(std::sqrt(rr) / rhs_norm));
    const Scalar alpha = rr / pAp;
    out.x.noalias() += alpha * p;
    r.noalias() -= alpha * Ap;
    const Scalar rr_new = inner_m(r, r, grid);
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    ++out.iterations;
    record();
  }
  out.relative_residual = std::sqrt(rr) / rhs_norm;
  return out;
}

/// Columns are apply_A applied to the canonical basis fields.
template <typename Scalar, typename ApplyA>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> assemble_dense(
    ApplyA&& apply_A, const Grid<Scalar>& grid) {
  constexpr Eigen::Index kMaxCells = 4096;
  const Eigen::Index n = grid.cells();
  if (n > kMaxCells)
    throw std::invalid_argument("assemble_dense: grid has " +
                                std::to_string(n) + " cells, limit is " +
                                std::to_string(kMaxCells));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> A(n, n);
  CellField<Scalar> e = CellField<Scalar>::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    e[k] = 1;
    A.col(k) = apply_A(e);
    e[k] = 0;
  }
  return A;
}

/// Orthonormal eigenbasis of the 1D Neumann second difference on n cells:
/// column k is c_k cos(pi k (i + 1/2) / n) with eigenvalue
/// -(4/h^2) sin^2(pi k / (2n)).
template <typename Scalar>
struct CosineBasis {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eigenvalues;

  CosineBasis() = default;
  CosineBasis(int n, Scalar h) : vectors(n, n), eigenvalues(n) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    for (int k = 0; k < n; ++k) {
      const Scalar c = k == 0 ? std::sqrt(Scalar(1) / n)
                              : std::sqrt(Scalar(2) / n);
      for (int i = 0; i < n; ++i)
        vectors(i, k) = c * std::cos(pi * k * (Scalar(i) + Scalar(0.5)) / n);
      const Scalar s = std::sin(pi * k / (Scalar(2) * n));
      eigenvalues[k] = -Scalar(4) * s * s / (h * h);
    }
  }
};

/// Operators that are functions of the Neumann Laplacian expose their symbol
/// so the spectral backend can invert them.
template <typename Op, typename Scalar>
concept LaplacianFunction = requires(const Op& op, Scalar mu) {
  { op.symbol(mu) } -> std::convertible_to<Scalar>;
};

/// Fast diagonalization: X -> Px (Px^T X Py ./ S) Py^T with S the operator's
/// symbol on the tensor eigenvalues.
template <typename Scalar>
class SpectralSolver {
 public:
  SpectralSolver() = default;
  explicit SpectralSolver(const Grid<Scalar>& grid)
      : grid_(grid), bx_(grid.nx(), grid.hx()), by_(grid.ny(), grid.hy()) {}

  bool ready() const { return grid_.has_value(); }

  template <typename Op>
    requires LaplacianFunction<Op, Scalar>
  CellField<Scalar> solve(const Op& op, const CellField<Scalar>& rhs) const {
    const int nx = grid_->nx(), ny = grid_->ny();
    detail::require_size(rhs.size(), grid_->cells(), "SpectralSolver");
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Mat hat = bx_.vectors.transpose() * detail::as_matrix(rhs, nx, ny) *
              by_.vectors;
    for (int l = 0; l < ny; ++l)
      for (int k = 0; k < nx; ++k) {
        const Scalar s = op.symbol(bx_.eigenvalues[k] + by_.eigenvalues[l]);
        if (!(s > 0))
          throw SolverError("spectral solve: operator symbol is not positive",
                            0, 0.0);
        hat(k, l) /= s;
      }
    CellField<Scalar> x(rhs.size());
    detail::as_matrix(x, nx, ny).noalias() =
        bx_.vectors * hat * by_.vectors.transpose();
    return x;
  }

 private:
  std::optional<Grid<Scalar>> grid_;
  CosineBasis<Scalar> bx_, by_;
};

/// Solves A x = rhs for SPD A given as a matrix-free apply. Spectral is not
/// available through this overload since it needs the operator's symbol.
template <typename Scalar, typename ApplyA>
SolveResult<Scalar> solve_spd(ApplyA&& apply_A, const CellField<Scalar>& rhs,
                              const LinearSolverConfig& cfg,
                              const Grid<Scalar>& grid) {
  switch (cfg.method) {
    case SolverMethod::CG:
      return solve_cg(apply_A, rhs, cfg, grid);
    case SolverMethod::Dense: {
      const auto A = assemble_dense(apply_A, grid);
      Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(A);
      if (llt.info() != Eigen::Success)
        throw SolverError("dense Cholesky failed: operator not SPD", 0, 0.0);
      SolveResult<Scalar> out;
      out.x = llt.solve(rhs);
      const Scalar rn = norm_m(rhs, grid);
      out.relative_residual =
          rn > 0 ? norm_m(CellField<Scalar>(A * out.x - rhs), grid) / rn : 0;
      return out;
    }
    case SolverMethod::Spectral:
      throw std::invalid_argument(
          "solve_spd: the spectral backend needs an operator with a symbol");
  }
  throw std::logic_error("solve_spd: unknown method");
}

/// As above, with the spectral backend enabled for Laplacian functions.
template <typename Scalar, typename Op>
  requires LaplacianFunction<Op, Scalar>
SolveResult<Scalar> solve_spd(const Op& op, const CellField<Scalar>& rhs,
                              const LinearSolverConfig& cfg,
                              const Grid<Scalar>& grid,
                              const SpectralSolver<Scalar>* spectral) {
  if (cfg.method != SolverMethod::Spectral)
    return solve_spd([&](const CellField<Scalar>& x) { return op(x); }, rhs,
                     cfg, grid);
  SolveResult<Scalar> out;
  if (spectral != nullptr && spectral->ready()) {
    out.x = spectral->solve(op, rhs);
  } else {
    out.x = SpectralSolver<Scalar>(grid).solve(op, rhs);
  }
  const Scalar rn = norm_m(rhs, grid);
  out.relative_residual =
      rn > 0 ? norm_m(CellField<Scalar>(op(out.x) - rhs), grid) / rn : 0;
  return out;
}

}  // namespace savbcfd
