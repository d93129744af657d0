#pragma once

#include "savbcfd/grid.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace savbcfd {

enum class Flow { L2, Hm1 };

inline const char* to_string(Flow f) { return f == Flow::L2 ? "ac" : "ch"; }

/// Nonlinear bulk density F and its derivative F'.
template <typename Scalar>
struct Potential {
  std::function<Scalar(Scalar)> density;
  std::function<Scalar(Scalar)> derivative;
};

/// (phi^2 - 1 - beta)^2 / (4 eps^2), the stabilized double well with its
/// additive constant removed. The quadratic part beta/eps^2 phi^2/2 that the
/// shift generates is carried by the linear operator through lambda.
template <typename Scalar>
Potential<Scalar> shifted_double_well(Scalar epsilon, Scalar beta) {
  const Scalar shift = Scalar(1) + beta;
  const Scalar eps2 = epsilon * epsilon;
  return {
      [=](Scalar phi) {
        const Scalar s = phi * phi - shift;
        return s * s / (Scalar(4) * eps2);
      },
      [=](Scalar phi) { return phi * (phi * phi - shift) / eps2; },
  };
}

template <typename Scalar>
class EnergyModel {
 public:
  static constexpr double kDefaultE1Floor = 1e-12;

  EnergyModel(Scalar epsilon, Scalar beta, Scalar mobility, Flow flow,
              Scalar c0 = 0, Scalar e1_floor = Scalar(kDefaultE1Floor))
      : EnergyModel(epsilon, beta, mobility, flow, c0, e1_floor,
                    shifted_double_well(epsilon, beta)) {}

  EnergyModel(Scalar epsilon, Scalar beta, Scalar mobility, Flow flow,
              Scalar c0, Scalar e1_floor, Potential<Scalar> potential)
      : epsilon_(epsilon),
        beta_(beta),
        c0_(c0),
        mobility_(mobility),
        flow_(flow),
        e1_floor_(e1_floor),
        potential_(std::move(potential)) {
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(beta >= 0)) throw std::invalid_argument("beta must be >= 0");
    if (!(mobility > 0)) throw std::invalid_argument("mobility must be > 0");
    if (!(e1_floor > 0)) throw std::invalid_argument("e1_floor must be > 0");
    if (!std::isfinite(c0)) throw std::invalid_argument("C0 must be finite");
    lambda_ = beta / (epsilon * epsilon);
  }

  Scalar epsilon() const { return epsilon_; }
  Scalar beta() const { return beta_; }
  Scalar c0() const { return c0_; }
  Scalar lambda() const { return lambda_; }
  Scalar mobility() const { return mobility_; }
  Flow flow() const { return flow_; }
  Scalar e1_floor() const { return e1_floor_; }
  const Potential<Scalar>& potential() const { return potential_; }

  /// The constant (beta^2 + 2 beta)/(4 eps^2) per unit area that separates the
  /// shifted energy from the physical Ginzburg-Landau energy.
  Scalar dropped_constant_density() const {
    return (beta_ * beta_ + Scalar(2) * beta_) /
           (Scalar(4) * epsilon_ * epsilon_);
  }

 private:
  Scalar epsilon_, beta_, c0_, lambda_{}, mobility_;
  Flow flow_;
  Scalar e1_floor_;
  Potential<Scalar> potential_;
};

template <typename Scalar>
Scalar F_density(Scalar phi, const EnergyModel<Scalar>& model) {
  return model.potential().density(phi);
}

template <typename Scalar>
Scalar F_prime(Scalar phi, const EnergyModel<Scalar>& model) {
  return model.potential().derivative(phi);
}

template <typename Scalar>
CellField<Scalar> F_prime(FieldIn<Scalar> z,
                          const EnergyModel<Scalar>& model) {
  return z.unaryExpr(model.potential().derivative);
}

template <typename Scalar>
struct NonlinearEnergy {
  Scalar value;
  bool clamped;
};

/// E1_h(Z) = sum h_x h_y F(Z_ij) + C0, floored at model.e1_floor().
template <typename Scalar>
NonlinearEnergy<Scalar> E1_h(FieldIn<Scalar> z,
                             const EnergyModel<Scalar>& model,
                             const Grid<Scalar>& grid) {
  detail::require_size(z.size(), grid.cells(), "E1_h");
  const Scalar raw =
      grid.cell_area() * z.unaryExpr(model.potential().density).sum() +
      model.c0();
  if (!(raw >= model.e1_floor())) return {model.e1_floor(), true};
  return {raw, false};
}

/// Phase field plus scalar auxiliary variable at one time level, with the
/// previous level kept for extrapolation.
template <typename Scalar>
struct SavState {
  CellField<Scalar> Z;
  Scalar R{};
  CellField<Scalar> Z_prev;
  Scalar t{};
  Scalar dt_prev{};
};

/// Initial state: Z_prev = Z0 and R = sqrt(E1_h(Z0)).
template <typename Scalar>
SavState<Scalar> initial_state(CellField<Scalar> z0,
                               const EnergyModel<Scalar>& model,
                               const Grid<Scalar>& grid, Scalar t0 = 0) {
  detail::require_size(z0.size(), grid.cells(), "initial_state");
  const Scalar r0 = std::sqrt(E1_h(z0, model, grid).value);
  SavState<Scalar> s;
  s.Z_prev = z0;
  s.Z = std::move(z0);
  s.R = r0;
  s.t = t0;
  return s;
}

/// E_d = lambda/2 ||Z||_m^2 + 1/2 ||dZ||_TM^2 + R^2.
template <typename Scalar>
Scalar discrete_energy(FieldIn<Scalar> z, Scalar r,
                       const EnergyModel<Scalar>& model,
                       const Grid<Scalar>& grid) {
  const Scalar g = grad_norm(z, grid);
  return model.lambda() / 2 * inner_m(z, z, grid) + g * g / 2 + r * r;
}

template <typename Scalar>
Scalar discrete_energy(const SavState<Scalar>& state,
                       const EnergyModel<Scalar>& model,
                       const Grid<Scalar>& grid) {
  return discrete_energy(state.Z, state.R, model, grid);
}

/// E_d with the constant dropped from the shifted double well restored, i.e.
/// the discrete counterpart of the unshifted Ginzburg-Landau energy.
template <typename Scalar>
Scalar physical_energy(const SavState<Scalar>& state,
                       const EnergyModel<Scalar>& model,
                       const Grid<Scalar>& grid) {
  return discrete_energy(state, model, grid) -
         model.dropped_constant_density() * grid.area();
}

/// Root-mean-square deviation of Z from its mean.
template <typename Scalar>
Scalar roughness(FieldIn<Scalar> z, const Grid<Scalar>& grid) {
  const Scalar mean = mass(z, grid) / grid.area();
  const CellField<Scalar> d = z.array() - mean;
  return std::sqrt(inner_m(d, d, grid) / grid.area());
}

}  // namespace savbcfd
