#pragma once

// Accuracy-driven step size control: each step is taken with both the
// first-order SAV scheme and the Crank-Nicolson scheme, their relative
// m-norm difference e decides acceptance, and the next size is
//
//   dt <- max(dt_min, min(rho sqrt(tol / e) dt, dt_max)).

#include "savbcfd/sav_stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace savbcfd {

struct AdaptiveConfig {
  double dt_min = 1e-5;
  double dt_max = 1e-2;
  double tol = 1e-3;
  double rho = 0.9;
  int max_retries = 50;

  void validate() const {
    if (!(dt_min > 0)) throw std::invalid_argument("dt_min must be > 0");
    if (!(dt_max >= dt_min))
      throw std::invalid_argument("dt_min must not exceed dt_max");
    if (!(rho > 0 && rho <= 1))
      throw std::invalid_argument("rho must lie in (0, 1]");
    if (!(tol > 0)) throw std::invalid_argument("tol must be > 0");
    if (max_retries < 1) throw std::invalid_argument("max_retries must be >= 1");
  }

  double clamp(double dt) const { return std::max(dt_min, std::min(dt, dt_max)); }
};

class ControllerFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// rho sqrt(tol / e) dt, unclamped. An error below 1e-14 tol counts as zero
/// and yields +inf, which the caller's clamp turns into dt_max.
inline double a_dp(double e, double dt, const AdaptiveConfig& cfg) {
  if (!(e >= 0) || !(dt > 0))
    throw std::invalid_argument("a_dp: need e >= 0 and dt > 0");
  if (e < 1e-14 * cfg.tol) return std::numeric_limits<double>::infinity();
  return cfg.rho * std::sqrt(cfg.tol / e) * dt;
}

template <typename Scalar>
struct AdaptiveStepResult {
  StepResult<Scalar> step;  // the accepted Crank-Nicolson step
  double accepted_dt = 0;
  double next_dt = 0;
  int retries = 0;
  double error = 0;
  /// Accepted at dt_min with error above tol.
  bool forced = false;
};

/// Relative m-norm distance ||reference - z||_m / ||z||_m.
template <typename Scalar>
double relative_difference(const CellField<Scalar>& reference,
                           const CellField<Scalar>& z,
                           const Grid<Scalar>& grid) {
  const double diff = double(norm_m(CellField<Scalar>(reference - z), grid));
  const double base = double(norm_m(z, grid));
  return base > 0 ? diff / base : diff;
}

template <typename Scalar>
AdaptiveStepResult<Scalar> adaptive_step(const SavStepper<Scalar>& stepper,
                                         const SavState<Scalar>& state,
                                         double dt,
                                         const AdaptiveConfig& cfg) {
  cfg.validate();
  // dt_min is attained by clamping, so compare with a little slack.
  const double slack = 1e-12 * cfg.dt_max;
  if (!(dt >= cfg.dt_min - slack && dt <= cfg.dt_max + slack))
    throw std::invalid_argument("adaptive_step: dt = " + std::to_string(dt) +
                                " outside [dt_min, dt_max]");
  AdaptiveStepResult<Scalar> out;
  for (;;) {
    const auto reference = stepper.step_be(state, Scalar(dt));
    auto candidate = stepper.step_cn(state, Scalar(dt));
    const double e =
        relative_difference(reference.state.Z, candidate.state.Z, stepper.grid());
    const bool at_floor = dt <= cfg.dt_min + slack;
    if (e > cfg.tol && !at_floor) {
      if (++out.retries > cfg.max_retries)
        throw ControllerFailure(
            "adaptive controller: " + std::to_string(out.retries - 1) +
            " retries at t = " + std::to_string(double(state.t)) +
            " without meeting tol (last dt = " + std::to_string(dt) +
            ", e = " + std::to_string(e) + ")");
      dt = cfg.clamp(a_dp(e, dt, cfg));
      continue;
    }
    out.step = std::move(candidate);
    out.accepted_dt = dt;
    out.error = e;
    out.forced = e > cfg.tol;
    out.next_dt = cfg.clamp(a_dp(e, dt, cfg));
    return out;
  }
}

}  // namespace savbcfd
