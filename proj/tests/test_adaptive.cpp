#include "savbcfd/adaptive.hpp"
#include "savbcfd/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace savbcfd;

namespace {

AdaptiveConfig config() {
  AdaptiveConfig c;
  c.dt_min = 1e-5;
  c.dt_max = 1e-2;
  c.tol = 1e-3;
  c.rho = 0.9;
  return c;
}

SavStepper<double> coarsening_stepper(int n) {
  LinearSolverConfig solver;
  solver.method = SolverMethod::Spectral;
  return SavStepper<double>(Grid2(n, n), EnergyModel<double>(0.01, 6.0, 0.002, Flow::Hm1),
                            solver);
}

}  // namespace

TEST(Adaptive, UpdateFormulaExamples) {
  const auto c = config();
  EXPECT_NEAR(a_dp(4 * c.tol, 1e-3, c), 4.5e-4, 1e-18);
  EXPECT_NEAR(a_dp(c.tol / 4, 1e-3, c), 1.8e-3, 1e-18);
  EXPECT_DOUBLE_EQ(a_dp(c.tol, 2e-3, c), 0.9 * 2e-3);
}

TEST(Adaptive, VanishingErrorProposesMaximalStep) {
  const auto c = config();
  EXPECT_EQ(a_dp(0.0, 1e-3, c), std::numeric_limits<double>::infinity());
  EXPECT_EQ(c.clamp(a_dp(0.0, 1e-3, c)), c.dt_max);
  EXPECT_EQ(c.clamp(a_dp(1e-20, 1e-3, c)), c.dt_max);
}

TEST(Adaptive, ClampStaysInRange) {
  const auto c = config();
  for (double e : {1e-12, 1e-6, 1e-3, 1e-1, 10.0, 1e6})
    for (double dt : {1e-5, 3e-4, 1e-2}) {
      const double next = c.clamp(a_dp(e, dt, c));
      EXPECT_GE(next, c.dt_min);
      EXPECT_LE(next, c.dt_max);
    }
}

TEST(Adaptive, UpdateIsMonotoneInError) {
  const auto c = config();
  double prev = std::numeric_limits<double>::infinity();
  for (double e = 1e-8; e < 1; e *= 3) {
    const double next = a_dp(e, 1e-3, c);
    EXPECT_LT(next, prev);
    prev = next;
  }
}

TEST(Adaptive, ConfigValidation) {
  auto c = config();
  c.dt_min = 1e-1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = config();
  c.rho = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = config();
  c.max_retries = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(a_dp(-1.0, 1e-3, config()), std::invalid_argument);
}

TEST(Adaptive, SteadyStateGrowsToMaximalStep) {
  const auto stepper = coarsening_stepper(8);
  const auto s = stepper.initial_state(constant(stepper.grid(), 1.0));
  const auto c = config();
  const auto r = adaptive_step(stepper, s, 1e-3, c);
  EXPECT_EQ(r.retries, 0);
  EXPECT_LE(r.error, 1e-12);
  EXPECT_EQ(r.next_dt, c.dt_max);
  EXPECT_EQ(r.accepted_dt, 1e-3);
}

TEST(Adaptive, AcceptedStepMeetsTolerance) {
  const auto stepper = coarsening_stepper(32);
  const auto s = stepper.initial_state(0.5 * cosine_field(stepper.grid()));
  const auto c = config();
  const auto r = adaptive_step(stepper, s, c.dt_max, c);
  EXPECT_GT(r.retries, 0);
  EXPECT_LE(r.error, c.tol);
  EXPECT_FALSE(r.forced);
  EXPECT_LT(r.accepted_dt, c.dt_max);
  EXPECT_GE(r.accepted_dt, c.dt_min);
  EXPECT_DOUBLE_EQ(r.step.state.t, r.accepted_dt);
  const auto direct = stepper.step_cn(s, r.accepted_dt);
  EXPECT_EQ(direct.state.Z, r.step.state.Z);
}

TEST(Adaptive, ToleranceBoundaryAccepts) {
  // An error exactly at tol passes "e > tol"; the next step is rho * dt.
  const auto stepper = coarsening_stepper(16);
  const auto s =
      stepper.initial_state(random_field(stepper.grid(), 4, -0.05, 0.05));
  auto c = config();
  const double dt = 1e-3;
  const auto be = stepper.step_be(s, dt), cn = stepper.step_cn(s, dt);
  c.tol = relative_difference(be.state.Z, cn.state.Z, stepper.grid());
  const auto r = adaptive_step(stepper, s, dt, c);
  EXPECT_EQ(r.retries, 0);
  EXPECT_EQ(r.error, c.tol);
  EXPECT_DOUBLE_EQ(r.next_dt, c.clamp(c.rho * dt));
}

TEST(Adaptive, ForcedAcceptanceAtMinimum) {
  const auto stepper = coarsening_stepper(16);
  const auto s =
      stepper.initial_state(random_field(stepper.grid(), 4, -0.05, 0.05));
  auto c = config();
  c.tol = 1e-14;
  const auto r = adaptive_step(stepper, s, c.dt_max, c);
  EXPECT_TRUE(r.forced);
  EXPECT_NEAR(r.accepted_dt, c.dt_min, 1e-18);
  EXPECT_EQ(r.next_dt, c.dt_min);
}

TEST(Adaptive, RetryBudgetExhaustionThrows) {
  const auto stepper = coarsening_stepper(16);
  const auto s =
      stepper.initial_state(random_field(stepper.grid(), 4, -0.05, 0.05));
  auto c = config();
  c.tol = 1e-14;
  c.dt_min = 1e-9;
  c.max_retries = 1;
  EXPECT_THROW(adaptive_step(stepper, s, c.dt_max, c), ControllerFailure);
  EXPECT_THROW(adaptive_step(stepper, s, 1.0, config()), std::invalid_argument);
}
