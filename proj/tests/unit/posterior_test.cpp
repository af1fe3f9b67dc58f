#include "mfg/posterior.hpp"

#include <gtest/gtest.h>

#include "mfg/lq_benchmark.hpp"
#include "mfg/trainer.hpp"

namespace {

using namespace mfg;
using ad::Matrix;

// Two agents, two steps, every number chosen by hand.
SampleTrajectory tiny_sample(double shift) {
  SampleTrajectory s;
  s.supply.dt = 0.5;
  s.supply.t = {0.0, 0.5, 1.0};
  s.supply.q = {0.0, 1.0, 2.0 + shift};
  s.supply.dw = {0.0, 0.0};
  s.states.resize(2, 3);
  s.states << 0.0, 1.0, 2.0,
              1.0, 0.5, 0.0;
  s.controls.resize(2, 3);
  s.controls << 1.0, 2.0, 3.0,
                0.0, 1.0, 0.0;
  s.adjoints.resize(2, 3);
  s.adjoints << -1.0, -0.5, 1.0,
                 0.0, 0.5, 0.5;
  s.price = {0.0, 0.0, 0.0};
  return s;
}

TEST(Posterior, BalanceByHand) {
  ParticleBatch batch;
  batch.samples = {tiny_sample(0.0), tiny_sample(1.0)};
  // Sample 1 residuals (mean v - Q): 0.5, 0.5, -0.5; sample 2: 0.5, 0.5, -1.5.
  const double expected = (0.25 + 0.25 + 0.25 + 0.25 + 0.25 + 2.25) / 6.0;
  EXPECT_DOUBLE_EQ(mse_balance(batch), expected);
}

TEST(Posterior, HamiltonianByHand) {
  // L_x = x - 1, u_T'(x) = (x - 1) / e.
  const MarketModel m = lq_model(LqWeights{});
  ParticleBatch batch;
  batch.samples = {tiny_sample(0.0)};
  const double dt = 0.5;
  // Agent 1: x = 0, 1, 2; P = -1, -0.5, 1.
  const double a1 = -0.5 - (-1.0) + dt * (0.0 - 1.0);
  const double a2 = 1.0 - (-0.5) + dt * (1.0 - 1.0);
  // Agent 2: x = 1, 0.5, 0; P = 0, 0.5, 0.5.
  const double b1 = 0.5 - 0.0 + dt * (1.0 - 1.0);
  const double b2 = 0.5 - 0.5 + dt * (0.5 - 1.0);
  const double drift = (a1 * a1 + a2 * a2 + b1 * b1 + b2 * b2) / (1 * 2 * 2);
  const double ta = (2.0 - 1.0) * std::exp(-1.0) - 1.0;
  const double tb = (0.0 - 1.0) * std::exp(-1.0) - 0.5;
  const double terminal = (ta * ta + tb * tb) / 2;
  const PosteriorReport r = mse_hamiltonian(m, batch);
  EXPECT_NEAR(r.drift_component, drift, 1e-15);
  EXPECT_NEAR(r.terminal_component, terminal, 1e-15);
  EXPECT_NEAR(r.mse_eh, drift + terminal, 1e-15);
  EXPECT_EQ(r.samples, 1u);
  EXPECT_EQ(r.agents, 2u);
  EXPECT_EQ(r.steps, 2u);
}

TEST(Posterior, ZeroControlsGiveMeanSquaredSupply) {
  const MarketModel m = lq_model(LqWeights{});
  const RnnParams control = zero_params(NetworkKind::kControl, control_layer_dims(), kControlInputs);
  const RnnParams price = zero_params(NetworkKind::kPrice, price_layer_dims(), kPriceInputs);
  const ParticleBatch batch = evaluation_batch(m, control, price, 40, 5, 8, 1, 0);
  double q2 = 0.0;
  for (const auto& s : batch.samples) {
    for (double q : s.supply.q) q2 += q * q;
  }
  q2 /= 8.0 * 41.0;
  EXPECT_NEAR(mse_balance(batch), q2, 1e-14);
  EXPECT_GT(mse_balance(batch), 0.1);
}

TEST(Posterior, RequiresAdjoints) {
  ParticleBatch batch;
  batch.samples = {tiny_sample(0.0)};
  batch.samples[0].adjoints.resize(0, 0);
  EXPECT_THROW(mse_hamiltonian(lq_model(LqWeights{}), batch), std::invalid_argument);
  EXPECT_THROW(mse_balance(ParticleBatch{}), std::invalid_argument);
}

TEST(Posterior, Certificate) {
  PosteriorReport r;
  r.mse_eh = 0.04;
  r.mse_eb = 0.09;
  EXPECT_DOUBLE_EQ(certificate(r), 0.5);
  EXPECT_DOUBLE_EQ(certificate(r, 2.0), 1.0);
  r.mse_eb = std::nan("");
  EXPECT_THROW(certificate(r), std::invalid_argument);
}

// Oracle controls and prices on a fine path: both residuals shrink when the
// grid is refined.
TEST(Posterior, ExactDataResidualsShrinkWithTheGrid) {
  const MarketModel m = lq_model(LqWeights{});
  const AffineCoefficients coeffs = solve_affine_coefficients(m, 3200);
  Rng pop(1);
  const std::vector<double> x0 = sample_initial(m, 20, pop);
  std::vector<PosteriorReport> reports;
  for (std::size_t steps : {20u, 40u, 80u}) {
    ParticleBatch batch;
    Rng sup(2);
    for (int j = 0; j < 16; ++j) {
      const SupplyPath fine = simulate_supply(m, 320, sup);
      SampleTrajectory s = oracle_sample(coeffs, m, x0, fine, 320 / steps);
      reconstruct_adjoint(m, s);
      batch.samples.push_back(std::move(s));
    }
    reports.push_back(evaluate_posterior(m, batch));
  }
  for (std::size_t i = 1; i < reports.size(); ++i) {
    EXPECT_LT(reports[i].mse_eb, reports[i - 1].mse_eb);
    EXPECT_LT(reports[i].mse_eh, reports[i - 1].mse_eh);
  }
}

}  // namespace
