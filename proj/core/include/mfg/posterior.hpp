#pragma once

// Pathwise a posteriori residuals of a particle batch.
//
// Balance:    (1/(J (K+1))) sum_j sum_{k=0..K} (mean_n v - Q)^2
// Optimality: drift    = (1/(J N K)) sum_{j,n} sum_{k<K} (P^{k+1} - P^k + dt L_x(X^k, v^k))^2
//             terminal = (1/(J N))   sum_{j,n} (u_T'(X^K) - P^K)^2
//             mse_eh   = drift + terminal
//
// The drift sum stops at K - 1 because the increment P^{k+1} - P^k needs a
// successor, and the terminal mismatch is counted once per path and agent.

#include <cstddef>

#include "mfg/market_model.hpp"
#include "mfg/particle_system.hpp"

namespace mfg {

struct PosteriorReport {
  double mse_eh = 0.0;
  double mse_eb = 0.0;
  double drift_component = 0.0;
  double terminal_component = 0.0;
  std::size_t samples = 0;  // J
  std::size_t agents = 0;   // N
  std::size_t steps = 0;    // K
};

double mse_balance(const ParticleBatch& batch);

// Requires adjoints from reconstruct_adjoint.
PosteriorReport mse_hamiltonian(const MarketModel& model, const ParticleBatch& batch);

// Both residuals.
PosteriorReport evaluate_posterior(const MarketModel& model, const ParticleBatch& batch);

// c_hint * (sqrt(mse_eh) + sqrt(mse_eb)). The constant of the underlying
// stability estimate is not known, so this is a monitoring quantity rather
// than a proven bound.
double certificate(const PosteriorReport& report, double c_hint = 1.0);

}  // namespace mfg
