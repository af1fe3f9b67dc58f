#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfg/rng.hpp"

namespace mfg {

using ScalarFn = std::function<double(double)>;
// Functions of (x, v), (x, p) or (q, t) depending on the slot.
using BivariateFn = std::function<double(double, double)>;

// Quadratic cost weights: L = lambda_x/2 (x - x_ref)^2 + v^2/2,
// u_T = lambda_t/2 (x - x_ref)^2.
struct LqWeights {
  double lambda_x = 1.0;
  double x_ref = 1.0;
  double lambda_t = 0.36787944117144233;  // 1/e
};

// Supply dynamics dQ = (forcing(t) - reversion Q) dt + volatility(t) dW.
struct AffineSupply {
  double reversion = 1.0;
  ScalarFn forcing;
  ScalarFn volatility;
};

// 3 sin(3 pi t) forcing with noise max(0.5 sin(2 pi (t - 1/4)), 0), active
// only on [1/4, 3/4]. noise_scale multiplies the volatility.
AffineSupply seasonal_supply(double noise_scale = 1.0);
AffineSupply zero_supply();

struct MarketModel {
  std::string name;

  BivariateFn running_cost;     // L(x, v)
  BivariateFn running_cost_dx;  // L_x(x, v)
  BivariateFn running_cost_dv;  // L_v(x, v)
  BivariateFn hamiltonian;      // H(x, p) = sup_v { -p v - L(x, v) }
  BivariateFn hamiltonian_dp;   // H_p(x, p)
  BivariateFn hamiltonian_dx;   // H_x(x, p)
  ScalarFn terminal_cost;       // u_T(x)
  ScalarFn terminal_cost_dx;    // u_T'(x)

  BivariateFn supply_drift;      // b^S(q, t)
  BivariateFn supply_diffusion;  // sigma^S(q, t)

  double init_mean = -0.25;
  double init_std = 0.2;
  double horizon = 1.0;
  double q0 = 0.0;

  // Present when the instance admits the affine price oracle.
  std::optional<LqWeights> lq;
  std::optional<AffineSupply> affine_supply;

  // Optimal control for costate p: v* = -H_p(x, p).
  double optimal_control(double x, double p) const { return -hamiltonian_dp(x, p); }
};

void set_supply(MarketModel& model, AffineSupply supply);

// Linear-quadratic instance with the reference supply and initial law
// N(-1/4, 0.2^2) on [0, 1].
MarketModel lq_model(double lambda_x, double x_ref, double lambda_t);
MarketModel lq_model(const LqWeights& weights);

// Non-quadratic running cost lambda_x (cosh(x - x_ref) - 1) + v^2/2 with the
// quadratic terminal cost. Separable and concave-convex, but has no affine
// price oracle.
MarketModel cosh_model(double lambda_x, double x_ref, double lambda_t);

// One discrete realization of the supply process on a uniform grid.
struct SupplyPath {
  std::vector<double> t;   // K + 1 grid times
  std::vector<double> q;   // K + 1 supply values
  std::vector<double> dw;  // K Brownian increments
  double dt = 0.0;

  std::size_t steps() const { return dw.size(); }
};

// n i.i.d. draws from N(init_mean, init_std^2).
std::vector<double> sample_initial(const MarketModel& model, std::size_t n, Rng& rng);

// Euler-Maruyama on K * substeps steps; the returned path keeps every
// substeps-th node and sums the increments between kept nodes.
SupplyPath simulate_supply(const MarketModel& model, std::size_t steps, Rng& rng,
                           std::size_t substeps = 1);

// Euler-Maruyama driven by prescribed increments (one per step). With
// substeps > 1 the increments are on the fine grid and the path is
// returned on the coarse one.
SupplyPath integrate_supply(const MarketModel& model, std::span<const double> dw,
                            std::size_t substeps = 1);

// Keeps every factor-th node and sums the increments in between.
SupplyPath coarsen(const SupplyPath& fine, std::size_t factor);

}  // namespace mfg
