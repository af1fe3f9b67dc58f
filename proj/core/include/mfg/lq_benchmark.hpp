#pragma once

// Reference price for the linear-quadratic instance.
//
// With L = lambda_x/2 (x - x_ref)^2 + v^2/2, u_T = lambda_t/2 (x - x_ref)^2
// and supply dQ = (f(t) - kappa Q) dt + s(t) dW, market clearing gives
// price = -Q - mean(P), and matching the ansatz price = a + b Xbar + c Q
// against the dynamics of Xbar (dXbar = Q dt) and of mean(P) yields
//
//   b' = lambda_x                               b(T) = -lambda_t
//   c' = kappa c + kappa - b                    c(T) = -1
//   a' = -f(t) (1 + c) - lambda_x x_ref         a(T) = lambda_t x_ref
//
// and a price diffusion of c(t) s(t) dW. An agent's deviation from the mean
// carries a costate gain P - mean(P) = g(t) (x - Xbar) with the Riccati
// equation g' = g^2 - lambda_x, g(T) = lambda_t.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfg/market_model.hpp"
#include "mfg/particle_system.hpp"

namespace mfg {

class UnsupportedModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OracleInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AffineCoefficients {
  double horizon = 1.0;
  std::vector<double> t;     // uniform ODE grid, ode_steps + 1 nodes
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;
  std::vector<double> gain;  // g(t)
  double w0 = 0.0;           // a(0) + b(0) init_mean + c(0) q0

  struct Point {
    double a, b, c, gain;
  };
  // Linear interpolation on the ODE grid.
  Point at(double time) const;
  std::size_t steps() const { return t.size() - 1; }
};

// RK4 backward from T on ode_steps uniform steps (at least 400).
AffineCoefficients solve_affine_coefficients(const MarketModel& model, std::size_t ode_steps);

// Default ODE resolution for a simulation grid of `steps`: 10x finer, never
// below 400.
std::size_t default_ode_steps(std::size_t steps);

// Largest pointwise residual of the coefficient equations on the interior of
// the ODE grid, with derivatives from five-point central differences.
double coefficient_residual(const AffineCoefficients& coeffs, const MarketModel& model);

struct OraclePath {
  std::vector<double> t;
  std::vector<double> supply;
  std::vector<double> mean_state;       // Xbar by forward Euler, dXbar = Q dt
  std::vector<double> price_exact;      // a + b Xbar + c Q
  std::vector<double> price_simulated;  // Euler-Maruyama of the price SDE
  double max_gap = 0.0;                 // max_k |exact - simulated|
};

// Both price representations along one supply path. Throws
// OracleInconsistency when max_gap exceeds gap_constant * dt. An
// initial_price override starts the simulated path elsewhere and disables
// the check.
OraclePath oracle_price_path(const AffineCoefficients& coeffs, const MarketModel& model,
                             const SupplyPath& supply, double mean0,
                             std::optional<double> initial_price = std::nullopt,
                             double gap_constant = 50.0);

// Costate of an agent at x: P = -Q - price + g(t) (x - Xbar).
double oracle_adjoint(const AffineCoefficients& coeffs, double x, double mean_state, double q,
                      double t);

// v = -H_p(x, P + price) with the oracle costate; equals Q - g(t)(x - Xbar).
double oracle_feedback_control(const AffineCoefficients& coeffs, const MarketModel& model,
                               double x, double mean_state, double q, double t);

// Exact-solution particle data on the grid of coarsen(fine, factor): the
// mean state and the price come from the fine path, agents move by forward
// Euler on the coarse grid under the oracle feedback. Xbar starts at the
// population mean of x0.
SampleTrajectory oracle_sample(const AffineCoefficients& coeffs, const MarketModel& model,
                               std::span<const double> x0, const SupplyPath& fine,
                               std::size_t factor);

}  // namespace mfg
