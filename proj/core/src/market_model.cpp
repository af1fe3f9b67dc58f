#include "mfg/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mfg {

AffineSupply seasonal_supply(double noise_scale) {
  AffineSupply s;
  s.reversion = 1.0;
  s.forcing = [](double t) { return 3.0 * std::sin(3.0 * std::numbers::pi * t); };
  s.volatility = [noise_scale](double t) {
    return noise_scale * std::max(0.5 * std::sin(2.0 * std::numbers::pi * (t - 0.25)), 0.0);
  };
  return s;
}

AffineSupply zero_supply() {
  AffineSupply s;
  s.reversion = 0.0;
  s.forcing = [](double) { return 0.0; };
  s.volatility = [](double) { return 0.0; };
  return s;
}

void set_supply(MarketModel& model, AffineSupply supply) {
  model.supply_drift = [forcing = supply.forcing, kappa = supply.reversion](double q, double t) {
    return forcing(t) - kappa * q;
  };
  model.supply_diffusion = [vol = supply.volatility](double, double t) { return vol(t); };
  model.affine_supply = std::move(supply);
}

namespace {

void set_quadratic_terminal(MarketModel& m, double lambda_t, double x_ref) {
  m.terminal_cost = [=](double x) { return 0.5 * lambda_t * (x - x_ref) * (x - x_ref); };
  m.terminal_cost_dx = [=](double x) { return lambda_t * (x - x_ref); };
}

}  // namespace

MarketModel lq_model(double lambda_x, double x_ref, double lambda_t) {
  if (lambda_x < 0.0 || lambda_t < 0.0) {
    throw std::invalid_argument("lq_model: weights must be non-negative");
  }
  MarketModel m;
  m.name = "lq";
  m.running_cost = [=](double x, double v) {
    return 0.5 * lambda_x * (x - x_ref) * (x - x_ref) + 0.5 * v * v;
  };
  m.running_cost_dx = [=](double x, double) { return lambda_x * (x - x_ref); };
  m.running_cost_dv = [](double, double v) { return v; };
  m.hamiltonian = [=](double x, double p) {
    return 0.5 * p * p - 0.5 * lambda_x * (x - x_ref) * (x - x_ref);
  };
  m.hamiltonian_dp = [](double, double p) { return p; };
  m.hamiltonian_dx = [=](double x, double) { return -lambda_x * (x - x_ref); };
  set_quadratic_terminal(m, lambda_t, x_ref);
  set_supply(m, seasonal_supply());
  m.lq = LqWeights{lambda_x, x_ref, lambda_t};
  return m;
}

MarketModel lq_model(const LqWeights& w) { return lq_model(w.lambda_x, w.x_ref, w.lambda_t); }

MarketModel cosh_model(double lambda_x, double x_ref, double lambda_t) {
  if (lambda_x < 0.0 || lambda_t < 0.0) {
    throw std::invalid_argument("cosh_model: weights must be non-negative");
  }
  MarketModel m;
  m.name = "cosh";
  m.running_cost = [=](double x, double v) {
    return lambda_x * (std::cosh(x - x_ref) - 1.0) + 0.5 * v * v;
  };
  m.running_cost_dx = [=](double x, double) { return lambda_x * std::sinh(x - x_ref); };
  m.running_cost_dv = [](double, double v) { return v; };
  m.hamiltonian = [=](double x, double p) {
    return 0.5 * p * p - lambda_x * (std::cosh(x - x_ref) - 1.0);
  };
  m.hamiltonian_dp = [](double, double p) { return p; };
  m.hamiltonian_dx = [=](double x, double) { return -lambda_x * std::sinh(x - x_ref); };
  set_quadratic_terminal(m, lambda_t, x_ref);
  set_supply(m, seasonal_supply());
  return m;
}

std::vector<double> sample_initial(const MarketModel& model, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_initial: n must be positive");
  return rng.normals(n, model.init_mean, model.init_std);
}

SupplyPath integrate_supply(const MarketModel& model, std::span<const double> dw,
                            std::size_t substeps) {
  if (substeps == 0 || dw.empty() || dw.size() % substeps != 0) {
    throw std::invalid_argument("integrate_supply: increments must fill whole coarse steps");
  }
  const std::size_t fine_steps = dw.size();
  const std::size_t steps = fine_steps / substeps;
  const double h = model.horizon / static_cast<double>(fine_steps);

  SupplyPath path;
  path.dt = model.horizon / static_cast<double>(steps);
  path.t.resize(steps + 1);
  path.q.resize(steps + 1);
  path.dw.assign(steps, 0.0);
  for (std::size_t k = 0; k <= steps; ++k) {
    path.t[k] = model.horizon * static_cast<double>(k) / static_cast<double>(steps);
  }

  double q = model.q0;
  path.q[0] = q;
  for (std::size_t i = 0; i < fine_steps; ++i) {
    const double t = model.horizon * static_cast<double>(i) / static_cast<double>(fine_steps);
    q += model.supply_drift(q, t) * h + model.supply_diffusion(q, t) * dw[i];
    path.dw[i / substeps] += dw[i];
    if ((i + 1) % substeps == 0) path.q[(i + 1) / substeps] = q;
  }
  return path;
}

SupplyPath simulate_supply(const MarketModel& model, std::size_t steps, Rng& rng,
                           std::size_t substeps) {
  if (steps == 0 || substeps == 0) {
    throw std::invalid_argument("simulate_supply: steps and substeps must be positive");
  }
  const std::size_t fine = steps * substeps;
  const double sd = std::sqrt(model.horizon / static_cast<double>(fine));
  std::vector<double> dw = rng.normals(fine, 0.0, sd);
  return integrate_supply(model, dw, substeps);
}

SupplyPath coarsen(const SupplyPath& fine, std::size_t factor) {
  if (factor == 0 || fine.steps() % factor != 0) {
    throw std::invalid_argument("coarsen: factor must divide the step count");
  }
  const std::size_t steps = fine.steps() / factor;
  SupplyPath out;
  out.dt = fine.dt * static_cast<double>(factor);
  out.t.resize(steps + 1);
  out.q.resize(steps + 1);
  out.dw.assign(steps, 0.0);
  for (std::size_t k = 0; k <= steps; ++k) {
    out.t[k] = fine.t[k * factor];
    out.q[k] = fine.q[k * factor];
  }
  for (std::size_t i = 0; i < fine.steps(); ++i) out.dw[i / factor] += fine.dw[i];
  return out;
}

}  // namespace mfg
