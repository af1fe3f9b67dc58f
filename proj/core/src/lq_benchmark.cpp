#include "mfg/lq_benchmark.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mfg {

namespace {

struct Ingredients {
  LqWeights w;
  AffineSupply s;
};

Ingredients require_lq(const MarketModel& model) {
  if (!model.lq || !model.affine_supply) {
    throw UnsupportedModel("the affine price oracle needs a linear-quadratic model with affine "
                           "supply (model '" + model.name + "')");
  }
  return {*model.lq, *model.affine_supply};
}

using State = std::array<double, 4>;  // a, b, c, gain

State rhs(const Ingredients& in, double t, const State& y) {
  const double kappa = in.s.reversion;
  return {
      -in.s.forcing(t) * (1.0 + y[2]) - in.w.lambda_x * in.w.x_ref,
      in.w.lambda_x,
      kappa * y[2] + kappa - y[1],
      y[3] * y[3] - in.w.lambda_x,
  };
}

State axpy(const State& y, double h, const State& k) {
  return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
}

}  // namespace

AffineCoefficients::Point AffineCoefficients::at(double time) const {
  const std::size_t m = steps();
  const double h = horizon / static_cast<double>(m);
  const double pos = std::clamp(time / h, 0.0, static_cast<double>(m));
  auto i = static_cast<std::size_t>(pos);
  if (i >= m) i = m - 1;
  const double w = pos - static_cast<double>(i);
  auto lerp = [&](const std::vector<double>& v) { return (1.0 - w) * v[i] + w * v[i + 1]; };
  return {lerp(a), lerp(b), lerp(c), lerp(gain)};
}

std::size_t default_ode_steps(std::size_t steps) { return std::max<std::size_t>(400, 10 * steps); }

AffineCoefficients solve_affine_coefficients(const MarketModel& model, std::size_t ode_steps) {
  const Ingredients in = require_lq(model);
  if (ode_steps < 400) throw std::invalid_argument("solve_affine_coefficients: need >= 400 steps");

  AffineCoefficients out;
  out.horizon = model.horizon;
  const std::size_t m = ode_steps;
  out.t.resize(m + 1);
  out.a.resize(m + 1);
  out.b.resize(m + 1);
  out.c.resize(m + 1);
  out.gain.resize(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    out.t[i] = model.horizon * static_cast<double>(i) / static_cast<double>(m);
  }

  State y{in.w.lambda_t * in.w.x_ref, -in.w.lambda_t, -1.0, in.w.lambda_t};
  auto store = [&](std::size_t i) {
    out.a[i] = y[0];
    out.b[i] = y[1];
    out.c[i] = y[2];
    out.gain[i] = y[3];
  };
  store(m);
  const double h = -model.horizon / static_cast<double>(m);
  for (std::size_t i = m; i > 0; --i) {
    const double t = out.t[i];
    const State k1 = rhs(in, t, y);
    const State k2 = rhs(in, t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const State k3 = rhs(in, t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const State k4 = rhs(in, t + h, axpy(y, h, k3));
    for (std::size_t j = 0; j < 4; ++j) y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    store(i - 1);
  }
  out.w0 = out.a[0] + out.b[0] * model.init_mean + out.c[0] * model.q0;
  return out;
}

double coefficient_residual(const AffineCoefficients& coeffs, const MarketModel& model) {
  const Ingredients in = require_lq(model);
  const std::size_t m = coeffs.steps();
  const double h = coeffs.horizon / static_cast<double>(m);
  auto d = [&](const std::vector<double>& v, std::size_t i) {
    return (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
  };
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 <= m; ++i) {
    const State y{coeffs.a[i], coeffs.b[i], coeffs.c[i], coeffs.gain[i]};
    const State f = rhs(in, coeffs.t[i], y);
    worst = std::max({worst, std::abs(d(coeffs.a, i) - f[0]), std::abs(d(coeffs.b, i) - f[1]),
                      std::abs(d(coeffs.c, i) - f[2]), std::abs(d(coeffs.gain, i) - f[3])});
  }
  return worst;
}

OraclePath oracle_price_path(const AffineCoefficients& coeffs, const MarketModel& model,
                             const SupplyPath& supply, double mean0,
                             std::optional<double> initial_price, double gap_constant) {
  const Ingredients in = require_lq(model);
  const std::size_t steps = supply.steps();
  const double dt = supply.dt;

  OraclePath path;
  path.t = supply.t;
  path.supply = supply.q;
  path.mean_state.resize(steps + 1);
  path.price_exact.resize(steps + 1);
  path.price_simulated.resize(steps + 1);

  path.mean_state[0] = mean0;
  for (std::size_t k = 0; k < steps; ++k) {
    path.mean_state[k + 1] = path.mean_state[k] + supply.q[k] * dt;
  }
  for (std::size_t k = 0; k <= steps; ++k) {
    const auto p = coeffs.at(supply.t[k]);
    path.price_exact[k] = p.a + p.b * path.mean_state[k] + p.c * supply.q[k];
  }

  path.price_simulated[0] = initial_price.value_or(path.price_exact[0]);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = supply.t[k];
    const double drift = in.w.lambda_x * (path.mean_state[k] - in.w.x_ref) - in.s.forcing(t) +
                         in.s.reversion * supply.q[k];
    const double diffusion = coeffs.at(t).c * in.s.volatility(t);
    path.price_simulated[k + 1] = path.price_simulated[k] + drift * dt + diffusion * supply.dw[k];
  }

  for (std::size_t k = 0; k <= steps; ++k) {
    path.max_gap = std::max(path.max_gap, std::abs(path.price_exact[k] - path.price_simulated[k]));
  }
  if (!initial_price && path.max_gap > gap_constant * dt) {
    std::ostringstream msg;
    msg << "oracle price representations disagree: max gap " << path.max_gap << " exceeds "
        << gap_constant << " * dt = " << gap_constant * dt;
    throw OracleInconsistency(msg.str());
  }
  return path;
}

double oracle_adjoint(const AffineCoefficients& coeffs, double x, double mean_state, double q,
                      double t) {
  const auto p = coeffs.at(t);
  const double price = p.a + p.b * mean_state + p.c * q;
  return -q - price + p.gain * (x - mean_state);
}

double oracle_feedback_control(const AffineCoefficients& coeffs, const MarketModel& model,
                               double x, double mean_state, double q, double t) {
  require_lq(model);
  const auto p = coeffs.at(t);
  const double price = p.a + p.b * mean_state + p.c * q;
  const double costate = oracle_adjoint(coeffs, x, mean_state, q, t);
  return model.optimal_control(x, costate + price);
}

SampleTrajectory oracle_sample(const AffineCoefficients& coeffs, const MarketModel& model,
                               std::span<const double> x0, const SupplyPath& fine,
                               std::size_t factor) {
  if (x0.empty()) throw std::invalid_argument("oracle_sample: empty population");
  const double mean0 = std::accumulate(x0.begin(), x0.end(), 0.0) / static_cast<double>(x0.size());
  const OraclePath reference = oracle_price_path(coeffs, model, fine, mean0);

  SampleTrajectory s;
  s.supply = coarsen(fine, factor);
  const std::size_t steps = s.supply.steps();
  const auto agents = static_cast<Eigen::Index>(x0.size());
  const auto nodes = static_cast<Eigen::Index>(steps + 1);
  s.states.resize(agents, nodes);
  s.controls.resize(agents, nodes);
  s.price.resize(steps + 1);

  for (Eigen::Index n = 0; n < agents; ++n) s.states(n, 0) = x0[static_cast<std::size_t>(n)];
  for (std::size_t k = 0; k <= steps; ++k) {
    const std::size_t fk = k * factor;
    const double t = s.supply.t[k];
    const double q = s.supply.q[k];
    const double mean_state = reference.mean_state[fk];
    s.price[k] = reference.price_exact[fk];
    const auto kk = static_cast<Eigen::Index>(k);
    for (Eigen::Index n = 0; n < agents; ++n) {
      const double v = oracle_feedback_control(coeffs, model, s.states(n, kk), mean_state, q, t);
      s.controls(n, kk) = v;
      if (k < steps) s.states(n, kk + 1) = s.states(n, kk) + v * s.supply.dt;
    }
  }
  return s;
}

}  // namespace mfg
