#include "mfg/posterior.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg {

namespace {

void check_batch(const ParticleBatch& batch) {
  if (batch.samples.empty()) throw std::invalid_argument("posterior: empty batch");
  const std::size_t agents = batch.samples.front().agents();
  const std::size_t steps = batch.samples.front().steps();
  for (const auto& s : batch.samples) {
    if (s.agents() != agents || s.steps() != steps ||
        s.controls.cols() != static_cast<Eigen::Index>(steps + 1) ||
        s.states.cols() != static_cast<Eigen::Index>(steps + 1)) {
      throw std::invalid_argument("posterior: samples have inconsistent shapes");
    }
  }
}

}  // namespace

double mse_balance(const ParticleBatch& batch) {
  check_batch(batch);
  const std::size_t nodes = batch.samples.front().steps() + 1;
  double total = 0.0;
  for (const auto& s : batch.samples) {
    for (std::size_t k = 0; k < nodes; ++k) {
      const double r = s.controls.col(static_cast<Eigen::Index>(k)).mean() - s.supply.q[k];
      total += r * r;
    }
  }
  return total / static_cast<double>(batch.size() * nodes);
}

PosteriorReport mse_hamiltonian(const MarketModel& model, const ParticleBatch& batch) {
  check_batch(batch);
  PosteriorReport r;
  r.samples = batch.size();
  r.agents = batch.samples.front().agents();
  r.steps = batch.samples.front().steps();
  const auto K = static_cast<Eigen::Index>(r.steps);

  double drift = 0.0;
  double terminal = 0.0;
  for (const auto& s : batch.samples) {
    if (s.adjoints.rows() != s.states.rows() || s.adjoints.cols() != s.states.cols()) {
      throw std::invalid_argument("posterior: adjoints not reconstructed");
    }
    const double dt = s.supply.dt;
    for (Eigen::Index n = 0; n < s.states.rows(); ++n) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double e = s.adjoints(n, k + 1) - s.adjoints(n, k) +
                         dt * model.running_cost_dx(s.states(n, k), s.controls(n, k));
        drift += e * e;
      }
      const double e = model.terminal_cost_dx(s.states(n, K)) - s.adjoints(n, K);
      terminal += e * e;
    }
  }
  const double paths = static_cast<double>(r.samples * r.agents);
  r.drift_component = r.steps > 0 ? drift / (paths * static_cast<double>(r.steps)) : 0.0;
  r.terminal_component = terminal / paths;
  r.mse_eh = r.drift_component + r.terminal_component;
  return r;
}

PosteriorReport evaluate_posterior(const MarketModel& model, const ParticleBatch& batch) {
  PosteriorReport r = mse_hamiltonian(model, batch);
  r.mse_eb = mse_balance(batch);
  return r;
}

double certificate(const PosteriorReport& report, double c_hint) {
  if (!std::isfinite(report.mse_eh) || !std::isfinite(report.mse_eb)) {
    throw std::invalid_argument("certificate: report is not finite");
  }
  return c_hint * (std::sqrt(report.mse_eh) + std::sqrt(report.mse_eb));
}

}  // namespace mfg
