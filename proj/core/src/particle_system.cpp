#include "mfg/particle_system.hpp"

#include <stdexcept>

namespace mfg {

StateUpdate euler_update(double dt) {
  return [dt](std::size_t, ad::Var x, ad::Var v) { return ad::add(x, ad::scale(v, dt)); };
}

ad::Var adversarial_loss(const MarketModel& model, std::span<const ad::Var> states,
                         std::span<const ad::Var> controls, std::span<const ad::Var> price,
                         const SupplyPath& supply) {
  const std::size_t steps = supply.steps();
  if (states.size() != steps + 1 || controls.size() < steps || price.size() < steps) {
    throw ad::DimensionError("adversarial_loss: sequences do not match the supply grid");
  }
  const double dt = supply.dt;
  ad::Var total = ad::mean(ad::map(states[steps], model.terminal_cost, model.terminal_cost_dx));
  for (std::size_t k = 0; k < steps; ++k) {
    ad::Var running = ad::mean(ad::map(states[k], controls[k], model.running_cost,
                                       model.running_cost_dx, model.running_cost_dv));
    ad::Var imbalance = ad::shift(ad::mean(controls[k]), -supply.q[k]);
    ad::Var multiplier = ad::mul(price[k], imbalance);
    total = ad::add(total, ad::scale(ad::add(running, multiplier), dt));
  }
  return total;
}

LossGraph build_loss(ad::Tape& tape, const MarketModel& model, BoundRnn control, BoundRnn price,
                     std::span<const double> x0, const SupplyPath& supply,
                     std::span<const double> observed_price) {
  LossGraph g;
  g.price = std::move(price);
  g.control = std::move(control);
  g.price_nodes = unroll_price(g.price, supply, model.horizon);
  g.price_values.reserve(g.price_nodes.size());
  for (const ad::Var& p : g.price_nodes) g.price_values.push_back(p.scalar());
  if (observed_price.empty()) observed_price = g.price_values;
  if (observed_price.size() != g.price_values.size()) {
    throw ad::DimensionError("build_loss: observed price does not match the supply grid");
  }

  ad::Matrix x_init(1, static_cast<Eigen::Index>(x0.size()));
  for (std::size_t n = 0; n < x0.size(); ++n) x_init(0, static_cast<Eigen::Index>(n)) = x0[n];
  g.rollout = unroll_control(g.control, supply.t, tape.constant(x_init), observed_price,
                             euler_update(supply.dt));
  g.loss = adversarial_loss(model, g.rollout.states, g.rollout.controls, g.price_nodes, supply);
  return g;
}

LossGraph build_loss(ad::Tape& tape, const MarketModel& model, const RnnParams& control,
                     bool control_trainable, const RnnParams& price, bool price_trainable,
                     std::span<const double> x0, const SupplyPath& supply) {
  BoundRnn price_net = bind(tape, price, price_trainable);
  BoundRnn control_net = bind(tape, control, control_trainable);
  return build_loss(tape, model, std::move(control_net), std::move(price_net), x0, supply);
}

ad::GradCheckResult check_loss_gradient(const MarketModel& model, const RnnParams& control,
                                        const RnnParams& price, NetworkKind wrt,
                                        std::span<const double> x0, const SupplyPath& supply,
                                        double h) {
  const std::vector<double> observed = roll_dynamics(model, control, price, x0, supply).price;
  const RnnParams& target = wrt == NetworkKind::kControl ? control : price;
  auto builder = [&](ad::Tape& tape, std::span<const ad::Var> leaves) {
    BoundRnn price_net =
        wrt == NetworkKind::kPrice ? bind_leaves(price, leaves) : bind(tape, price, false);
    BoundRnn control_net =
        wrt == NetworkKind::kControl ? bind_leaves(control, leaves) : bind(tape, control, false);
    return build_loss(tape, model, std::move(control_net), std::move(price_net), x0, supply,
                      observed)
        .loss;
  };
  return ad::grad_check(builder, target.tensors(), h);
}

SampleTrajectory roll_dynamics(const MarketModel& model, const RnnParams& control,
                               const RnnParams& price, std::span<const double> x0,
                               const SupplyPath& supply) {
  ad::Tape tape;
  LossGraph g = build_loss(tape, model, control, false, price, false, x0, supply);
  const auto agents = static_cast<Eigen::Index>(x0.size());
  const auto nodes = static_cast<Eigen::Index>(supply.q.size());

  SampleTrajectory s;
  s.states.resize(agents, nodes);
  s.controls.resize(agents, nodes);
  for (Eigen::Index k = 0; k < nodes; ++k) {
    s.states.col(k) = g.rollout.states[static_cast<std::size_t>(k)].value().row(0).transpose();
    s.controls.col(k) =
        g.rollout.controls[static_cast<std::size_t>(k)].value().row(0).transpose();
  }
  s.price = std::move(g.price_values);
  s.supply = supply;
  return s;
}

void reconstruct_adjoint(const MarketModel& model, SampleTrajectory& sample) {
  const Eigen::Index agents = sample.states.rows();
  const Eigen::Index nodes = sample.states.cols();
  if (sample.controls.rows() != agents || sample.controls.cols() != nodes ||
      static_cast<Eigen::Index>(sample.price.size()) != nodes) {
    throw std::invalid_argument("reconstruct_adjoint: trajectory shapes disagree");
  }
  sample.adjoints.resize(agents, nodes);
  for (Eigen::Index k = 0; k < nodes; ++k) {
    const double price = sample.price[static_cast<std::size_t>(k)];
    for (Eigen::Index n = 0; n < agents; ++n) {
      sample.adjoints(n, k) =
          -model.running_cost_dv(sample.states(n, k), sample.controls(n, k)) - price;
    }
  }
}

double trajectory_loss(const MarketModel& model, const SampleTrajectory& sample) {
  const std::size_t steps = sample.steps();
  const double dt = sample.supply.dt;
  const Eigen::Index agents = sample.states.rows();
  double total = 0.0;
  for (Eigen::Index n = 0; n < agents; ++n) {
    double cost = model.terminal_cost(sample.states(n, static_cast<Eigen::Index>(steps)));
    for (std::size_t k = 0; k < steps; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double v = sample.controls(n, kk);
      cost += dt * (model.running_cost(sample.states(n, kk), v) +
                    sample.price[k] * (v - sample.supply.q[k]));
    }
    total += cost;
  }
  return total / static_cast<double>(agents);
}

}  // namespace mfg
