#pragma once

#include <span>
#include <vector>

#include "mfg/diffgraph.hpp"
#include "mfg/market_model.hpp"
#include "mfg/rnn_policy.hpp"

namespace mfg {

// Trajectories of N agents under one supply realization.
struct SampleTrajectory {
  ad::Matrix states;    // N x (K + 1)
  ad::Matrix controls;  // N x (K + 1); column K is the network's terminal output
  ad::Matrix adjoints;  // N x (K + 1); empty until reconstruct_adjoint
  std::vector<double> price;  // K + 1
  SupplyPath supply;

  std::size_t agents() const { return static_cast<std::size_t>(states.rows()); }
  std::size_t steps() const { return supply.steps(); }
};

// J independent supply realizations sharing one population draw.
struct ParticleBatch {
  std::vector<SampleTrajectory> samples;

  std::size_t size() const { return samples.size(); }
};

// Graph pieces of one loss evaluation.
struct LossGraph {
  ad::Var loss;
  BoundRnn control;
  BoundRnn price;
  std::vector<ad::Var> price_nodes;
  std::vector<double> price_values;
  ControlRollout rollout;
};

// Forward Euler X^{k+1} = X^k + v^k dt on the tape.
StateUpdate euler_update(double dt);

// (1/N) sum_n [ sum_{k<K} dt (L(X, v) + price (v - Q)) + u_T(X^K) ].
// states/controls are 1 x N nodes, price nodes are 1 x 1.
ad::Var adversarial_loss(const MarketModel& model, std::span<const ad::Var> states,
                         std::span<const ad::Var> controls, std::span<const ad::Var> price,
                         const SupplyPath& supply);

// Builds the price sequence, the control rollout and the loss on `tape`.
// The control network observes the price values as data, so the price
// parameters reach the loss only through the multiplier term.
LossGraph build_loss(ad::Tape& tape, const MarketModel& model, const RnnParams& control,
                     bool control_trainable, const RnnParams& price, bool price_trainable,
                     std::span<const double> x0, const SupplyPath& supply);

// Same on networks already placed on the tape. When observed_price is
// non-empty the control network reads it instead of the price sequence.
LossGraph build_loss(ad::Tape& tape, const MarketModel& model, BoundRnn control, BoundRnn price,
                     std::span<const double> x0, const SupplyPath& supply,
                     std::span<const double> observed_price = {});

// Central-difference check of the loss gradient with respect to one
// network. The control network's price input is held at the values the
// unperturbed price network produces, matching the gradient build_loss
// differentiates.
ad::GradCheckResult check_loss_gradient(const MarketModel& model, const RnnParams& control,
                                        const RnnParams& price, NetworkKind wrt,
                                        std::span<const double> x0, const SupplyPath& supply,
                                        double h);

// Evaluates both networks without gradients.
SampleTrajectory roll_dynamics(const MarketModel& model, const RnnParams& control,
                               const RnnParams& price, std::span<const double> x0,
                               const SupplyPath& supply);

// P^k = -L_v(X^k, v^k) - price^k for k = 0..K, using the terminal control
// for k = K.
void reconstruct_adjoint(const MarketModel& model, SampleTrajectory& sample);

// Loss value of finished trajectories, computed without a tape.
double trajectory_loss(const MarketModel& model, const SampleTrajectory& sample);

}  // namespace mfg
