#include "mfg/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace mfg {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
}

void check_rate(const AdamConfig& c, const char* prefix) {
  const std::string p(prefix);
  require(c.learning_rate >= 0.0 && c.learning_rate < 1.0, (p + ".learning_rate").c_str(),
          "must lie in [0, 1)");
  require(c.beta1 > 0.0 && c.beta1 < 1.0, (p + ".beta1").c_str(), "must lie in (0, 1)");
  require(c.beta2 > 0.0 && c.beta2 < 1.0, (p + ".beta2").c_str(), "must lie in (0, 1)");
  require(c.epsilon > 0.0, (p + ".epsilon").c_str(), "must be positive");
}

std::vector<ad::Matrix> collect(const ad::GradientMap& grads, const BoundRnn& net) {
  std::vector<ad::Matrix> out;
  for (const ad::Var& leaf : net.leaves()) out.push_back(grads.at(leaf.index()));
  return out;
}

void require_finite(std::size_t iteration, const char* quantity, double value) {
  if (!std::isfinite(value)) throw TrainingAborted(iteration, quantity, value);
}

}  // namespace

void TrainConfig::validate() const {
  require(epoch_size >= 1, "epoch_size", "must be at least 1");
  require(iterations % epoch_size == 0, "iterations", "must be a multiple of epoch_size");
  require(steps >= 1, "steps", "must be at least 1");
  require(train_agents >= 1, "train_agents", "must be at least 1");
  require(test_agents >= 1, "test_agents", "must be at least 1");
  require(mc_samples >= 1, "mc_samples", "must be at least 1");
  check_rate(control_optimizer, "control");
  check_rate(price_optimizer, "price");
}

TrainingAborted::TrainingAborted(std::size_t iteration, std::string quantity, double value)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "training aborted at iteration " << iteration << ": " << quantity << " = "
            << value;
        return msg.str();
      }()),
      iteration_(iteration),
      value_(value) {}

InitialParams initial_params(std::uint64_t seed) {
  Rng control_rng = Rng::stream(seed, Stream::kInit, 0);
  Rng price_rng = Rng::stream(seed, Stream::kInit, 1);
  return {init_control_params(control_rng), init_price_params(price_rng)};
}

ParticleBatch evaluation_batch(const MarketModel& model, const RnnParams& control,
                               const RnnParams& price, std::size_t steps, std::size_t agents,
                               std::size_t samples, std::uint64_t seed, std::uint64_t epoch) {
  Rng rng = Rng::stream(seed, Stream::kEval, epoch);
  const std::vector<double> x0 = sample_initial(model, agents, rng);
  ParticleBatch batch;
  batch.samples.reserve(samples);
  for (std::size_t j = 0; j < samples; ++j) {
    SupplyPath supply = simulate_supply(model, steps, rng);
    SampleTrajectory s = roll_dynamics(model, control, price, x0, supply);
    reconstruct_adjoint(model, s);
    batch.samples.push_back(std::move(s));
  }
  return batch;
}

TrainResult train(const MarketModel& model, const TrainConfig& config, InitialParams init,
                  const TrainHooks& hooks) {
  config.validate();
  TrainResult result{std::move(init.control), std::move(init.price), {}};
  RnnParams& control = result.control;
  RnnParams& price = result.price;

  std::vector<ad::Matrix> control_tensors = control.tensors();
  std::vector<ad::Matrix> price_tensors = price.tensors();
  AdamState control_state = AdamState::zeros_like(control_tensors);
  AdamState price_state = AdamState::zeros_like(price_tensors);

  std::vector<double> x0;
  SupplyPath supply;
  auto epoch_start = std::chrono::steady_clock::now();

  for (std::size_t i = 1; i <= config.iterations; ++i) {
    if (!config.freeze_samples || i == 1) {
      Rng population_rng = Rng::stream(config.seed, Stream::kPopulation, i);
      Rng supply_rng = Rng::stream(config.seed, Stream::kSupply, i);
      x0 = sample_initial(model, config.train_agents, population_rng);
      supply = simulate_supply(model, config.steps, supply_rng);
    }

    StepRecord record;
    record.step = i;

    // Descent on the control network at (theta_v^i, theta_pi^i).
    {
      if (hooks.on_gradient) hooks.on_gradient(UpdatePhase::kControlDescent, i, control, price);
      ad::Tape tape;
      LossGraph g = build_loss(tape, model, control, true, price, false, x0, supply);
      record.loss = g.loss.scalar();
      require_finite(i, "loss", record.loss);
      std::vector<ad::Matrix> grads = collect(tape.backward(g.loss), g.control);
      record.grad_norm_v = clip_global_norm(grads, config.clip_norm);
      require_finite(i, "control gradient norm", record.grad_norm_v);
      record.clipped_v = config.clip_norm > 0.0 && record.grad_norm_v > config.clip_norm;
      ascent_descent_step(control_tensors, grads, Direction::kDescent, control_state,
                          config.control_optimizer);
      control.set_tensors(control_tensors);
    }

    // Ascent on the price network at (theta_v^{i+1}, theta_pi^i), with the
    // controls re-rolled under the updated control network.
    if (!config.freeze_price) {
      if (hooks.on_gradient) hooks.on_gradient(UpdatePhase::kPriceAscent, i, control, price);
      ad::Tape tape;
      LossGraph g = build_loss(tape, model, control, false, price, true, x0, supply);
      require_finite(i, "loss after control update", g.loss.scalar());
      std::vector<ad::Matrix> grads = collect(tape.backward(g.loss), g.price);
      record.grad_norm_pi = clip_global_norm(grads, config.clip_norm);
      require_finite(i, "price gradient norm", record.grad_norm_pi);
      record.clipped_pi = config.clip_norm > 0.0 && record.grad_norm_pi > config.clip_norm;
      ascent_descent_step(price_tensors, grads, Direction::kAscent, price_state,
                          config.price_optimizer);
      price.set_tensors(price_tensors);
    }

    result.log.steps.push_back(record);
    if (hooks.on_step) hooks.on_step(record);

    if (i % config.epoch_size == 0) {
      EpochRecord epoch;
      epoch.epoch = i / config.epoch_size;
      ParticleBatch batch = evaluation_batch(model, control, price, config.steps,
                                             config.test_agents, config.mc_samples, config.seed,
                                             epoch.epoch);
      epoch.report = evaluate_posterior(model, batch);
      const auto now = std::chrono::steady_clock::now();
      epoch.seconds = std::chrono::duration<double>(now - epoch_start).count();
      epoch_start = now;
      result.log.epochs.push_back(epoch);
      if (hooks.on_epoch) hooks.on_epoch(epoch, control, price);
    }
  }
  return result;
}

TrainResult train(const MarketModel& model, const TrainConfig& config, const TrainHooks& hooks) {
  return train(model, config, initial_params(config.seed), hooks);
}

}  // namespace mfg
