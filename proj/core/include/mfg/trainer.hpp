#pragma once

// Alternating descent (control network) / ascent (price network) on the
// adversarial loss, with a posteriori residuals every epoch.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfg/market_model.hpp"
#include "mfg/optimizer.hpp"
#include "mfg/particle_system.hpp"
#include "mfg/posterior.hpp"
#include "mfg/rnn_policy.hpp"

namespace mfg {

struct TrainConfig {
  std::size_t iterations = 10000;  // I
  std::size_t epoch_size = 500;    // I_e
  std::size_t steps = 40;          // K
  std::size_t train_agents = 30;   // N_train
  std::size_t test_agents = 30;    // N_test
  std::size_t mc_samples = 60;     // J
  AdamConfig control_optimizer;
  AdamConfig price_optimizer;
  double clip_norm = 10.0;  // <= 0 disables clipping
  std::uint64_t seed = 0;

  // Diagnostics: reuse the first population and supply path every
  // iteration, and/or skip the price ascent.
  bool freeze_samples = false;
  bool freeze_price = false;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;  // 1-based iteration
  double loss = 0.0;     // L(theta_v^i, theta_pi^i)
  double grad_norm_v = 0.0;
  double grad_norm_pi = 0.0;
  bool clipped_v = false;
  bool clipped_pi = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  PosteriorReport report;
  double seconds = 0.0;  // wall clock of the epoch
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  RnnParams control;
  RnnParams price;
  TrainLog log;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(std::size_t iteration, std::string quantity, double value);
  std::size_t iteration() const { return iteration_; }
  double value() const { return value_; }

 private:
  std::size_t iteration_;
  double value_;
};

enum class UpdatePhase { kControlDescent, kPriceAscent };

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&, const RnnParams& control, const RnnParams& price)>
      on_epoch;
  // Called right before each gradient evaluation with the parameters it
  // uses.
  std::function<void(UpdatePhase, std::size_t iteration, const RnnParams& control,
                     const RnnParams& price)>
      on_gradient;
};

struct InitialParams {
  RnnParams control;
  RnnParams price;
};

// Glorot initialisation from the run seed's init stream.
InitialParams initial_params(std::uint64_t seed);

// Fresh N_test population and J supply paths from the eval stream of
// `epoch`, rolled under the given networks, adjoints reconstructed.
ParticleBatch evaluation_batch(const MarketModel& model, const RnnParams& control,
                               const RnnParams& price, std::size_t steps, std::size_t agents,
                               std::size_t samples, std::uint64_t seed, std::uint64_t epoch);

TrainResult train(const MarketModel& model, const TrainConfig& config, InitialParams init,
                  const TrainHooks& hooks = {});
TrainResult train(const MarketModel& model, const TrainConfig& config,
                  const TrainHooks& hooks = {});

}  // namespace mfg
