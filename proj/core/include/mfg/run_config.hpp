#pragma once

// Run configuration: an INI-style text file with [run], [model],
// [discretization] and [training] sections. Unknown sections or keys are
// errors. Every field has a default; the defaults reproduce the reference
// experiment (T = 1, K = 40, N = 30, J = 60, 20 epochs of 500 steps).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mfg/market_model.hpp"
#include "mfg/trainer.hpp"

namespace mfg {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  // [run]
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  // [model]
  std::string model_kind = "lq";  // lq | cosh
  double lambda_x = 1.0;
  double x_ref = 1.0;
  double lambda_t = 0.36787944117144233;
  double init_mean = -0.25;
  double init_std = 0.2;
  double horizon = 1.0;
  double q0 = 0.0;
  std::string supply = "seasonal";  // seasonal | zero
  double supply_noise = 1.0;  // multiplies the supply volatility
  std::optional<double> w0_override;

  // [discretization]
  std::size_t steps = 40;

  // [training]
  std::size_t iterations = 10000;
  std::size_t epoch_size = 500;
  std::size_t train_agents = 30;
  std::size_t test_agents = 30;
  std::size_t mc_samples = 60;
  double control_learning_rate = 1e-3;
  double price_learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double clip_norm = 10.0;

  // Throws ConfigError with a "section.key: reason" message.
  void validate() const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
// Canonical text; parse_config(to_text(c)) reproduces c exactly.
std::string to_text(const RunConfig& config);

MarketModel make_model(const RunConfig& config);
TrainConfig make_train_config(const RunConfig& config);

}  // namespace mfg
