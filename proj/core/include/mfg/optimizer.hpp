#pragma once

#include <span>
#include <vector>

#include "mfg/diffgraph.hpp"

namespace mfg {

enum class Direction { kDescent, kAscent };

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive moment estimates for one tensor list.
struct AdamState {
  std::vector<ad::Matrix> first;
  std::vector<ad::Matrix> second;
  long step = 0;

  static AdamState zeros_like(std::span<const ad::Matrix> params);
};

// One bias-corrected Adam update in place. Descent subtracts the step,
// ascent adds it.
void ascent_descent_step(std::vector<ad::Matrix>& params, std::span<const ad::Matrix> grads,
                         Direction direction, AdamState& state, const AdamConfig& config);

double global_norm(std::span<const ad::Matrix> tensors);

// Rescales grads to max_norm when their global norm exceeds it. Returns the
// norm before clipping.
double clip_global_norm(std::vector<ad::Matrix>& grads, double max_norm);

}  // namespace mfg
