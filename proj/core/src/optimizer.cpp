#include "mfg/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg {

AdamState AdamState::zeros_like(std::span<const ad::Matrix> params) {
  AdamState s;
  for (const ad::Matrix& p : params) {
    s.first.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
    s.second.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
  }
  return s;
}

void ascent_descent_step(std::vector<ad::Matrix>& params, std::span<const ad::Matrix> grads,
                         Direction direction, AdamState& state, const AdamConfig& config) {
  if (grads.size() != params.size() || state.first.size() != params.size()) {
    throw std::invalid_argument("ascent_descent_step: optimizer state does not match params");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const double sign = direction == Direction::kDescent ? -1.0 : 1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols()) {
      throw std::invalid_argument("ascent_descent_step: gradient shape mismatch");
    }
    ad::Matrix& m = state.first[i];
    ad::Matrix& v = state.second[i];
    m = config.beta1 * m + (1.0 - config.beta1) * grads[i];
    v = config.beta2 * v + (1.0 - config.beta2) * grads[i].cwiseAbs2();
    const auto m_hat = m.array() / c1;
    const auto v_hat = v.array() / c2;
    params[i].array() += sign * config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
  }
}

double global_norm(std::span<const ad::Matrix> tensors) {
  double sq = 0.0;
  for (const ad::Matrix& t : tensors) sq += t.squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(std::vector<ad::Matrix>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (ad::Matrix& g : grads) g *= factor;
  }
  return norm;
}

}  // namespace mfg
