#pragma once

// Loop-based re-implementation of the adversarial loss for the
// linear-quadratic model, templated on the scalar type so that central
// differences can be taken in binary128 where double cannot resolve small
// gradient entries.

#include <quadmath.h>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mfg/market_model.hpp"
#include "mfg/rnn_policy.hpp"

namespace oracle {

using quad = __float128;

inline double tanh_of(double x) { return std::tanh(x); }
inline quad tanh_of(quad x) { return tanhq(x); }
inline double exp_of(double x) { return std::exp(x); }
inline quad exp_of(quad x) { return expq(x); }

template <typename T>
struct Net {
  std::vector<std::vector<std::vector<T>>> w;  // w[l][row][col]
  std::vector<std::vector<T>> b;
  std::vector<std::vector<T>> u;

  // Flat view in checkpoint tensor order for perturbation.
  std::vector<T*> slots;
};

template <typename T>
Net<T> convert(const mfg::RnnParams& p) {
  Net<T> net;
  for (std::size_t l = 0; l < p.layers(); ++l) {
    const auto& m = p.weights[l];
    net.w.emplace_back(m.rows(), std::vector<T>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) net.w[l][r][c] = T(m(r, c));
    net.b.emplace_back(p.biases[l].rows());
    for (Eigen::Index r = 0; r < p.biases[l].rows(); ++r) net.b[l][r] = T(p.biases[l](r, 0));
  }
  net.u.assign(p.recurrent.rows(), std::vector<T>(p.recurrent.cols()));
  for (Eigen::Index r = 0; r < p.recurrent.rows(); ++r)
    for (Eigen::Index c = 0; c < p.recurrent.cols(); ++c) net.u[r][c] = T(p.recurrent(r, c));

  // Row-major within each tensor: W1, U, b1, W2, b2, ...
  auto add_matrix = [&](std::vector<std::vector<T>>& m) {
    for (auto& row : m)
      for (auto& v : row) net.slots.push_back(&v);
  };
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    add_matrix(net.w[l]);
    if (l == 0) add_matrix(net.u);
    for (auto& v : net.b[l]) net.slots.push_back(&v);
  }
  return net;
}

// Slot index of tensor `tensor`, entry `entry` (Eigen column-major linear
// index of that tensor), in the row-major flat layout.
inline std::size_t slot_of(const mfg::RnnParams& p, std::size_t tensor, Eigen::Index entry) {
  const std::vector<mfg::ad::Matrix> tensors = p.tensors();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < tensor; ++i) offset += static_cast<std::size_t>(tensors[i].size());
  const Eigen::Index rows = tensors[tensor].rows();
  const Eigen::Index cols = tensors[tensor].cols();
  const Eigen::Index r = entry % rows;
  const Eigen::Index c = entry / rows;
  return offset + static_cast<std::size_t>(r * cols + c);
}

template <typename T>
T sigmoid(T z) {
  if (z > T(500)) z = T(500);
  if (z < T(-500)) z = T(-500);
  return T(1) / (T(1) + exp_of(-z));
}

// One recurrent step; updates the hidden state and returns the output.
template <typename T>
T step(const Net<T>& net, std::vector<T>& hidden, const std::vector<T>& input) {
  const std::size_t layers = net.w.size();
  std::vector<T> h(net.w[0].size());
  for (std::size_t r = 0; r < h.size(); ++r) {
    T z = net.b[0][r];
    for (std::size_t c = 0; c < input.size(); ++c) z += net.w[0][r][c] * input[c];
    for (std::size_t c = 0; c < hidden.size(); ++c) z += net.u[r][c] * hidden[c];
    h[r] = tanh_of(z);
  }
  hidden = h;
  std::vector<T> a = h;
  for (std::size_t l = 1; l < layers; ++l) {
    std::vector<T> next(net.w[l].size());
    for (std::size_t r = 0; r < next.size(); ++r) {
      T z = net.b[l][r];
      for (std::size_t c = 0; c < a.size(); ++c) z += net.w[l][r][c] * a[c];
      next[r] = l + 1 == layers ? z : sigmoid(z);
    }
    a = std::move(next);
  }
  return a[0];
}

template <typename T>
std::vector<T> price_sequence(const Net<T>& price, const mfg::SupplyPath& supply, double horizon) {
  std::vector<T> hidden(price.u.size(), T(0));
  std::vector<T> out;
  for (std::size_t k = 0; k < supply.q.size(); ++k) {
    out.push_back(step(price, hidden, {T(supply.q[k]), T(supply.t[k] / horizon)}));
  }
  return out;
}

// The control network reads `observed_price`; the multiplier term uses the
// price network's own output.
template <typename T>
T loss(const Net<T>& control, const Net<T>& price, const mfg::LqWeights& w,
       std::span<const double> x0, const mfg::SupplyPath& supply, double horizon,
       std::span<const double> observed_price) {
  const std::size_t steps = supply.steps();
  const std::size_t agents = x0.size();
  const T dt = T(supply.dt);
  const std::vector<T> pi = price_sequence(price, supply, horizon);

  T total = T(0);
  for (std::size_t n = 0; n < agents; ++n) {
    std::vector<T> hidden(control.u.size(), T(0));
    T x = T(x0[n]);
    T path = T(0);
    for (std::size_t k = 0; k < steps; ++k) {
      const T v = step(control, hidden, {T(supply.t[k]), x, T(observed_price[k])});
      const T dev = x - T(w.x_ref);
      path += dt * (T(0.5 * w.lambda_x) * dev * dev + T(0.5) * v * v + pi[k] * (v - T(supply.q[k])));
      x += dt * v;
    }
    const T dev = x - T(w.x_ref);
    path += T(0.5 * w.lambda_t) * dev * dev;
    total += path;
  }
  return total / T(agents);
}

}  // namespace oracle
