#pragma once

// Elman-style recurrent cell used for both the price and the control
// networks. Layer 1 takes [input; hidden] and its tanh activation is the new
// hidden state; layers 2..L-1 are sigmoid and layer L is linear. Batched
// evaluation stacks independent sequences as columns.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfg/diffgraph.hpp"
#include "mfg/market_model.hpp"
#include "mfg/rng.hpp"

namespace mfg {

enum class NetworkKind : std::uint8_t { kControl = 0, kPrice = 1 };

enum class Activation { kTanh, kSigmoid, kIdentity };

const char* network_name(NetworkKind kind);

// (t, X, price) for the control network; (Q, t/T) for the price network.
constexpr std::size_t kControlInputs = 3;
constexpr std::size_t kPriceInputs = 2;

std::vector<std::size_t> control_layer_dims();  // 16, 32, 32, 32, 1
std::vector<std::size_t> price_layer_dims();    // 16, 16, 16, 16, 1

struct RnnParams {
  NetworkKind kind = NetworkKind::kControl;
  std::size_t input_dim = 0;
  std::vector<ad::Matrix> weights;  // weights[l] is out_l x in_l
  std::vector<ad::Matrix> biases;   // biases[l] is out_l x 1
  ad::Matrix recurrent;             // hidden x hidden

  std::size_t layers() const { return weights.size(); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(recurrent.rows()); }
  std::vector<std::size_t> layer_dims() const;
  Activation activation(std::size_t layer) const;
  std::size_t parameter_count() const;

  // Checkpoint order: W1, U, b1, W2, b2, ..., WL, bL.
  std::vector<ad::Matrix> tensors() const;
  void set_tensors(std::span<const ad::Matrix> tensors);
  bool same_shape(const RnnParams& other) const;
};

// Glorot-uniform weights, zero biases. U uses fan_in = fan_out = hidden dim.
RnnParams init_params(NetworkKind kind, std::span<const std::size_t> dims, std::size_t input_dim,
                      Rng& rng);
RnnParams init_control_params(Rng& rng);
RnnParams init_price_params(Rng& rng);
// Same shape with every entry zero.
RnnParams zero_params(NetworkKind kind, std::span<const std::size_t> dims, std::size_t input_dim);

// Network parameters placed on a tape, in tensors() order.
struct BoundRnn {
  const RnnParams* params = nullptr;
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
  ad::Var recurrent;

  std::vector<ad::Var> leaves() const;
};

// Registers parameters as differentiable leaves (trainable = true) or as
// constants.
BoundRnn bind(ad::Tape& tape, const RnnParams& params, bool trainable);

// Wraps existing tape nodes, given in tensors() order, as a network.
BoundRnn bind_leaves(const RnnParams& params, std::span<const ad::Var> leaves);

struct CellOutput {
  ad::Var output;  // 1 x batch
  ad::Var hidden;  // hidden_dim x batch
};

// input is input_dim x batch, hidden is hidden_dim x batch.
CellOutput cell_step(const BoundRnn& net, ad::Var hidden, ad::Var input);

ad::Var zero_hidden(ad::Tape& tape, const RnnParams& params, std::size_t batch);

// Price sequence over the supply grid; element k is 1x1 and depends on
// (Q, t) at steps 0..k only.
std::vector<ad::Var> unroll_price(const BoundRnn& net, const SupplyPath& supply, double horizon);

// Advances the state after the control at step k has been emitted. Receives
// (k, X^k, v^k) and returns X^{k+1}.
using StateUpdate = std::function<ad::Var(std::size_t, ad::Var, ad::Var)>;

struct ControlRollout {
  std::vector<ad::Var> states;    // K + 1 nodes, 1 x N
  std::vector<ad::Var> controls;  // K + 1 nodes, 1 x N
};

// One hidden state per agent (column), shared weights. price holds the
// K + 1 observed price values and enters the cell as data.
ControlRollout unroll_control(const BoundRnn& net, std::span<const double> t, ad::Var x0,
                              std::span<const double> price, const StateUpdate& advance);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::uint32_t kCheckpointVersion = 1;

// "MFGP", u32 version, u8 network tag, u8 layer count, per layer u32 input
// and u32 output dims, then every tensor as little-endian f64, row-major.
std::vector<std::uint8_t> save_params(const RnnParams& params);
RnnParams load_params(std::span<const std::uint8_t> bytes);

}  // namespace mfg
