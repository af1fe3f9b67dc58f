#include "mfg/rnn_policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

namespace mfg {

const char* network_name(NetworkKind kind) {
  return kind == NetworkKind::kControl ? "control" : "price";
}

std::vector<std::size_t> control_layer_dims() { return {16, 32, 32, 32, 1}; }
std::vector<std::size_t> price_layer_dims() { return {16, 16, 16, 16, 1}; }

std::vector<std::size_t> RnnParams::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(weights.size());
  for (const auto& w : weights) dims.push_back(static_cast<std::size_t>(w.rows()));
  return dims;
}

Activation RnnParams::activation(std::size_t layer) const {
  if (layer == 0) return Activation::kTanh;
  if (layer + 1 == layers()) return Activation::kIdentity;
  return Activation::kSigmoid;
}

std::size_t RnnParams::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(recurrent.size());
  for (std::size_t l = 0; l < layers(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

std::vector<ad::Matrix> RnnParams::tensors() const {
  std::vector<ad::Matrix> out;
  out.reserve(2 * layers() + 1);
  for (std::size_t l = 0; l < layers(); ++l) {
    out.push_back(weights[l]);
    if (l == 0) out.push_back(recurrent);
    out.push_back(biases[l]);
  }
  return out;
}

void RnnParams::set_tensors(std::span<const ad::Matrix> tensors) {
  if (tensors.size() != 2 * layers() + 1) {
    throw std::invalid_argument("set_tensors: wrong tensor count");
  }
  std::size_t i = 0;
  auto assign = [&](ad::Matrix& dst) {
    const ad::Matrix& src = tensors[i++];
    if (src.rows() != dst.rows() || src.cols() != dst.cols()) {
      throw std::invalid_argument("set_tensors: tensor shape mismatch");
    }
    dst = src;
  };
  for (std::size_t l = 0; l < layers(); ++l) {
    assign(weights[l]);
    if (l == 0) assign(recurrent);
    assign(biases[l]);
  }
}

bool RnnParams::same_shape(const RnnParams& other) const {
  return kind == other.kind && input_dim == other.input_dim && layer_dims() == other.layer_dims();
}

RnnParams zero_params(NetworkKind kind, std::span<const std::size_t> dims, std::size_t input_dim) {
  if (dims.size() < 2 || input_dim == 0) {
    throw std::invalid_argument("network needs an input and at least two layers");
  }
  RnnParams p;
  p.kind = kind;
  p.input_dim = input_dim;
  std::size_t fan_in = input_dim;
  for (std::size_t out : dims) {
    if (out == 0) throw std::invalid_argument("layer width must be positive");
    p.weights.push_back(ad::Matrix::Zero(static_cast<Eigen::Index>(out),
                                         static_cast<Eigen::Index>(fan_in)));
    p.biases.push_back(ad::Matrix::Zero(static_cast<Eigen::Index>(out), 1));
    fan_in = out;
  }
  const auto hidden = static_cast<Eigen::Index>(dims.front());
  p.recurrent = ad::Matrix::Zero(hidden, hidden);
  return p;
}

RnnParams init_params(NetworkKind kind, std::span<const std::size_t> dims, std::size_t input_dim,
                      Rng& rng) {
  RnnParams p = zero_params(kind, dims, input_dim);
  auto glorot = [&rng](ad::Matrix& w) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-bound, bound);
  };
  for (std::size_t l = 0; l < p.layers(); ++l) {
    glorot(p.weights[l]);
    if (l == 0) glorot(p.recurrent);
  }
  return p;
}

RnnParams init_control_params(Rng& rng) {
  const auto dims = control_layer_dims();
  return init_params(NetworkKind::kControl, dims, kControlInputs, rng);
}

RnnParams init_price_params(Rng& rng) {
  const auto dims = price_layer_dims();
  return init_params(NetworkKind::kPrice, dims, kPriceInputs, rng);
}

std::vector<ad::Var> BoundRnn::leaves() const {
  std::vector<ad::Var> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    if (l == 0) out.push_back(recurrent);
    out.push_back(biases[l]);
  }
  return out;
}

BoundRnn bind(ad::Tape& tape, const RnnParams& params, bool trainable) {
  BoundRnn net;
  net.params = &params;
  auto place = [&](const ad::Matrix& m) {
    return trainable ? tape.parameter(m) : tape.constant(m);
  };
  for (std::size_t l = 0; l < params.layers(); ++l) {
    net.weights.push_back(place(params.weights[l]));
    if (l == 0) net.recurrent = place(params.recurrent);
    net.biases.push_back(place(params.biases[l]));
  }
  return net;
}

BoundRnn bind_leaves(const RnnParams& params, std::span<const ad::Var> leaves) {
  if (leaves.size() != 2 * params.layers() + 1) {
    throw ad::DimensionError("bind_leaves: expected one node per tensor");
  }
  BoundRnn net;
  net.params = &params;
  std::size_t next = 0;
  for (std::size_t l = 0; l < params.layers(); ++l) {
    net.weights.push_back(leaves[next++]);
    if (l == 0) net.recurrent = leaves[next++];
    net.biases.push_back(leaves[next++]);
  }
  return net;
}

CellOutput cell_step(const BoundRnn& net, ad::Var hidden, ad::Var input) {
  const RnnParams& p = *net.params;
  if (static_cast<std::size_t>(input.rows()) != p.input_dim) {
    throw ad::DimensionError(std::string(network_name(p.kind)) + " cell: expected " +
                             std::to_string(p.input_dim) + " input rows, got " +
                             std::to_string(input.rows()));
  }
  if (static_cast<std::size_t>(hidden.rows()) != p.hidden_dim() ||
      hidden.cols() != input.cols()) {
    throw ad::DimensionError("cell: hidden state does not match input batch");
  }
  ad::Var pre = ad::add(ad::matmul(net.weights[0], input), ad::matmul(net.recurrent, hidden));
  ad::Var h = ad::tanh(ad::add(pre, net.biases[0]));
  ad::Var a = h;
  for (std::size_t l = 1; l < p.layers(); ++l) {
    ad::Var z = ad::add(ad::matmul(net.weights[l], a), net.biases[l]);
    a = p.activation(l) == Activation::kSigmoid ? ad::sigmoid(z) : ad::identity(z);
  }
  return {a, h};
}

ad::Var zero_hidden(ad::Tape& tape, const RnnParams& params, std::size_t batch) {
  return tape.constant(
      ad::Matrix::Zero(static_cast<Eigen::Index>(params.hidden_dim()),
                       static_cast<Eigen::Index>(batch)));
}

std::vector<ad::Var> unroll_price(const BoundRnn& net, const SupplyPath& supply, double horizon) {
  ad::Tape& tape = *net.weights.front().tape();
  ad::Var h = zero_hidden(tape, *net.params, 1);
  std::vector<ad::Var> out;
  out.reserve(supply.q.size());
  ad::Matrix input(2, 1);
  for (std::size_t k = 0; k < supply.q.size(); ++k) {
    input(0, 0) = supply.q[k];
    input(1, 0) = supply.t[k] / horizon;
    CellOutput step = cell_step(net, h, tape.constant(input));
    h = step.hidden;
    out.push_back(step.output);
  }
  return out;
}

ControlRollout unroll_control(const BoundRnn& net, std::span<const double> t, ad::Var x0,
                              std::span<const double> price, const StateUpdate& advance) {
  if (t.size() != price.size() || t.empty()) {
    throw ad::DimensionError("unroll_control: time grid and price sequence differ in length");
  }
  if (x0.rows() != 1) throw ad::DimensionError("unroll_control: states must be a row vector");
  ad::Tape& tape = *x0.tape();
  const Eigen::Index agents = x0.cols();
  const std::size_t steps = t.size() - 1;

  ControlRollout out;
  out.states.reserve(t.size());
  out.controls.reserve(t.size());
  ad::Var h = zero_hidden(tape, *net.params, static_cast<std::size_t>(agents));
  ad::Var x = x0;
  for (std::size_t k = 0; k <= steps; ++k) {
    ad::Var time_row = tape.constant(ad::Matrix::Constant(1, agents, t[k]));
    ad::Var price_row = tape.constant(ad::Matrix::Constant(1, agents, price[k]));
    CellOutput step = cell_step(net, h, ad::concat({time_row, x, price_row}));
    h = step.hidden;
    out.states.push_back(x);
    out.controls.push_back(step.output);
    if (k < steps) x = advance(k, x, step.output);
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'M', 'F', 'G', 'P'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw CheckpointError("checkpoint truncated");
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::size_t position() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> save_params(const RnnParams& params) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  out.push_back(static_cast<std::uint8_t>(params.kind));
  out.push_back(static_cast<std::uint8_t>(params.layers()));
  std::size_t fan_in = params.input_dim;
  for (const auto& w : params.weights) {
    put_u32(out, static_cast<std::uint32_t>(fan_in));
    put_u32(out, static_cast<std::uint32_t>(w.rows()));
    fan_in = static_cast<std::size_t>(w.rows());
  }
  for (const ad::Matrix& t : params.tensors()) {
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) put_f64(out, t(i, j));
    }
  }
  return out;
}

RnnParams load_params(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  in.need(4);
  for (char c : kMagic) {
    if (in.u8() != static_cast<std::uint8_t>(c)) throw CheckpointError("bad checkpoint magic");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint8_t tag = in.u8();
  if (tag > 1) throw CheckpointError("unknown network tag " + std::to_string(tag));
  const std::uint8_t layer_count = in.u8();
  if (layer_count < 2) throw CheckpointError("checkpoint declares fewer than two layers");

  std::vector<std::size_t> dims;
  std::size_t input_dim = 0;
  std::size_t expected_in = 0;
  for (std::uint8_t l = 0; l < layer_count; ++l) {
    const std::uint32_t fan_in = in.u32();
    const std::uint32_t fan_out = in.u32();
    if (fan_in == 0 || fan_out == 0 || fan_in > (1u << 20) || fan_out > (1u << 20)) {
      throw CheckpointError("checkpoint layer dims out of range");
    }
    if (l == 0) {
      input_dim = fan_in;
    } else if (fan_in != expected_in) {
      throw CheckpointError("checkpoint layer dims do not chain");
    }
    expected_in = fan_out;
    dims.push_back(fan_out);
  }

  RnnParams p = zero_params(static_cast<NetworkKind>(tag), dims, input_dim);
  const std::size_t payload = p.parameter_count() * sizeof(double);
  if (bytes.size() != in.position() + payload) {
    throw CheckpointError("checkpoint length " + std::to_string(bytes.size()) +
                          " does not match header (expected " +
                          std::to_string(in.position() + payload) + ")");
  }
  std::vector<ad::Matrix> tensors = p.tensors();
  for (ad::Matrix& t : tensors) {
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = in.f64();
    }
  }
  p.set_tensors(tensors);
  return p;
}

}  // namespace mfg
