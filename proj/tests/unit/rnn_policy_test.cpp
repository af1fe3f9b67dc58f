#include "mfg/rnn_policy.hpp"

#include <gtest/gtest.h>

#include <cstring>

namespace {

using namespace mfg;
using ad::Matrix;

RnnParams control_net(std::uint64_t seed = 1) {
  Rng rng(seed);
  return init_control_params(rng);
}

RnnParams price_net(std::uint64_t seed = 2) {
  Rng rng(seed);
  return init_price_params(rng);
}

SupplyPath ramp_supply(std::size_t steps) {
  SupplyPath s;
  s.dt = 1.0 / static_cast<double>(steps);
  for (std::size_t k = 0; k <= steps; ++k) {
    s.t.push_back(static_cast<double>(k) * s.dt);
    s.q.push_back(0.1 * static_cast<double>(k));
  }
  s.dw.assign(steps, 0.0);
  return s;
}

TEST(RnnPolicy, ParameterCounts) {
  // 16x3 + 16x16 + 16 + 32x16 + 32 + 32x32 + 32 + 32x32 + 32 + 1x32 + 1
  EXPECT_EQ(control_net().parameter_count(), 3009u);
  // 16x2 + 16x16 + 16 + 3 x (16x16 + 16) + 1x16 + 1
  EXPECT_EQ(price_net().parameter_count(), 1137u);
  EXPECT_EQ(control_net().layers(), 5u);
  EXPECT_EQ(control_net().hidden_dim(), 16u);
}

TEST(RnnPolicy, ActivationsPerLayer) {
  const RnnParams p = control_net();
  EXPECT_EQ(p.activation(0), Activation::kTanh);
  EXPECT_EQ(p.activation(1), Activation::kSigmoid);
  EXPECT_EQ(p.activation(3), Activation::kSigmoid);
  EXPECT_EQ(p.activation(4), Activation::kIdentity);
}

TEST(RnnPolicy, GlorotBoundsAndZeroBiases) {
  const RnnParams p = control_net();
  for (std::size_t l = 0; l < p.layers(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(p.weights[l].rows() + p.weights[l].cols()));
    EXPECT_LE(p.weights[l].cwiseAbs().maxCoeff(), limit);
    EXPECT_TRUE(p.biases[l].isZero());
  }
  EXPECT_LE(p.recurrent.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 32.0));
}

TEST(RnnPolicy, ZeroNetworkOutputsZero) {
  const RnnParams zero = zero_params(NetworkKind::kPrice, price_layer_dims(), kPriceInputs);
  ad::Tape tape;
  BoundRnn net = bind(tape, zero, false);
  for (const ad::Var& p : unroll_price(net, ramp_supply(5), 1.0)) EXPECT_EQ(p.scalar(), 0.0);
}

TEST(RnnPolicy, TensorsRoundTrip) {
  RnnParams p = control_net();
  RnnParams q = zero_params(NetworkKind::kControl, control_layer_dims(), kControlInputs);
  q.set_tensors(p.tensors());
  EXPECT_EQ(save_params(p), save_params(q));
  EXPECT_TRUE(p.same_shape(q));
  EXPECT_FALSE(p.same_shape(price_net()));
}

TEST(RnnPolicy, CheckpointRoundTripIsBitExact) {
  for (const RnnParams& p : {control_net(), price_net()}) {
    const auto bytes = save_params(p);
    const RnnParams back = load_params(bytes);
    EXPECT_EQ(back.kind, p.kind);
    EXPECT_EQ(save_params(back), bytes);
    for (std::size_t l = 0; l < p.layers(); ++l) {
      EXPECT_TRUE((back.weights[l].array() == p.weights[l].array()).all());
    }
  }
}

TEST(RnnPolicy, CheckpointLayout) {
  const auto bytes = save_params(price_net());
  ASSERT_GE(bytes.size(), 10u);
  EXPECT_EQ(std::memcmp(bytes.data(), "MFGP", 4), 0);
  EXPECT_EQ(bytes[4], 1);  // version, little endian
  EXPECT_EQ(bytes[8], 1);  // price tag
  EXPECT_EQ(bytes[9], 5);  // layers
  EXPECT_EQ(bytes.size(), 10u + 5 * 8 + 1137 * 8);
}

TEST(RnnPolicy, CorruptCheckpointsAreRejected) {
  const auto good = save_params(control_net());
  auto truncated = good;
  truncated.pop_back();
  EXPECT_THROW(load_params(truncated), CheckpointError);
  auto extended = good;
  extended.push_back(0);
  EXPECT_THROW(load_params(extended), CheckpointError);
  auto magic = good;
  magic[0] = 'X';
  EXPECT_THROW(load_params(magic), CheckpointError);
  auto version = good;
  version[4] = 2;
  EXPECT_THROW(load_params(version), CheckpointError);
  auto tag = good;
  tag[8] = 7;
  EXPECT_THROW(load_params(tag), CheckpointError);
  auto dims = good;
  dims[14] = 99;  // first layer output dim
  EXPECT_THROW(load_params(dims), CheckpointError);
  EXPECT_THROW(load_params(std::vector<std::uint8_t>{}), CheckpointError);
}

// Price at step k must not depend on supply values after k.
TEST(RnnPolicy, PriceIsNonAnticipating) {
  const RnnParams p = price_net();
  const SupplyPath base = ramp_supply(12);
  ad::Tape tape;
  const auto ref = unroll_price(bind(tape, p, false), base, 1.0);
  for (std::size_t k = 0; k < 12; ++k) {
    SupplyPath changed = base;
    for (std::size_t j = k + 1; j <= 12; ++j) changed.q[j] += 5.0;
    ad::Tape other;
    const auto out = unroll_price(bind(other, p, false), changed, 1.0);
    for (std::size_t j = 0; j <= k; ++j) EXPECT_EQ(out[j].scalar(), ref[j].scalar());
    EXPECT_NE(out[k + 1].scalar(), ref[k + 1].scalar());
  }
}

// Batched agents are independent columns.
TEST(RnnPolicy, BatchColumnsAreIndependent) {
  const RnnParams p = control_net();
  const std::vector<double> t = {0.0, 0.5, 1.0};
  const std::vector<double> price = {0.2, 0.1, -0.3};
  auto identity_update = [](std::size_t, ad::Var x, ad::Var v) { return ad::add(x, ad::scale(v, 0.5)); };

  ad::Tape tape;
  Matrix x0(1, 2);
  x0 << -0.3, 0.4;
  const auto batch = unroll_control(bind(tape, p, false), t, tape.constant(x0), price, identity_update);
  for (int n = 0; n < 2; ++n) {
    ad::Tape single;
    const auto one = unroll_control(bind(single, p, false), t,
                                    single.constant(Matrix::Constant(1, 1, x0(0, n))), price,
                                    identity_update);
    for (std::size_t k = 0; k < t.size(); ++k) {
      EXPECT_DOUBLE_EQ(one.controls[k].value()(0, 0), batch.controls[k].value()(0, n));
    }
  }
}

TEST(RnnPolicy, WrongInputWidthIsRejected) {
  const RnnParams p = control_net();
  ad::Tape tape;
  BoundRnn net = bind(tape, p, false);
  EXPECT_THROW(cell_step(net, zero_hidden(tape, p, 1), tape.constant(Matrix::Zero(2, 1))),
               ad::DimensionError);
}

TEST(RnnPolicy, BindLeavesChecksCount) {
  const RnnParams p = price_net();
  ad::Tape tape;
  std::vector<ad::Var> leaves = {tape.parameter(Matrix::Zero(1, 1))};
  EXPECT_THROW(bind_leaves(p, leaves), ad::DimensionError);
}

}  // namespace
