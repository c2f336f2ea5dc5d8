// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "grad_check.hpp"
#include "reference.hpp"
#include "scriptnet/errors.hpp"
#include "scriptnet/layers.hpp"

namespace scriptnet::testing {
namespace {

using ad::Tape;
using ad::Tensor;

void expect_close(const std::vector<double>& got, const std::vector<double>& want, double tol = kOracleTol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], tol * std::max(1.0, std::abs(want[i]))) << "index " << i;
  }
}

RefLstm to_ref(const nn::LSTMCell& cell) {
  RefLstm ref;
  ref.hidden = cell.hidden();
  ref.in = cell.input_dim();
  for (std::size_t g = 0; g < 4; ++g) {
    ref.w[g] = values(cell.input[g]);
    ref.u[g] = values(cell.recurrent[g]);
    ref.b[g] = values(cell.bias[g]);
  }
  return ref;
}

nn::LSTMCell random_cell(std::size_t in, std::size_t hidden, Rng& rng) {
  nn::LSTMCell cell;
  for (std::size_t g = 0; g < 4; ++g) {
    cell.input[g] = random_leaf({hidden, in}, rng);
    cell.recurrent[g] = random_leaf({hidden, hidden}, rng);
    cell.bias[g] = random_leaf({hidden}, rng);
  }
  return cell;
}

// --- embedding -------------------------------------------------------------

TEST(Embedding, LooksUpRows) {
  Rng rng(1);
  nn::EmbeddingLayer layer = nn::EmbeddingLayer::create(prep::kVocabSize, 4, rng);
  Tape tape;
  const prep::Token ids[] = {65};
  auto row = values(layer.forward(tape, ids));
  for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(row[d], layer.table().data()[65 * 4 + d]);
}

TEST(Embedding, RepeatedTokenDoublesGradient) {
  Rng rng(2);
  nn::EmbeddingLayer layer = nn::EmbeddingLayer::create(prep::kVocabSize, 3, rng);
  Tape tape;
  const prep::Token ids[] = {7, 7};
  Tensor out = layer.forward(tape, ids);
  auto v = values(out);
  EXPECT_EQ(std::vector<double>(v.begin(), v.begin() + 3), std::vector<double>(v.begin() + 3, v.end()));
  tape.backward(ad::sum(tape, out));
  Tensor table = layer.table();
  auto g = table.grad();
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], (i / 3 == 7) ? Scalar(2) : Scalar(0));
}

TEST(Embedding, OutOfRangeIdIsIndexError) {
  Rng rng(3);
  nn::EmbeddingLayer layer = nn::EmbeddingLayer::create(prep::kVocabSize, 3, rng);
  Tape tape;
  const prep::Token ids[] = {257};
  EXPECT_THROW(layer.forward(tape, ids), IndexError);
}

// --- conv ------------------------------------------------------------------

TEST(Conv1d, DefaultChunkOutLength) {
  Rng rng(4);
  nn::Conv1DLayer layer = nn::Conv1DLayer::create(100, 100, 10, 5, rng);
  EXPECT_EQ(layer.out_len(200), 39u);
}

TEST(Conv1d, OnesFilter) {
  nn::Conv1DLayer layer(make({1, 2, 1}, {1, 1}), make({1}, {0}), 1);
  Tape tape;
  EXPECT_EQ(values(layer.forward(tape, make({3, 1}, {1, 2, 3}))), (std::vector<double>{3, 5}));
}

TEST(Conv1d, ShortInputIsDimensionError) {
  nn::Conv1DLayer layer(make({1, 4, 1}, {1, 1, 1, 1}), make({1}, {0}), 1);
  Tape tape;
  EXPECT_THROW(layer.forward(tape, make({3, 1}, {1, 2, 3})), DimensionError);
}

TEST(OracleConv1d, MatchesNestedLoops) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t in = 1 + rng.below(4), nf = 1 + rng.below(4), win = 1 + rng.below(5);
    const std::size_t stride = 1 + rng.below(3), len = win + rng.below(12);
    Tensor x = random_leaf({len, in}, rng), f = random_leaf({nf, win, in}, rng), b = random_leaf({nf}, rng);
    Tape tape;
    Tensor y = nn::conv1d(tape, x, f, b, stride);
    // Same accumulation order in the library's precision: bit-identical.
    auto same = ref_conv1d(as<Scalar>(x.data()), len, in, as<Scalar>(f.data()), nf, win, as<Scalar>(b.data()), stride);
    EXPECT_TRUE(std::equal(same.begin(), same.end(), y.data().begin(), y.data().end()));
    expect_close(values(y), ref_conv1d(values(x), len, in, values(f), nf, win, values(b), stride));
  }
}

TEST(Conv1d, GroupedEqualsPerGroup) {
  Rng rng(6);
  Tensor x = random_leaf({3, 9, 2}, rng), f = random_leaf({4, 3, 2}, rng), b = random_leaf({4}, rng);
  Tape tape;
  auto all = values(nn::conv1d(tape, x, f, b, 2));
  std::vector<double> joined;
  for (std::size_t g = 0; g < 3; ++g) {
    Tensor xg = ad::reshape(tape, ad::slice_rows(tape, x, g, g + 1), {9, 2});
    auto part = values(nn::conv1d(tape, xg, f, b, 2));
    joined.insert(joined.end(), part.begin(), part.end());
  }
  EXPECT_EQ(all, joined);
}

TEST(Conv1d, TableConvMatchesGatheredConv) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t vocab = 12, dim = 3, nf = 4, win = 3, stride = 2, groups = 3, run = 11;
    Tensor table = random_leaf({vocab, dim}, rng), f = random_leaf({nf, win, dim}, rng), b = random_leaf({nf}, rng);
    std::vector<prep::Token> ids(groups * run);
    for (auto& t : ids) t = static_cast<prep::Token>(rng.below(vocab));
    Tape tape;
    Tensor fused = nn::table_conv1d(tape, nn::token_conv_table(tape, table, f), b, ids, groups, run, stride);
    Tensor direct = nn::conv1d(tape, ad::reshape(tape, ad::gather_rows(tape, table, ids), {groups, run, dim}), f, b,
                               stride);
    EXPECT_EQ(fused.shape(), direct.shape());
    expect_close(values(fused), values(direct), kDoublePrecision ? 1e-12 : 1e-5);
  }
}

// --- max pooling -----------------------------------------------------------

TEST(Maxpool, Values) {
  Tape tape;
  EXPECT_EQ(values(nn::maxpool_time(tape, make({2, 2}, {1, 4, 3, 2}))), (std::vector<double>{3, 4}));
  EXPECT_EQ(values(nn::maxpool_time(tape, make({1, 3}, {5, -1, 2}))), (std::vector<double>{5, -1, 2}));
}

TEST(Maxpool, TiesRouteToFirstRow) {
  Tensor x = make({2, 2}, {2, 2, 2, 2}, true);
  Tape tape;
  tape.backward(ad::sum(tape, nn::maxpool_time(tape, x)));
  EXPECT_EQ(values(Tensor({4}, {x.grad().begin(), x.grad().end()})), (std::vector<double>{1, 1, 0, 0}));
}

TEST(Maxpool, ConvThenPoolGivesFilterCount) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t win = 1 + rng.below(6), stride = 1 + rng.below(4), len = win + rng.below(30);
    const std::size_t nf = 1 + rng.below(5);
    nn::Conv1DLayer layer(random_leaf({nf, win, 2}, rng), random_leaf({nf}, rng), stride);
    Tape tape;
    Tensor y = layer.forward(tape, random_leaf({len, 2}, rng));
    EXPECT_EQ(y.dim(0), (len - win) / stride + 1);
    EXPECT_EQ(nn::maxpool_time(tape, y).shape(), (ad::Shape{nf}));
  }
}

// --- LSTM ------------------------------------------------------------------

TEST(Lstm, ZeroWeightsGiveZeroStates) {
  nn::LSTMCell cell;
  for (std::size_t g = 0; g < 4; ++g) {
    cell.input[g] = Tensor::zeros({3, 2}, true);
    cell.recurrent[g] = Tensor::zeros({3, 3}, true);
    cell.bias[g] = Tensor::zeros({3}, true);
  }
  nn::LSTMLayer layer({{cell}});
  Rng rng(9);
  Tape tape;
  for (double v : values(layer.forward(tape, random_leaf({5, 2}, rng)))) EXPECT_EQ(v, 0.0);
}

TEST(OracleLstm, SingleScalarStep) {
  // H = 1, in = 1, one step: gates by hand.
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    nn::LSTMCell cell = random_cell(1, 1, rng);
    const double x = rng.uniform(-2, 2);
    auto gate = [&](std::size_t g) {
      return static_cast<double>(cell.input[g].data()[0]) * static_cast<double>(static_cast<Scalar>(x)) +
             static_cast<double>(cell.bias[g].data()[0]);
    };
    const double i = ref_sigmoid(gate(0)), o = ref_sigmoid(gate(2)), cand = std::tanh(gate(3));
    const double want = o * std::tanh(i * cand);
    Tape tape;
    Tensor h = nn::lstm_scan(tape, cell, make({1, 1}, {x}), 1, 1, false);
    EXPECT_NEAR(h.item(), want, kOracleTol);
  }
}

TEST(OracleLstm, SequenceMatchesScalarRecurrence) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t in = 1 + rng.below(3), hidden = 1 + rng.below(3), n = 1 + rng.below(6);
    nn::LSTMCell cell = random_cell(in, hidden, rng);
    Tensor x = random_leaf({n, in}, rng);
    Tape tape;
    expect_close(values(nn::lstm_scan(tape, cell, x, n, 1, false)), to_ref(cell).run(values(x), n));
  }
}

TEST(Lstm, BatchedScanMatchesPerItem) {
  Rng rng(12);
  nn::LSTMCell cell = random_cell(2, 3, rng);
  const std::size_t steps = 4, batch = 3;
  Tensor x = random_leaf({steps * batch, 2}, rng);
  Tape tape;
  for (bool reverse : {false, true}) {
    auto all = values(nn::lstm_scan(tape, cell, x, steps, batch, reverse));
    for (std::size_t b = 0; b < batch; ++b) {
      std::vector<double> xs;
      for (std::size_t t = 0; t < steps; ++t) {
        xs.push_back(x.data()[(t * batch + b) * 2]);
        xs.push_back(x.data()[(t * batch + b) * 2 + 1]);
      }
      auto want = to_ref(cell).run(xs, steps, reverse);
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < 3; ++j) {
          EXPECT_NEAR(all[(t * batch + b) * 3 + j], want[t * 3 + j], kOracleTol);
        }
      }
    }
  }
}

TEST(Lstm, ReversedInputMatchesBackwardHalf) {
  Rng rng(13);
  nn::LSTMCell fwd = random_cell(2, 2, rng), bwd = random_cell(2, 2, rng);
  nn::LSTMLayer bi({{fwd, bwd}});
  nn::LSTMLayer single({{bwd}});
  const std::size_t n = 5;
  Tensor x = random_leaf({n, 2}, rng);
  std::vector<double> rev;
  for (std::size_t t = n; t-- > 0;) {
    rev.push_back(x.data()[t * 2]);
    rev.push_back(x.data()[t * 2 + 1]);
  }
  Tape tape;
  auto both = values(bi.forward(tape, x));
  auto on_reversed = values(single.forward(tape, make({n, 2}, rev)));
  EXPECT_EQ(bi.output_dim(), 4u);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(both[t * 4 + 2 + j], on_reversed[(n - 1 - t) * 2 + j]);
  }
}

TEST(Lstm, StackedFeedsUpward) {
  Rng rng(14);
  nn::LSTMCell first = random_cell(2, 3, rng), second = random_cell(3, 3, rng);
  nn::LSTMLayer stacked({{first}, {second}});
  Tensor x = random_leaf({4, 2}, rng);
  Tape tape;
  auto lower = to_ref(first).run(values(x), 4);
  expect_close(values(stacked.forward(tape, x)), to_ref(second).run(lower, 4));
}

TEST(Lstm, InitHasUnitForgetBias) {
  Rng rng(15);
  nn::LSTMCell cell = nn::make_lstm_cell(4, 3, rng);
  for (std::size_t g = 0; g < 4; ++g) {
    const double want = g == static_cast<std::size_t>(nn::Gate::kForget) ? 1.0 : 0.0;
    for (double v : values(cell.bias[g])) EXPECT_EQ(v, want);
  }
  const double limit = std::sqrt(6.0 / 7.0);
  for (double v : values(cell.input[0])) EXPECT_LE(std::abs(v), limit);
}

// --- dense -----------------------------------------------------------------

TEST(Dense, IdentityAndHandValue) {
  Tape tape;
  nn::DenseLayer eye(make({2, 2}, {1, 0, 0, 1}), make({2}, {0, 0}), nn::Activation::kNone);
  EXPECT_EQ(values(eye.forward(tape, make({2}, {3, -4}))), (std::vector<double>{3, -4}));
  nn::DenseLayer unit(make({1, 2}, {1, 1}), make({1}, {-1}), nn::Activation::kSigmoid);
  EXPECT_EQ(unit.forward(tape, make({2}, {0.5, 0.5})).item(), Scalar(0.5));
  EXPECT_THROW(unit.forward(tape, make({3}, {1, 2, 3})), DimensionError);
}

TEST(OracleDense, MatchesLoop) {
  Rng rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t in = 1 + rng.below(6), out = 1 + rng.below(6);
    const auto act = static_cast<nn::Activation>(rng.below(3));
    nn::DenseLayer layer(random_leaf({out, in}, rng), random_leaf({out}, rng), act);
    Tensor x = random_leaf({in}, rng);
    Tape tape;
    auto want = ref_dense(values(layer.weights()), values(layer.bias()), values(x), static_cast<RefActivation>(act));
    expect_close(values(layer.forward(tape, x)), want);
  }
}

TEST(Dense, BatchRowsMatchSingleVectors) {
  Rng rng(17);
  nn::DenseLayer layer(random_leaf({3, 4}, rng), random_leaf({3}, rng), nn::Activation::kRelu);
  Tensor x = random_leaf({5, 4}, rng);
  Tape tape;
  auto all = values(layer.forward(tape, x));
  for (std::size_t r = 0; r < 5; ++r) {
    auto one = values(layer.forward(tape, ad::reshape(tape, ad::slice_rows(tape, x, r, r + 1), {4})));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(all[r * 3 + j], one[j]);
  }
}

// --- dropout ---------------------------------------------------------------

TEST(Dropout, InferenceAndZeroRateAreIdentity) {
  Rng rng(18);
  Tensor x = random_leaf({4, 4}, rng);
  Tape tape;
  EXPECT_EQ(nn::DropoutLayer(0.5).forward(tape, x, false, nullptr).id(), x.id());
  Rng r(1);
  EXPECT_EQ(values(nn::DropoutLayer(0.0).forward(tape, x, true, &r)), values(x));
}

TEST(Dropout, RateMustBeBelowOne) {
  EXPECT_THROW(nn::DropoutLayer(1.0), ConfigError);
  EXPECT_THROW(nn::DropoutLayer(-0.1), ConfigError);
}

TEST(Dropout, SurvivorFractionAndMean) {
  const std::size_t n = 100000;
  Tensor x = Tensor::filled({n}, Scalar(1));
  Rng rng(19);
  Tape tape;
  auto y = values(nn::DropoutLayer(0.5).forward(tape, x, true, &rng));
  std::size_t kept = 0;
  double total = 0.0;
  for (double v : y) {
    if (v != 0.0) {
      ++kept;
      EXPECT_EQ(v, 2.0);
    }
    total += v;
  }
  EXPECT_NEAR(static_cast<double>(kept) / n, 0.5, 0.01);
  EXPECT_NEAR(total / n, 1.0, 0.02);
}

}  // namespace
}  // namespace scriptnet::testing
