#include <gtest/gtest.h>

#include "mmfp/core/convlstm.hpp"
#include "oracle_helpers.hpp"

using mmfp::ConvLSTMCell;
using mmfp::ConvLSTMState;
using mmfp::Graph;
using mmfp::Rng;
using mmfp::Tensor;

namespace {

TEST(ConvLstm, ZeroWeightsZeroStateGiveZeroOutput) {
  Rng rng(1);
  ConvLSTMCell<double> cell(2, 3, 3, rng);
  mmfp::ParamMap<double> params;
  cell.collect_params("cell", params);
  for (auto& [name, p] : params)
    for (std::int64_t i = 0; i < p.numel(); ++i) p.at(i) = 0.0;

  Graph<double> g;
  auto x = Tensor<double>::zeros({2, 4, 4});
  auto [h, state] = cell.forward(g, x, cell.initial_state(4, 4));
  for (std::int64_t i = 0; i < h.numel(); ++i) EXPECT_DOUBLE_EQ(h.at(i), 0.0);
  for (std::int64_t i = 0; i < state.cell.numel(); ++i) EXPECT_DOUBLE_EQ(state.cell.at(i), 0.0);
}

TEST(ConvLstm, OutputsStrictlyInsideUnitBall) {
  Rng rng(2);
  ConvLSTMCell<double> cell(3, 4, 3, rng);
  Graph<double> g;
  auto state = cell.initial_state(5, 5);
  for (int t = 0; t < 6; ++t) {
    auto x = Tensor<double>::zeros({3, 5, 5});
    for (std::int64_t i = 0; i < x.numel(); ++i) x.at(i) = rng.uniform(-3.0, 3.0);
    auto [h, next] = cell.forward(g, x, state);
    state = next;
    for (std::int64_t i = 0; i < h.numel(); ++i) {
      EXPECT_GT(h.at(i), -1.0);
      EXPECT_LT(h.at(i), 1.0);
    }
  }
}

TEST(ConvLstm, SpatialMismatchThrows) {
  Rng rng(3);
  ConvLSTMCell<double> cell(2, 2, 3, rng);
  Graph<double> g;
  auto x = Tensor<double>::zeros({2, 4, 4});
  auto bad = cell.initial_state(5, 5);
  EXPECT_THROW(cell.forward(g, x, bad), mmfp::DimensionError);
}

TEST(ConvLstm, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(40 + seed);
    ConvLSTMCell<double> cell(2, 2, 3, rng);
    mmfp::ParamMap<double> params;
    cell.collect_params("cell", params);

    auto x0 = Tensor<double>::zeros({2, 3, 3});
    auto x1 = Tensor<double>::zeros({2, 3, 3});
    for (std::int64_t i = 0; i < x0.numel(); ++i) x0.at(i) = rng.uniform(-1.0, 1.0);
    for (std::int64_t i = 0; i < x1.numel(); ++i) x1.at(i) = rng.uniform(-1.0, 1.0);

    // Two chained steps so gradients flow through the recurrent state.
    auto f = [&](Graph<double>& g) {
      auto s = cell.initial_state(3, 3);
      auto [h0, s1] = cell.forward(g, x0, s);
      auto [h1, s2] = cell.forward(g, x1, s1);
      (void)h0;
      (void)s2;
      return mmfp::mean_all(g, h1);
    };

    std::vector<Tensor<double>> ps;
    for (auto& [name, p] : params) ps.push_back(p);
    ps.push_back(x0);
    ps.push_back(x1);
    EXPECT_LT(oracle::gradcheck_max_rel(f, ps), 1e-4) << "seed " << seed;
  }
}

}  // namespace
