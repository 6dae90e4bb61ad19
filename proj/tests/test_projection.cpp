// Copyright 2026 The lgadecode Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lga/projection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "lga/error.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace lga {
namespace {

// Two-class dump, d = 2, identity head.
ModelDump two_by_two(std::size_t layers = 2) {
  Vocabulary v;
  v.tokens = {"<pad>", "|"};
  return testing::blank_dump(layers, 1, v);
}

LogitsMatrix row_logits(std::vector<double> row, Provenance p) {
  LogitsMatrix m(1, row.size());
  m.values = std::move(row);
  m.provenance = p;
  return m;
}

TEST(ProjectTest, IdentityHead) {
  ModelDump d = two_by_two(1);
  testing::set_hidden(d, 1, 0, {3, 4});
  const auto out = project(d, 1);
  EXPECT_EQ(out.provenance, Provenance::kBaseline);
  EXPECT_DOUBLE_EQ(out.at(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(out.at(0, 1), 4.0);
}

TEST(ProjectTest, ZeroInputExposesBias) {
  ModelDump d = two_by_two(1);
  d.head.bias.data = {1.0f, -1.0f};
  const auto out = project(d, 1);
  EXPECT_DOUBLE_EQ(out.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out.at(0, 1), -1.0);
}

TEST(ProjectTest, MatchesDenseMultiplyOracle) {
  ModelDump d = two_by_two(1);
  d.head.weight.data = {1, 1, 0, 2};
  testing::set_hidden(d, 1, 0, {2, 3});
  const auto expected = oracle::dense({{1, 1}, {0, 2}}, {2, 3}, {0, 0});
  ASSERT_EQ(expected, (std::vector<double>{5, 6}));
  const auto out = project(d, 1);
  EXPECT_DOUBLE_EQ(out.at(0, 0), expected[0]);
  EXPECT_DOUBLE_EQ(out.at(0, 1), expected[1]);

  std::mt19937 rng(7);
  const ModelDump r = testing::random_dump(rng, 3, 4, 6, 5, false);
  for (std::size_t layer = 0; layer <= 3; ++layer) {
    const auto got = project(r, layer);
    EXPECT_EQ(got.provenance, layer == 3 ? Provenance::kBaseline : Provenance::kIntermediate);
    std::vector<std::vector<double>> w(5, std::vector<double>(6));
    for (std::size_t c = 0; c < 5; ++c)
      for (std::size_t k = 0; k < 6; ++k) w[c][k] = r.head.weight.data[c * 6 + k];
    std::vector<double> b(r.head.bias.data.begin(), r.head.bias.data.end());
    for (std::size_t t = 0; t < 4; ++t) {
      const auto h = r.hidden(layer, t);
      const auto y = oracle::dense(w, std::vector<double>(h.begin(), h.end()), b);
      for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(got.at(t, c), y[c], 1e-12);
    }
  }
}

TEST(ProjectTest, LayerOutOfRange) {
  EXPECT_THROW(project(two_by_two(2), 3), ArgumentError);
}

TEST(AggregateTest, SingleLayerIsNormalized) {
  ModelDump d = two_by_two(2);
  testing::set_hidden(d, 2, 0, {3, 4});
  const double n = oracle::norm2({3, 4});
  ASSERT_DOUBLE_EQ(n, 5.0);
  const auto out = aggregate_logits(d, 1);
  EXPECT_EQ(out.provenance, Provenance::kAggregated);
  EXPECT_EQ(out.agg_layers, 1u);
  EXPECT_DOUBLE_EQ(out.at(0, 0), 3.0 / n);
  EXPECT_DOUBLE_EQ(out.at(0, 1), 4.0 / n);
}

TEST(AggregateTest, SumsTopLayers) {
  ModelDump d = two_by_two(2);
  testing::set_hidden(d, 1, 0, {3, 4});
  testing::set_hidden(d, 2, 0, {1, 0});
  auto out = aggregate_logits(d, 2);
  EXPECT_NEAR(out.at(0, 0), 1.6, 1e-15);
  EXPECT_NEAR(out.at(0, 1), 0.8, 1e-15);

  // Bias enters once per aggregated layer.
  d.head.bias.data = {1.0f, 0.0f};
  out = aggregate_logits(d, 2);
  EXPECT_NEAR(out.at(0, 0), 3.6, 1e-15);
  EXPECT_NEAR(out.at(0, 1), 0.8, 1e-15);
}

TEST(AggregateTest, ExcludesLayerZeroAndLowerLayers) {
  ModelDump d = two_by_two(2);
  testing::set_hidden(d, 0, 0, {100, 0});
  testing::set_hidden(d, 1, 0, {0, 7});
  testing::set_hidden(d, 2, 0, {0, 2});
  const auto top = aggregate_logits(d, 1);
  EXPECT_DOUBLE_EQ(top.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(top.at(0, 1), 1.0);
  const auto both = aggregate_logits(d, 2);
  EXPECT_DOUBLE_EQ(both.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(both.at(0, 1), 2.0);
}

TEST(AggregateTest, ZeroVectorPassesThrough) {
  ModelDump d = two_by_two(2);
  d.head.bias.data = {0.5f, -0.5f};
  const auto out = aggregate_logits(d, 2);
  EXPECT_DOUBLE_EQ(out.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out.at(0, 1), -1.0);
  for (double v : out.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(AggregateTest, CountOutOfRange) {
  EXPECT_THROW(aggregate_logits(two_by_two(2), 0), ArgumentError);
  EXPECT_THROW(aggregate_logits(two_by_two(2), 3), ArgumentError);
}

TEST(AggregateTest, LogitsVariantNormalizesProjectedVectors) {
  ModelDump d = two_by_two(1);
  d.head.weight.data = {2, 0, 0, 1};
  testing::set_hidden(d, 1, 0, {3, 4});
  // head(h) = (6, 4); normalized by sqrt(52).
  const auto out = aggregate_logits(d, 1, AggregationNorm::kLogits);
  EXPECT_NEAR(out.at(0, 0), 6.0 / std::sqrt(52.0), 1e-15);
  EXPECT_NEAR(out.at(0, 1), 4.0 / std::sqrt(52.0), 1e-15);
}

TEST(AggregateTest, MatchesProjectionWhenTopLayerHasUnitNorm) {
  ModelDump d = two_by_two(1);
  d.head.weight.data = {2, -1, 0.5, 3};
  testing::set_hidden(d, 1, 0, {1.0f, 0.0f});
  EXPECT_EQ(aggregate_logits(d, 1).values, project(d, 1).values);
}

TEST(InterpolateTest, Endpoints) {
  const auto base = row_logits({2, -0.0}, Provenance::kBaseline);
  const auto agg = row_logits({0, 2}, Provenance::kAggregated);
  const auto one = interpolate(base, agg, 1.0);
  EXPECT_EQ(one.provenance, Provenance::kInterpolated);
  EXPECT_EQ(one.beta, 1.0);
  EXPECT_EQ(std::memcmp(one.values.data(), base.values.data(), 2 * sizeof(double)), 0);
  const auto zero = interpolate(base, agg, 0.0);
  EXPECT_EQ(zero.values, agg.values);
}

TEST(InterpolateTest, TypicalBaseCoefficient) {
  const auto out = interpolate(row_logits({2, 0}, Provenance::kBaseline), row_logits({0, 2}, Provenance::kAggregated),
                               0.75);
  EXPECT_DOUBLE_EQ(out.at(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(out.at(0, 1), 0.5);
}

TEST(InterpolateTest, Errors) {
  const auto base = row_logits({2, 0}, Provenance::kBaseline);
  const auto agg = row_logits({0, 2}, Provenance::kAggregated);
  EXPECT_THROW(interpolate(base, agg, 1.5), ArgumentError);
  EXPECT_THROW(interpolate(base, agg, -0.1), ArgumentError);
  EXPECT_THROW(interpolate(base, row_logits({0, 2, 1}, Provenance::kAggregated), 0.5), ArgumentError);
  EXPECT_THROW(interpolate(agg, base, 0.5), ArgumentError);
}

TEST(TemperatureTest, Basics) {
  const auto row = row_logits({2, 4}, Provenance::kBaseline);
  EXPECT_EQ(temperature_scale(row, 1.0).values, row.values);
  const auto half = temperature_scale(row, 2.0);
  EXPECT_EQ(half.provenance, Provenance::kTemperatureScaled);
  EXPECT_DOUBLE_EQ(half.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(half.at(0, 1), 2.0);
  EXPECT_THROW(temperature_scale(row, 0.0), ArgumentError);
  EXPECT_THROW(temperature_scale(row, -1.0), ArgumentError);
}

TEST(TemperatureTest, LargeTemperatureFlattens) {
  const auto scaled = temperature_scale(row_logits({2, 4}, Provenance::kBaseline), 1e4);
  const auto p = oracle::softmax({scaled.at(0, 0), scaled.at(0, 1)});
  EXPECT_NEAR(p[0], 0.5, 1e-3);
  EXPECT_NEAR(p[1], 0.5, 1e-3);
}

TEST(LogSoftmaxTest, Examples) {
  auto out = log_softmax(row_logits({0, 0}, Provenance::kBaseline));
  EXPECT_DOUBLE_EQ(out.at(0, 0), -std::log(2.0));
  EXPECT_DOUBLE_EQ(out.at(0, 1), -std::log(2.0));
  out = log_softmax(row_logits({1000, 1000}, Provenance::kBaseline));
  EXPECT_DOUBLE_EQ(out.at(0, 0), -std::log(2.0));
  out = log_softmax(row_logits({0, std::log(3.0)}, Provenance::kBaseline));
  EXPECT_NEAR(out.at(0, 0), -std::log(4.0), 1e-15);
  EXPECT_NEAR(out.at(0, 1), std::log(0.75), 1e-15);
}

TEST(ProjectionPropertyTest, LogSoftmaxShiftInvarianceAndNormalization) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> row(2 + trial % 9);
    for (double& v : row) v = u(rng);
    const double shift = u(rng) * 10;
    auto shifted = row;
    for (double& v : shifted) v += shift;
    const auto a = log_softmax(row_logits(row, Provenance::kBaseline));
    const auto b = log_softmax(row_logits(shifted, Provenance::kBaseline));
    double lse = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      EXPECT_NEAR(a.values[c], b.values[c], 1e-9);
      EXPECT_LE(a.values[c], 0.0);
      lse += std::exp(a.values[c]);
    }
    EXPECT_NEAR(std::log(lse), 0.0, 1e-5);
  }
}

TEST(ProjectionPropertyTest, AggregationIsScaleInvariantWithoutBias) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> scale(0.01f, 50.0f);
  for (int trial = 0; trial < 20; ++trial) {
    ModelDump d = testing::random_dump(rng, 4, 5, 6, 7, false);
    std::fill(d.head.bias.data.begin(), d.head.bias.data.end(), 0.0f);
    const auto ref = aggregate_logits(d, 1 + trial % 4);
    const float s = scale(rng);
    for (float& v : d.hidden_states.data) v *= s;
    const auto scaled = aggregate_logits(d, 1 + trial % 4);
    for (std::size_t i = 0; i < ref.values.size(); ++i) EXPECT_NEAR(scaled.values[i], ref.values[i], 1e-5);
  }
}

TEST(ProjectionPropertyTest, TemperaturePreservesArgmax) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_real_distribution<double> tau(0.01, 100);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> row(5);
    for (double& v : row) v = u(rng);
    const auto m = row_logits(row, Provenance::kBaseline);
    EXPECT_EQ(argmax(temperature_scale(m, tau(rng)).row(0)), argmax(m.row(0)));
  }
}

TEST(ProjectionPropertyTest, InterpolationRelaxesConfidentRows) {
  // Base rows peaked above 1 - 1e-3; aggregated rows strictly flatter.
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0, 1.5);
  std::uniform_real_distribution<double> beta(0.05, 0.95);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t classes = 5;
    const std::size_t peak = trial % classes;
    std::vector<double> b(classes, 0.0), a(classes);
    b[peak] = 12.0;
    for (double& v : a) v = u(rng);
    const auto pb = oracle::softmax(b);
    const auto pa = oracle::softmax(a);
    ASSERT_GT(pb[peak], 1 - 1e-3);
    ASSERT_LT(*std::max_element(pa.begin(), pa.end()), pb[peak]);
    const auto mixed = interpolate(row_logits(b, Provenance::kBaseline), row_logits(a, Provenance::kAggregated), beta(rng));
    const auto pm = softmax(mixed.row(0));
    EXPECT_LE(*std::max_element(pm.begin(), pm.end()), pb[peak]);
  }
}

TEST(PredictTest, ComposesThePipeline) {
  std::mt19937 rng(12);
  const ModelDump d = testing::random_dump(rng, 4, 6, 5, 6, false);
  const auto got = predict_log_probs(d, {0.85, 3, AggregationNorm::kHiddenState});
  const auto want = log_softmax(interpolate(project(d, 4), aggregate_logits(d, 3), 0.85));
  EXPECT_EQ(got.values, want.values);
}

}  // namespace
}  // namespace lga
