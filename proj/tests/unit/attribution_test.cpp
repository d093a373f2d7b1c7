/*
 * Copyright 2026 The plugselect Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "plugselect/attribution.hpp"
#include "plugselect/diffnet.hpp"
#include "plugselect/error.hpp"
#include "test_util.hpp"

namespace plugselect::attribution {
namespace {

using diffnet::Activation;
using diffnet::LinearModel;
using plugselect::testing::random_matrix;

eegdata::Window window_of(Matrix m, int label = 0, int subject = 1, int index = 0) {
  return {std::move(m), label, subject, index};
}

diffnet::ModelConfig toy(Activation act, std::uint64_t seed) {
  diffnet::ModelConfig c;
  c.input_channels = 6;
  c.input_samples = 20;
  c.temporal_kernels = 3;
  c.temporal_width = 5;
  c.spatial_kernels = 3;
  c.pool_width = 4;
  c.hidden_units = 8;
  c.activation = act;
  c.seed = seed;
  return c;
}

// Closed form for a linear model: the gradient is constant along the path.
std::vector<double> linear_closed_form(const LinearModel& m, const Matrix& x, std::size_t k) {
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t c = 0; c < x.rows(); ++c) {
    for (std::size_t t = 0; t < x.cols(); ++t) out[c] += m.weights(k)(c, t) * x(c, t);
    out[c] /= static_cast<double>(x.cols());
  }
  return out;
}

std::vector<std::size_t> abs_argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(v[a]) > std::abs(v[b]); });
  return idx;
}

// --- path ----------------------------------------------------------------------

TEST(PathPoint, Endpoints) {
  const auto x = random_matrix(3, 8, 1);
  const Matrix zero(3, 8);
  EXPECT_EQ(path_point(x, zero, 64, 64), x);
  EXPECT_EQ(path_point(x, zero, 32, 64), 0.5 * x);
  EXPECT_EQ(path_point(x, x, 5, 9), x);
  const auto b = random_matrix(3, 8, 2);
  const auto mid = path_point(x, b, 1, 4);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(mid.values()[i], b.values()[i] + 0.25 * (x.values()[i] - b.values()[i]), 1e-15);
  }
  EXPECT_THROW(path_point(x, zero, 0, 4), ValidationError);
  EXPECT_THROW(path_point(x, zero, 5, 4), ValidationError);
  EXPECT_THROW(path_point(x, Matrix(2, 8), 1, 4), ValidationError);
}

// --- linear exactness ------------------------------------------------------------

TEST(IntegratedGradients, LinearModelMatchesClosedFormForAnySteps) {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto m = LinearModel::random(5, 12, 2, 10 + trial);
    const auto x = random_matrix(5, 12, 50 + trial, -3.0, 3.0);
    const int label = static_cast<int>(trial % 2);
    const auto expected = linear_closed_form(m, x, label);
    for (int steps : {1, 7, 64}) {
      IgConfig cfg;
      cfg.steps = steps;
      const auto w = integrated_gradients_window(m, window_of(x, label), cfg);
      for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(w.values[c], expected[c], 1e-10);
      EXPECT_LE(w.completeness_gap, 1e-10);
    }
  }
}

TEST(IntegratedGradients, InputAtBaselineGivesZero) {
  const auto m = diffnet::build_model(toy(Activation::kTanh, 1));
  const auto w = integrated_gradients_window(m, window_of(Matrix(6, 20)), IgConfig{});
  for (double v : w.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(w.output_delta, 0.0);
}

TEST(IntegratedGradients, SingleStepIsGradientTimesInput) {
  const auto m = diffnet::build_model(toy(Activation::kTanh, 2));
  const auto x = random_matrix(6, 20, 3);
  IgConfig cfg;
  cfg.steps = 1;
  const auto w = integrated_gradients_window(m, window_of(x, 1), cfg);
  const auto g = m.input_gradient(x, 1);
  for (std::size_t c = 0; c < 6; ++c) {
    double expected = 0.0;
    for (std::size_t t = 0; t < 20; ++t) expected += x(c, t) * g(c, t);
    EXPECT_NEAR(w.values[c], expected / 20.0, 1e-14);
  }
}

TEST(IntegratedGradients, MapSumsToPerChannelTimeMean) {
  const auto m = diffnet::build_model(toy(Activation::kTanh, 4));
  const auto x = random_matrix(6, 20, 5);
  const auto map = integrated_gradients_map(m, x, Matrix(6, 20), 0, 16);
  IgConfig cfg;
  cfg.steps = 16;
  const auto w = integrated_gradients_window(m, window_of(x, 0), cfg);
  for (std::size_t c = 0; c < 6; ++c) {
    double s = 0.0;
    for (double v : map.row(c)) s += v;
    EXPECT_NEAR(w.values[c], s / 20.0, 1e-15);
  }
}

// --- completeness ----------------------------------------------------------------

TEST(Completeness, ConvergesOnSmoothModel) {
  const auto m = diffnet::build_model(toy(Activation::kTanh, 6));
  const std::vector<int> steps = {8, 32, 128, 512};
  std::vector<double> mean_gap(steps.size(), 0.0), mean_rel(steps.size(), 0.0);
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto x = random_matrix(6, 20, 70 + i, -2.0, 2.0);
    for (std::size_t s = 0; s < steps.size(); ++s) {
      IgConfig cfg;
      cfg.steps = steps[s];
      const auto w = integrated_gradients_window(m, window_of(x, 0), cfg);
      mean_gap[s] += w.completeness_gap / 10.0;
      mean_rel[s] += w.completeness_gap / std::abs(w.output_delta) / 10.0;
    }
  }
  for (std::size_t s = 1; s < steps.size(); ++s) EXPECT_LE(mean_gap[s], mean_gap[s - 1]);
  EXPECT_LE(mean_rel.back(), 1e-2);
  EXPECT_EQ(completeness_gap(m, window_of(random_matrix(6, 20, 70), 0), IgConfig{}),
            integrated_gradients_window(m, window_of(random_matrix(6, 20, 70), 0), IgConfig{})
                .completeness_gap);
}

// --- axioms --------------------------------------------------------------------

TEST(IntegratedGradients, NullPlayerGetsExactlyZero) {
  const auto m = diffnet::build_model(toy(Activation::kTanh, 7));
  auto x = random_matrix(6, 20, 8);
  for (double& v : x.row(3)) v = 0.0;
  const auto w = integrated_gradients_window(m, window_of(x, 1), IgConfig{});
  EXPECT_EQ(w.values[3], 0.0);

  IgConfig custom;
  custom.baseline = random_matrix(6, 20, 9);
  auto y = random_matrix(6, 20, 10);
  for (std::size_t t = 0; t < 20; ++t) y(2, t) = (*custom.baseline)(2, t);
  EXPECT_EQ(integrated_gradients_window(m, window_of(y, 1), custom).values[2], 0.0);
}

TEST(IntegratedGradients, PositiveScalingKeepsChannelOrder) {
  auto c = toy(Activation::kIdentity, 11);
  auto m = diffnet::build_model(c);
  const diffnet::ParameterLayout layout(c);
  auto p = m.mutable_parameters();
  for (auto [begin, n] : {std::pair{layout.temporal_b, c.temporal_kernels},
                          std::pair{layout.spatial_b, c.spatial_kernels},
                          std::pair{layout.hidden_b, c.hidden_units},
                          std::pair{layout.output_b, c.n_classes}}) {
    std::fill(p.begin() + begin, p.begin() + begin + n, 0.0);
  }
  const auto x = random_matrix(6, 20, 12);
  IgConfig cfg;
  cfg.baseline = random_matrix(6, 20, 13, -0.2, 0.2);
  const auto base = integrated_gradients_window(m, window_of(x, 0), cfg);
  for (double alpha : {0.5, 3.0}) {
    IgConfig scaled = cfg;
    scaled.baseline = alpha * *cfg.baseline;
    const auto w = integrated_gradients_window(m, window_of(alpha * x, 0), scaled);
    EXPECT_EQ(abs_argsort(w.values), abs_argsort(base.values));
    for (std::size_t ch = 0; ch < 6; ++ch) {
      EXPECT_NEAR(w.values[ch], alpha * base.values[ch],
                  1e-10 * std::max(1.0, std::abs(base.values[ch])));
    }
  }
}

TEST(IntegratedGradients, TargetRule) {
  const auto m = LinearModel::random(3, 4, 2, 14);
  const auto x = random_matrix(3, 4, 15);
  const std::size_t predicted = diffnet::predict(m, x);
  const int wrong = static_cast<int>(1 - predicted);
  IgConfig cfg;
  cfg.target_rule = TargetRule::kPredictedLabel;
  const auto by_pred = integrated_gradients_window(m, window_of(x, wrong), cfg);
  const auto expected = linear_closed_form(m, x, predicted);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(by_pred.values[c], expected[c], 1e-12);
  cfg.target_rule = TargetRule::kTrueLabel;
  const auto by_true = integrated_gradients_window(m, window_of(x, wrong), cfg);
  const auto expected_true = linear_closed_form(m, x, wrong);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(by_true.values[c], expected_true[c], 1e-12);
  EXPECT_EQ(target_rule_from_string(to_string(TargetRule::kPredictedLabel)),
            TargetRule::kPredictedLabel);
  EXPECT_THROW(target_rule_from_string("softmax"), ValidationError);
}

class NanGradientModel final : public diffnet::DifferentiableModel {
 public:
  std::size_t input_channels() const override { return 2; }
  std::size_t input_samples() const override { return 3; }
  std::size_t n_classes() const override { return 2; }
  std::vector<double> forward(const Matrix&) const override { return {0.0, 0.0}; }
  Matrix input_gradient(const Matrix&, std::size_t) const override {
    return Matrix(2, 3, std::nan(""));
  }
};

TEST(IntegratedGradients, Errors) {
  EXPECT_THROW(integrated_gradients_window(NanGradientModel{}, window_of(Matrix(2, 3, 1.0)),
                                           IgConfig{}),
               NumericalError);
  const auto m = LinearModel::random(2, 3, 2, 1);
  EXPECT_THROW(integrated_gradients_window(m, window_of(Matrix(3, 3)), IgConfig{}),
               ValidationError);
  IgConfig bad_baseline;
  bad_baseline.baseline = Matrix(2, 4);
  EXPECT_THROW(integrated_gradients_window(m, window_of(Matrix(2, 3)), bad_baseline),
               ValidationError);
  IgConfig zero_steps;
  zero_steps.steps = 0;
  EXPECT_THROW(integrated_gradients_window(m, window_of(Matrix(2, 3)), zero_steps),
               ValidationError);
  EXPECT_THROW(integrated_gradients_window(m, window_of(Matrix(2, 3), 5), IgConfig{}),
               ValidationError);
}

// --- aggregation ----------------------------------------------------------------

WindowAttribution wa(std::vector<double> v, int subject = 1) {
  WindowAttribution w;
  w.values = std::move(v);
  w.subject_id = subject;
  return w;
}

TEST(Aggregate, Examples) {
  const std::vector<WindowAttribution> two = {wa({1.0, -2.0}), wa({3.0, 2.0})};
  const auto raw = aggregate_subject(two, false);
  EXPECT_EQ(raw.values, (std::vector<double>{4.0, 0.0}));
  EXPECT_FALSE(raw.normalized);
  EXPECT_EQ(raw.n_windows, 2);
  EXPECT_EQ(aggregate_subject(two, true).values, (std::vector<double>{1.0, 0.0}));

  const std::vector<WindowAttribution> one = {wa({0.5, -0.25, 0.1})};
  EXPECT_EQ(aggregate_subject(one, false).values, one[0].values);
  EXPECT_EQ(aggregate_subject(one, true).values, (std::vector<double>{1.0, -0.5, 0.2}));

  const std::vector<WindowAttribution> zeros = {wa({0.0, 0.0}), wa({0.0, 0.0})};
  const auto z = aggregate_subject(zeros, true);
  EXPECT_TRUE(z.normalized);
  EXPECT_EQ(z.values, (std::vector<double>{0.0, 0.0}));
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate_subject({}, true), ValidationError);
  const std::vector<WindowAttribution> mixed = {wa({1.0}, 1), wa({1.0}, 2)};
  EXPECT_THROW(aggregate_subject(mixed, true), ValidationError);
  const std::vector<WindowAttribution> ragged = {wa({1.0}), wa({1.0, 2.0})};
  EXPECT_THROW(aggregate_subject(ragged, true), ValidationError);
}

TEST(Aggregate, RawSumIsLinearOverWindowSets) {
  std::vector<WindowAttribution> a, b, all;
  for (int i = 0; i < 7; ++i) {
    const auto m = random_matrix(1, 5, 100 + i);
    auto w = wa(std::vector<double>(m.values().begin(), m.values().end()));
    (i < 3 ? a : b).push_back(w);
    all.push_back(w);
  }
  const auto sa = aggregate_subject(a, false), sb = aggregate_subject(b, false);
  const auto s = aggregate_subject(all, false);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(s.values[c], sa.values[c] + sb.values[c], 1e-15);
}

TEST(Aggregate, NormalizationPreservesOrderAndPeaksAtOne) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = random_matrix(3, 9, seed, -5.0, 5.0);
    std::vector<WindowAttribution> ws;
    for (std::size_t r = 0; r < 3; ++r) {
      ws.push_back(wa(std::vector<double>(m.row(r).begin(), m.row(r).end())));
    }
    const auto raw = aggregate_subject(ws, false);
    const auto norm = aggregate_subject(ws, true);
    EXPECT_EQ(abs_argsort(raw.values), abs_argsort(norm.values));
    double peak = 0.0;
    for (double v : norm.values) peak = std::max(peak, std::abs(v));
    EXPECT_NEAR(peak, 1.0, 1e-12);
  }
}

// --- subject level ---------------------------------------------------------------

std::vector<eegdata::Window> windows_for(std::size_t n) {
  std::vector<eegdata::Window> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(window_of(random_matrix(6, 20, 400 + i), static_cast<int>(i % 2), 4,
                            static_cast<int>(i)));
  }
  return out;
}

TEST(AttributeSubject, ParallelEqualsSequentialBitExact) {
  const auto m = diffnet::build_model(toy(Activation::kTanh, 15));
  const auto ws = windows_for(13);
  IgConfig cfg;
  cfg.steps = 16;
  const auto seq = attribute_subject(m, ws, cfg, 1);
  for (std::size_t jobs : {2, 4, 8}) {
    const auto par = attribute_subject(m, ws, cfg, jobs);
    EXPECT_EQ(par.values, seq.values);
    EXPECT_EQ(par.completeness_gap_mean, seq.completeness_gap_mean);
  }
  EXPECT_EQ(seq.subject_id, 4);
  EXPECT_EQ(seq.n_windows, 13);
  EXPECT_TRUE(seq.normalized);
}

TEST(AttributeSubject, EqualsManualAggregation) {
  const auto m = diffnet::build_model(toy(Activation::kRelu, 16));
  const auto ws = windows_for(5);
  IgConfig cfg;
  cfg.steps = 8;
  cfg.normalize = false;
  std::vector<WindowAttribution> manual;
  for (const auto& w : ws) manual.push_back(integrated_gradients_window(m, w, cfg));
  EXPECT_EQ(attribute_subject(m, ws, cfg).values, aggregate_subject(manual, false).values);
}

TEST(AttributeSubject, CorrectOnlyFiltersWindows) {
  const auto m = diffnet::build_model(toy(Activation::kTanh, 17));
  const auto ws = windows_for(20);
  int correct = 0;
  for (const auto& w : ws) correct += diffnet::predict(m, w.data) == static_cast<std::size_t>(w.label);
  ASSERT_GT(correct, 0);
  ASSERT_LT(correct, 20);
  IgConfig cfg;
  cfg.steps = 4;
  cfg.correct_only = true;
  EXPECT_EQ(attribute_subject(m, ws, cfg).n_windows, correct);
}

TEST(AttributeSubject, JsonRoundTrip) {
  const auto m = diffnet::build_model(toy(Activation::kTanh, 18));
  IgConfig cfg;
  cfg.steps = 8;
  const auto attr = attribute_subject(m, windows_for(4), cfg);
  const std::vector<std::string> labels = {"Fp1", "Fp2", "C3", "C4", "O1", "O2"};
  const auto text = to_json(attr, cfg, labels);
  for (const char* key : {"\"subject_id\"", "\"n_windows\"", "\"M\"", "\"target_rule\"",
                          "\"normalized\"", "\"channel_labels\"", "\"values\"",
                          "\"completeness_gap_mean\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  const auto back = attribution_from_json(text);
  EXPECT_EQ(back.values, attr.values);
  EXPECT_EQ(back.subject_id, attr.subject_id);
  EXPECT_EQ(back.n_windows, attr.n_windows);
  EXPECT_EQ(back.normalized, attr.normalized);
  EXPECT_THROW(attribution_from_json("{]"), IoError);
  EXPECT_THROW(to_json(attr, cfg, std::vector<std::string>{"A"}), ValidationError);
}

}  // namespace
}  // namespace plugselect::attribution
