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

#include "plugselect/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>
#include "plugselect/error.hpp"
#include "plugselect/parallel.hpp"

namespace plugselect::attribution {

using nlohmann::json;

std::string to_string(TargetRule rule) {
  return rule == TargetRule::kTrueLabel ? "true_label" : "predicted_label";
}

TargetRule target_rule_from_string(const std::string& name) {
  if (name == "true_label") return TargetRule::kTrueLabel;
  if (name == "predicted_label") return TargetRule::kPredictedLabel;
  throw ValidationError("unknown target rule '" + name + "'");
}

void IgConfig::validate() const {
  if (steps < 1) throw ValidationError("IG steps must be >= 1");
  if (baseline && !baseline->all_finite()) {
    throw ValidationError("IG baseline contains non-finite values");
  }
}

Matrix path_point(const Matrix& x, const Matrix& baseline, int step, int steps) {
  if (!x.same_shape(baseline)) throw ValidationError("baseline shape differs from input");
  if (steps < 1 || step < 1 || step > steps) {
    throw ValidationError("path step must satisfy 1 <= m <= M");
  }
  const double alpha = static_cast<double>(step) / static_cast<double>(steps);
  Matrix out(x.rows(), x.cols());
  const auto xs = x.values();
  const auto bs = baseline.values();
  auto os = out.values();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = bs[i] + alpha * (xs[i] - bs[i]);
  return out;
}

Matrix integrated_gradients_map(const diffnet::DifferentiableModel& model,
                                const Matrix& x, const Matrix& baseline,
                                std::size_t target, int steps) {
  model.check_input(x);
  if (!x.same_shape(baseline)) throw ValidationError("baseline shape differs from input");
  if (steps < 1) throw ValidationError("IG steps must be >= 1");
  Matrix grad_sum(x.rows(), x.cols());
  for (int m = 1; m <= steps; ++m) {
    grad_sum += model.input_gradient(path_point(x, baseline, m, steps), target);
  }
  if (!grad_sum.all_finite()) throw NumericalError("non-finite gradient along IG path");
  Matrix out = x - baseline;
  const auto gs = grad_sum.values();
  auto os = out.values();
  const double inv_m = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < os.size(); ++i) os[i] *= gs[i] * inv_m;
  return out;
}

namespace {

std::size_t choose_target(const diffnet::DifferentiableModel& model,
                          const eegdata::Window& window, TargetRule rule) {
  if (rule == TargetRule::kPredictedLabel) return diffnet::predict(model, window.data);
  if (window.label < 0 || static_cast<std::size_t>(window.label) >= model.n_classes()) {
    throw ValidationError("window label out of range for model");
  }
  return static_cast<std::size_t>(window.label);
}

}  // namespace

WindowAttribution integrated_gradients_window(
    const diffnet::DifferentiableModel& model, const eegdata::Window& window,
    const IgConfig& cfg) {
  cfg.validate();
  model.check_input(window.data);
  const Matrix baseline = cfg.baseline.value_or(Matrix(window.data.rows(), window.data.cols()));
  if (!baseline.same_shape(window.data)) {
    throw ValidationError("custom baseline shape differs from window");
  }
  const std::size_t target = choose_target(model, window, cfg.target_rule);
  const Matrix map = integrated_gradients_map(model, window.data, baseline, target, cfg.steps);

  WindowAttribution out;
  out.window_index = window.window_index;
  out.subject_id = window.subject_id;
  out.values.resize(map.rows());
  double total = 0.0;
  for (std::size_t c = 0; c < map.rows(); ++c) {
    double sum = 0.0;
    for (double v : map.row(c)) sum += v;
    total += sum;
    out.values[c] = sum / static_cast<double>(map.cols());
  }
  out.output_delta = model.forward(window.data)[target] - model.forward(baseline)[target];
  out.completeness_gap = std::abs(total - out.output_delta);
  return out;
}

double completeness_gap(const diffnet::DifferentiableModel& model,
                        const eegdata::Window& window, const IgConfig& cfg) {
  return integrated_gradients_window(model, window, cfg).completeness_gap;
}

SubjectAttribution aggregate_subject(std::span<const WindowAttribution> window_attrs,
                                     bool normalize) {
  if (window_attrs.empty()) throw ValidationError("cannot aggregate zero windows");
  const std::size_t channels = window_attrs.front().values.size();
  SubjectAttribution out;
  out.subject_id = window_attrs.front().subject_id;
  out.values.assign(channels, 0.0);
  double gap_sum = 0.0;
  for (const auto& w : window_attrs) {
    if (w.subject_id != out.subject_id) {
      throw ValidationError("cannot aggregate windows from different subjects");
    }
    if (w.values.size() != channels) {
      throw ValidationError("window attributions disagree on channel count");
    }
    for (std::size_t c = 0; c < channels; ++c) out.values[c] += w.values[c];
    gap_sum += w.completeness_gap;
  }
  out.n_windows = static_cast<int>(window_attrs.size());
  out.completeness_gap_mean = gap_sum / static_cast<double>(window_attrs.size());
  out.normalized = normalize;
  if (normalize) {
    double peak = 0.0;
    for (double v : out.values) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
      for (double& v : out.values) v /= peak;
    }
  }
  return out;
}

SubjectAttribution attribute_subject(const diffnet::DifferentiableModel& model,
                                     std::span<const eegdata::Window> windows,
                                     const IgConfig& cfg, std::size_t jobs) {
  cfg.validate();
  std::vector<const eegdata::Window*> selected;
  for (const auto& w : windows) {
    if (cfg.correct_only &&
        diffnet::predict(model, w.data) != static_cast<std::size_t>(w.label)) {
      continue;
    }
    selected.push_back(&w);
  }
  if (selected.empty()) throw ValidationError("no windows left to attribute");
  std::vector<WindowAttribution> per_window(selected.size());
  parallel_for(selected.size(), jobs, [&](std::size_t i) {
    per_window[i] = integrated_gradients_window(model, *selected[i], cfg);
  });
  return aggregate_subject(per_window, cfg.normalize);
}

std::string to_json(const SubjectAttribution& attr, const IgConfig& cfg,
                    std::span<const std::string> channel_labels) {
  if (channel_labels.size() != attr.values.size()) {
    throw ValidationError("channel label count differs from attribution length");
  }
  const json j = {{"subject_id", attr.subject_id},
                  {"n_windows", attr.n_windows},
                  {"M", cfg.steps},
                  {"target_rule", to_string(cfg.target_rule)},
                  {"normalized", attr.normalized},
                  {"channel_labels", std::vector<std::string>(channel_labels.begin(),
                                                              channel_labels.end())},
                  {"values", attr.values},
                  {"completeness_gap_mean", attr.completeness_gap_mean}};
  return j.dump(2) + "\n";
}

SubjectAttribution attribution_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SubjectAttribution out;
    out.subject_id = j.at("subject_id").get<int>();
    out.n_windows = j.at("n_windows").get<int>();
    out.normalized = j.at("normalized").get<bool>();
    out.values = j.at("values").get<std::vector<double>>();
    out.completeness_gap_mean = j.at("completeness_gap_mean").get<double>();
    return out;
  } catch (const json::exception& e) {
    throw IoError(std::string("corrupt attribution JSON: ") + e.what());
  }
}

}  // namespace plugselect::attribution
