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

#ifndef PLUGSELECT_ATTRIBUTION_HPP_
#define PLUGSELECT_ATTRIBUTION_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plugselect/diffnet.hpp"
#include "plugselect/eegdata.hpp"
#include "plugselect/matrix.hpp"

namespace plugselect::attribution {

enum class TargetRule { kTrueLabel, kPredictedLabel };

std::string to_string(TargetRule rule);
TargetRule target_rule_from_string(const std::string& name);

struct IgConfig {
  int steps = 64;
  // Reference input in model-input space; zero matrix when unset.
  std::optional<Matrix> baseline;
  TargetRule target_rule = TargetRule::kTrueLabel;
  bool normalize = true;
  // Only attribute windows the model classifies correctly.
  bool correct_only = false;

  void validate() const;
};

struct WindowAttribution {
  std::vector<double> values;  // per channel
  int window_index = 0;
  int subject_id = 0;
  // |sum of the attribution map - (h(x) - h(baseline))|
  double completeness_gap = 0.0;
  // h(x) - h(baseline) for the chosen target.
  double output_delta = 0.0;
};

struct SubjectAttribution {
  std::vector<double> values;
  int n_windows = 0;
  int subject_id = 0;
  bool normalized = false;
  double completeness_gap_mean = 0.0;
};

// baseline + (step / steps) * (x - baseline)
Matrix path_point(const Matrix& x, const Matrix& baseline, int step, int steps);

// Element-wise attribution map (x - baseline) * (sum of path gradients) / M,
// using right-endpoint path points step = 1..M.
Matrix integrated_gradients_map(const diffnet::DifferentiableModel& model,
                                const Matrix& x, const Matrix& baseline,
                                std::size_t target, int steps);

// Per-channel attribution: the map above averaged over the time axis.
WindowAttribution integrated_gradients_window(
    const diffnet::DifferentiableModel& model, const eegdata::Window& window,
    const IgConfig& cfg);

double completeness_gap(const diffnet::DifferentiableModel& model,
                        const eegdata::Window& window, const IgConfig& cfg);

// Sums window attributions and optionally rescales so max |value| == 1.
SubjectAttribution aggregate_subject(std::span<const WindowAttribution> window_attrs,
                                     bool normalize);

// Attributes every window of one subject (concurrently with `jobs` threads)
// and aggregates in window order.
SubjectAttribution attribute_subject(const diffnet::DifferentiableModel& model,
                                     std::span<const eegdata::Window> windows,
                                     const IgConfig& cfg, std::size_t jobs = 1);

// JSON export: {subject_id, n_windows, M, target_rule, normalized,
// channel_labels, values[], completeness_gap_mean}.
std::string to_json(const SubjectAttribution& attr, const IgConfig& cfg,
                    std::span<const std::string> channel_labels);
SubjectAttribution attribution_from_json(const std::string& text);

}  // namespace plugselect::attribution

#endif  // PLUGSELECT_ATTRIBUTION_HPP_
