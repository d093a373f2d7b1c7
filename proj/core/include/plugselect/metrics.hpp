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

#ifndef PLUGSELECT_METRICS_HPP_
#define PLUGSELECT_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace plugselect::metrics {

// K x K counts, rows = truth, columns = prediction. For binary tasks the
// positive class is index 1.
struct ConfusionCounts {
  std::size_t n_classes = 0;
  std::vector<std::int64_t> matrix;

  std::int64_t at(std::size_t truth, std::size_t pred) const {
    return matrix[truth * n_classes + pred];
  }
  std::int64_t total() const;
  std::int64_t trace() const;

  std::int64_t tp() const { return at(1, 1); }
  std::int64_t tn() const { return at(0, 0); }
  std::int64_t fp() const { return at(0, 1); }
  std::int64_t fn() const { return at(1, 0); }
};

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t n_classes);

// Ratios with a zero denominator are left empty rather than reported as 0.
// SEN/SPE/F1 are only filled for binary tasks.
struct ClassificationMetrics {
  double acc = 0.0;
  std::optional<double> sen;
  std::optional<double> spe;
  std::optional<double> f1;
};

ClassificationMetrics metrics_from_counts(const ConfusionCounts& counts);

// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie).
double auc(std::span<const double> scores_for_class1, std::span<const int> y_true);

struct EffectiveAcc {
  double acc = 0.0;
  bool effective = false;
};

// Effective means strictly above chance (1 / n_classes).
EffectiveAcc effective_acc(double acc, std::size_t n_classes);

}  // namespace plugselect::metrics

#endif  // PLUGSELECT_METRICS_HPP_
