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

#include "plugselect/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "plugselect/error.hpp"

namespace plugselect::metrics {

std::int64_t ConfusionCounts::total() const {
  return std::accumulate(matrix.begin(), matrix.end(), std::int64_t{0});
}

std::int64_t ConfusionCounts::trace() const {
  std::int64_t t = 0;
  for (std::size_t k = 0; k < n_classes; ++k) t += at(k, k);
  return t;
}

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t n_classes) {
  if (y_true.size() != y_pred.size()) {
    throw ValidationError("label and prediction vectors differ in length");
  }
  if (n_classes < 2) throw ValidationError("confusion needs >= 2 classes");
  ConfusionCounts out{n_classes, std::vector<std::int64_t>(n_classes * n_classes, 0)};
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
        static_cast<std::size_t>(p) >= n_classes) {
      throw ValidationError("label out of range at position " + std::to_string(i));
    }
    ++out.matrix[static_cast<std::size_t>(t) * n_classes + static_cast<std::size_t>(p)];
  }
  return out;
}

ClassificationMetrics metrics_from_counts(const ConfusionCounts& counts) {
  const auto total = counts.total();
  if (total <= 0) throw ValidationError("metrics need at least one evaluated window");
  ClassificationMetrics m;
  m.acc = static_cast<double>(counts.trace()) / static_cast<double>(total);
  if (counts.n_classes != 2) return m;

  const auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  const auto tp = counts.tp(), tn = counts.tn(), fp = counts.fp(), fn = counts.fn();
  m.sen = ratio(tp, tp + fn);
  m.spe = ratio(tn, tn + fp);
  m.f1 = ratio(2 * tp, 2 * tp + fp + fn);
  return m;
}

double auc(std::span<const double> scores, std::span<const int> y_true) {
  if (scores.size() != y_true.size()) {
    throw ValidationError("score and label vectors differ in length");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  // Rank-sum with mid-ranks for ties (ranks doubled to stay integral).
  std::int64_t n_pos = 0;
  std::int64_t rank2_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const auto mid2 = static_cast<std::int64_t>(i + 1 + j);  // 2 * mean rank
    for (std::size_t t = i; t < j; ++t) {
      const int y = y_true[idx[t]];
      if (y != 0 && y != 1) throw ValidationError("AUC needs binary labels");
      if (y == 1) {
        ++n_pos;
        rank2_sum += mid2;
      }
    }
    i = j;
  }
  const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ValidationError("AUC is undefined when only one class is present");
  }
  const std::int64_t u2 = rank2_sum - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EffectiveAcc effective_acc(double acc, std::size_t n_classes) {
  if (n_classes < 2) throw ValidationError("effective ACC needs >= 2 classes");
  return {acc, acc > 1.0 / static_cast<double>(n_classes)};
}

}  // namespace plugselect::metrics
