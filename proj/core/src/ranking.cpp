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

#include "plugselect/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>
#include "plugselect/error.hpp"

namespace plugselect::ranking {
namespace {

using attribution::SubjectAttribution;
using nlohmann::json;

std::size_t check_subjects(std::span<const SubjectAttribution> subjects) {
  if (subjects.empty()) throw ValidationError("ranking needs at least one subject");
  const std::size_t channels = subjects.front().values.size();
  if (channels == 0) throw ValidationError("attribution has no channels");
  for (const auto& s : subjects) {
    if (s.values.size() != channels) {
      throw ValidationError("subjects disagree on channel count");
    }
    if (!s.normalized) {
      throw ValidationError("subject " + std::to_string(s.subject_id) +
                            " attribution is not normalized");
    }
  }
  return channels;
}

double score_of(double v, Sign sign) { return sign == Sign::kAbsolute ? std::abs(v) : v; }

std::vector<double> mean_scores(std::span<const SubjectAttribution> subjects, Sign sign) {
  std::vector<double> mean(subjects.front().values.size(), 0.0);
  for (const auto& s : subjects) {
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += score_of(s.values[c], sign);
  }
  for (double& m : mean) m /= static_cast<double>(subjects.size());
  return mean;
}

// Indices sorted by descending score, ties to the lower index.
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kAveraging:
      return "averaging";
    case Strategy::kVoting:
      return "voting";
    case Strategy::kRandom:
      return "random";
  }
  return "averaging";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "averaging") return Strategy::kAveraging;
  if (name == "voting") return Strategy::kVoting;
  if (name == "random") return Strategy::kRandom;
  throw ValidationError("unknown strategy '" + name + "'");
}

ChannelRanking rank_averaging(std::span<const SubjectAttribution> subjects, Sign sign) {
  check_subjects(subjects);
  ChannelRanking out;
  out.scores = mean_scores(subjects, sign);
  out.order = descending(out.scores);
  out.strategy = Strategy::kAveraging;
  out.n_subjects = subjects.size();
  return out;
}

VoteTally vote_tally(std::span<const SubjectAttribution> subjects, std::size_t k,
                     Sign sign) {
  const std::size_t channels = check_subjects(subjects);
  if (k < 1 || k > channels) {
    throw ValidationError("vote k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(channels) + "]");
  }
  VoteTally tally{std::vector<int>(channels, 0), k};
  std::vector<double> scores(channels);
  for (const auto& s : subjects) {
    for (std::size_t c = 0; c < channels; ++c) scores[c] = score_of(s.values[c], sign);
    const auto order = descending(scores);
    for (std::size_t j = 0; j < k; ++j) ++tally.counts[order[j]];
  }
  return tally;
}

ChannelRanking rank_voting(std::span<const SubjectAttribution> subjects, std::size_t k,
                           Sign sign) {
  const auto tally = vote_tally(subjects, k, sign);
  const auto mean = mean_scores(subjects, sign);
  ChannelRanking out;
  out.scores.assign(tally.counts.begin(), tally.counts.end());
  out.order.resize(tally.counts.size());
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    if (tally.counts[a] != tally.counts[b]) return tally.counts[a] > tally.counts[b];
    return mean[a] > mean[b];
  });
  out.strategy = Strategy::kVoting;
  out.n_subjects = subjects.size();
  out.k = k;
  return out;
}

Selection select_top(const ChannelRanking& ranking, std::size_t c) {
  const std::size_t channels = ranking.order.size();
  if (c < 1 || c > channels) {
    throw ValidationError("cannot select " + std::to_string(c) + " of " +
                          std::to_string(channels) + " channels");
  }
  Selection out;
  out.channels.assign(ranking.order.begin(),
                      ranking.order.begin() + static_cast<std::ptrdiff_t>(c));
  std::sort(out.channels.begin(), out.channels.end());
  out.eta = static_cast<double>(c) / static_cast<double>(channels);
  return out;
}

std::vector<std::vector<std::size_t>> random_subsets(std::size_t n_channels,
                                                     std::size_t c,
                                                     std::size_t n_sets,
                                                     std::uint64_t seed) {
  if (c < 1 || c > n_channels) {
    throw ValidationError("random subset size " + std::to_string(c) + " outside [1, " +
                          std::to_string(n_channels) + "]");
  }
  if (n_sets < 1) throw ValidationError("need at least one random set");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> sets;
  sets.reserve(n_sets);
  std::vector<std::size_t> pool(n_channels);
  for (std::size_t s = 0; s < n_sets; ++s) {
    std::iota(pool.begin(), pool.end(), 0);
    // Partial Fisher-Yates: the first c entries are a uniform c-subset.
    for (std::size_t i = 0; i < c; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n_channels - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    std::vector<std::size_t> set(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(c));
    std::sort(set.begin(), set.end());
    sets.push_back(std::move(set));
  }
  return sets;
}

std::string to_json(const ChannelRanking& ranking,
                    std::span<const std::string> channel_labels) {
  if (channel_labels.size() != ranking.order.size()) {
    throw ValidationError("channel label count differs from ranking length");
  }
  json j = {{"strategy", to_string(ranking.strategy)},
            {"n_subjects", ranking.n_subjects},
            {"channel_labels",
             std::vector<std::string>(channel_labels.begin(), channel_labels.end())},
            {"order", ranking.order},
            {"scores", ranking.scores}};
  if (ranking.k) j["k"] = *ranking.k;
  return j.dump(2) + "\n";
}

ChannelRanking ranking_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ChannelRanking out;
    out.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    out.n_subjects = j.at("n_subjects").get<std::size_t>();
    out.order = j.at("order").get<std::vector<std::size_t>>();
    out.scores = j.at("scores").get<std::vector<double>>();
    if (j.contains("k")) out.k = j.at("k").get<std::size_t>();
    return out;
  } catch (const json::exception& e) {
    throw IoError(std::string("corrupt ranking JSON: ") + e.what());
  }
}

}  // namespace plugselect::ranking
