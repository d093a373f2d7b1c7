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

#ifndef PLUGSELECT_RANKING_HPP_
#define PLUGSELECT_RANKING_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plugselect/attribution.hpp"

namespace plugselect::ranking {

enum class Strategy { kAveraging, kVoting, kRandom };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

// Absolute ranks by |phi| (default); signed ranks by phi itself.
enum class Sign { kAbsolute, kSigned };

struct ChannelRanking {
  std::vector<std::size_t> order;  // best first
  std::vector<double> scores;      // indexed by channel
  Strategy strategy = Strategy::kAveraging;
  std::size_t n_subjects = 0;
  std::optional<std::size_t> k;    // voting only
};

struct VoteTally {
  std::vector<int> counts;
  std::size_t k = 0;
};

struct Selection {
  std::vector<std::size_t> channels;  // ascending channel indices
  double eta = 0.0;                   // channels.size() / C
};

ChannelRanking rank_averaging(std::span<const attribution::SubjectAttribution> subjects,
                              Sign sign = Sign::kAbsolute);

VoteTally vote_tally(std::span<const attribution::SubjectAttribution> subjects,
                     std::size_t k, Sign sign = Sign::kAbsolute);

// Orders by vote count, then by mean score across subjects, then index.
ChannelRanking rank_voting(std::span<const attribution::SubjectAttribution> subjects,
                           std::size_t k, Sign sign = Sign::kAbsolute);

Selection select_top(const ChannelRanking& ranking, std::size_t c);

std::vector<std::vector<std::size_t>> random_subsets(std::size_t n_channels,
                                                     std::size_t c,
                                                     std::size_t n_sets,
                                                     std::uint64_t seed);

// {strategy, k (voting only), n_subjects, channel_labels, order[], scores[]}
std::string to_json(const ChannelRanking& ranking,
                    std::span<const std::string> channel_labels);
ChannelRanking ranking_from_json(const std::string& text);

}  // namespace plugselect::ranking

#endif  // PLUGSELECT_RANKING_HPP_
