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
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "plugselect/error.hpp"
#include "plugselect/ranking.hpp"

namespace plugselect::ranking {
namespace {

using attribution::SubjectAttribution;

SubjectAttribution subject(std::vector<double> values, bool normalized = true, int id = 1) {
  SubjectAttribution s;
  s.values = std::move(values);
  s.normalized = normalized;
  s.subject_id = id;
  s.n_windows = 1;
  return s;
}

// Max-abs normalization, written independently of the library.
SubjectAttribution normalized_subject(std::vector<double> raw, int id) {
  double peak = 0.0;
  for (double v : raw) peak = std::max(peak, std::abs(v));
  for (double& v : raw) v /= peak;
  return subject(std::move(raw), true, id);
}

std::vector<SubjectAttribution> random_subjects(std::size_t n, std::size_t channels,
                                                std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<SubjectAttribution> out;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> raw(channels);
    for (double& v : raw) v = scale * dist(rng);
    out.push_back(normalized_subject(raw, static_cast<int>(s + 1)));
  }
  return out;
}

// Brute-force voting: count top-k membership by repeated max extraction.
std::vector<int> brute_votes(const std::vector<SubjectAttribution>& subjects, std::size_t k) {
  const std::size_t c = subjects.front().values.size();
  std::vector<int> counts(c, 0);
  for (const auto& s : subjects) {
    std::vector<bool> taken(c, false);
    for (std::size_t r = 0; r < k; ++r) {
      std::size_t best = c;
      for (std::size_t i = 0; i < c; ++i) {
        if (taken[i]) continue;
        if (best == c || std::abs(s.values[i]) > std::abs(s.values[best])) best = i;
      }
      taken[best] = true;
      ++counts[best];
    }
  }
  return counts;
}

void expect_permutation(const std::vector<std::size_t>& order, std::size_t c) {
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(c);
  std::iota(iota.begin(), iota.end(), 0);
  EXPECT_EQ(sorted, iota);
}

// --- averaging ------------------------------------------------------------------

TEST(Averaging, Examples) {
  const std::vector<SubjectAttribution> one = {subject({0.5, 0.1})};
  EXPECT_EQ(rank_averaging(one).order, (std::vector<std::size_t>{0, 1}));

  const std::vector<SubjectAttribution> two = {subject({1.0, -0.9}), subject({0.2, -1.0})};
  const auto r = rank_averaging(two);
  EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 0}));
  EXPECT_NEAR(r.scores[0], 0.6, 1e-15);
  EXPECT_NEAR(r.scores[1], 0.95, 1e-15);
  EXPECT_EQ(r.strategy, Strategy::kAveraging);
  EXPECT_EQ(r.n_subjects, 2u);
}

TEST(Averaging, TiesGoToLowerIndex) {
  const std::vector<SubjectAttribution> s = {subject({0.5, 1.0, -1.0, 0.5})};
  EXPECT_EQ(rank_averaging(s).order, (std::vector<std::size_t>{1, 2, 0, 3}));
}

TEST(Averaging, SignedVariant) {
  const std::vector<SubjectAttribution> s = {subject({-1.0, 0.3, 0.6})};
  EXPECT_EQ(rank_averaging(s, Sign::kSigned).order, (std::vector<std::size_t>{2, 1, 0}));
  EXPECT_EQ(rank_averaging(s, Sign::kAbsolute).order, (std::vector<std::size_t>{0, 2, 1}));
}

TEST(Averaging, Errors) {
  EXPECT_THROW(rank_averaging({}), ValidationError);
  const std::vector<SubjectAttribution> mixed = {subject({1.0, 0.0}), subject({1.0})};
  EXPECT_THROW(rank_averaging(mixed), ValidationError);
  const std::vector<SubjectAttribution> raw = {subject({3.0, 1.0}, false)};
  EXPECT_THROW(rank_averaging(raw), ValidationError);
}

TEST(Averaging, OrderIsPermutationWithNonIncreasingScores) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto subjects = random_subjects(5, 11, seed);
    const auto r = rank_averaging(subjects);
    expect_permutation(r.order, 11);
    for (std::size_t j = 1; j < r.order.size(); ++j) {
      EXPECT_GE(r.scores[r.order[j - 1]], r.scores[r.order[j]]);
    }
  }
}

TEST(Averaging, PermutationEquivariant) {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto subjects = random_subjects(4, 9, 100 + seed);
    std::vector<std::size_t> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    // permuted[perm[i]] = original[i]
    std::vector<SubjectAttribution> permuted = subjects;
    for (std::size_t s = 0; s < subjects.size(); ++s) {
      for (std::size_t i = 0; i < 9; ++i) permuted[s].values[perm[i]] = subjects[s].values[i];
    }
    const auto a = rank_averaging(subjects);
    const auto b = rank_averaging(permuted);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(b.scores[perm[i]], a.scores[i]);
    for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(b.order[j], perm[a.order[j]]);
  }
}

TEST(Ranking, PositiveRescalingLeavesOrderUnchanged) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto base = random_subjects(6, 10, 200 + seed);
    const auto scaled = random_subjects(6, 10, 200 + seed, 7.5);
    EXPECT_EQ(rank_averaging(base).order, rank_averaging(scaled).order);
    for (std::size_t k : {1, 3, 10}) {
      EXPECT_EQ(rank_voting(base, k).order, rank_voting(scaled, k).order);
    }
  }
}

// --- voting -------------------------------------------------------------------

TEST(Voting, Examples) {
  const std::vector<SubjectAttribution> one = {subject({0.9, 0.1, 0.5})};
  const auto tally = vote_tally(one, 2);
  EXPECT_EQ(tally.counts, (std::vector<int>{1, 0, 1}));
  EXPECT_EQ(tally.k, 2u);
  const auto r = rank_voting(one, 2);
  EXPECT_EQ(r.order, (std::vector<std::size_t>{0, 2, 1}));
  EXPECT_EQ(r.strategy, Strategy::kVoting);
  ASSERT_TRUE(r.k.has_value());
  EXPECT_EQ(*r.k, 2u);

  const std::vector<SubjectAttribution> same = {subject({1.0, 0.2, 0.8, 0.1}, true, 1),
                                                subject({0.9, 0.1, 1.0, 0.3}, true, 2),
                                                subject({1.0, 0.3, 0.7, 0.2}, true, 3)};
  const auto t = vote_tally(same, 2);
  EXPECT_EQ(t.counts[0], 3);
  EXPECT_EQ(t.counts[2], 3);
}

TEST(Voting, FullKFallsBackToMeanMagnitude) {
  const auto subjects = random_subjects(5, 8, 33);
  const auto tally = vote_tally(subjects, 8);
  for (int c : tally.counts) EXPECT_EQ(c, 5);
  EXPECT_EQ(rank_voting(subjects, 8).order, rank_averaging(subjects).order);
}

TEST(Voting, TieBreakByMeanMagnitudeThenIndex) {
  // Channels 1 and 2 both get one vote; channel 2 has the larger mean |phi|.
  const std::vector<SubjectAttribution> s = {subject({1.0, 0.9, 0.1}, true, 1),
                                             subject({1.0, 0.1, 0.95}, true, 2)};
  EXPECT_EQ(rank_voting(s, 2).order, (std::vector<std::size_t>{0, 2, 1}));
  const std::vector<SubjectAttribution> flat = {subject({1.0, 1.0, 1.0})};
  EXPECT_EQ(rank_voting(flat, 1).order, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Voting, MatchesBruteForceAndConservesVotes) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 1 + seed % 7, c = 2 + seed % 9;
    const auto subjects = random_subjects(n, c, 300 + seed);
    for (std::size_t k = 1; k <= c; ++k) {
      const auto tally = vote_tally(subjects, k);
      EXPECT_EQ(tally.counts, brute_votes(subjects, k));
      EXPECT_EQ(std::accumulate(tally.counts.begin(), tally.counts.end(), 0),
                static_cast<int>(n * k));
      for (int v : tally.counts) {
        EXPECT_GE(v, 0);
        EXPECT_LE(v, static_cast<int>(n));
      }
      const auto r = rank_voting(subjects, k);
      expect_permutation(r.order, c);
      for (std::size_t j = 1; j < c; ++j) {
        EXPECT_GE(r.scores[r.order[j - 1]], r.scores[r.order[j]]);
      }
    }
  }
}

TEST(Voting, KOutOfRange) {
  const auto subjects = random_subjects(2, 4, 1);
  EXPECT_THROW(vote_tally(subjects, 0), ValidationError);
  EXPECT_THROW(rank_voting(subjects, 5), ValidationError);
}

// --- selection -------------------------------------------------------------------

TEST(Select, Examples) {
  const auto r = rank_averaging(random_subjects(3, 32, 5));
  const auto all = select_top(r, 32);
  EXPECT_EQ(all.channels.size(), 32u);
  EXPECT_EQ(all.eta, 1.0);
  const auto fifteen = select_top(r, 15);
  EXPECT_EQ(fifteen.channels.size(), 15u);
  EXPECT_NEAR(fifteen.eta, 0.469, 5e-4);
  EXPECT_EQ(fifteen.eta, 15.0 / 32.0);
  const auto one = select_top(r, 1);
  EXPECT_EQ(one.channels, (std::vector<std::size_t>{r.order[0]}));
  EXPECT_THROW(select_top(r, 0), ValidationError);
  EXPECT_THROW(select_top(r, 33), ValidationError);
}

TEST(Select, PrefixesNest) {
  const auto r = rank_voting(random_subjects(4, 12, 6), 3);
  for (std::size_t c1 = 1; c1 < 12; ++c1) {
    const auto small = select_top(r, c1), large = select_top(r, c1 + 1);
    EXPECT_TRUE(std::includes(large.channels.begin(), large.channels.end(),
                              small.channels.begin(), small.channels.end()));
    EXPECT_TRUE(std::is_sorted(small.channels.begin(), small.channels.end()));
  }
}

// --- random baseline -------------------------------------------------------------

TEST(RandomSubsets, Examples) {
  const auto full = random_subsets(6, 6, 5, 1);
  ASSERT_EQ(full.size(), 5u);
  for (const auto& s : full) EXPECT_EQ(s, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(random_subsets(16, 5, 5, 42), random_subsets(16, 5, 5, 42));
  EXPECT_NE(random_subsets(16, 5, 5, 42), random_subsets(16, 5, 5, 43));
  for (const auto& s : random_subsets(16, 5, 20, 7)) {
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 5u);
    EXPECT_LT(s.back(), 16u);
  }
  EXPECT_THROW(random_subsets(4, 5, 1, 1), ValidationError);
  EXPECT_THROW(random_subsets(4, 2, 0, 1), ValidationError);
}

TEST(RandomSubsets, MonteCarloUniformity) {
  std::vector<int> hits(4, 0);
  for (const auto& s : random_subsets(4, 1, 10000, 2024)) ++hits[s[0]];
  for (int h : hits) EXPECT_NEAR(h / 10000.0, 0.25, 0.02);
}

// --- export -------------------------------------------------------------------

TEST(RankingJson, RoundTrip) {
  const auto subjects = random_subjects(3, 4, 8);
  const std::vector<std::string> labels = {"Fz", "Cz", "Pz", "Oz"};
  for (const auto& r : {rank_averaging(subjects), rank_voting(subjects, 2)}) {
    const auto text = to_json(r, labels);
    for (const char* key : {"\"strategy\"", "\"n_subjects\"", "\"channel_labels\"",
                            "\"order\"", "\"scores\""}) {
      EXPECT_NE(text.find(key), std::string::npos);
    }
    EXPECT_EQ(text.find("\"k\"") != std::string::npos, r.k.has_value());
    const auto back = ranking_from_json(text);
    EXPECT_EQ(back.order, r.order);
    EXPECT_EQ(back.scores, r.scores);
    EXPECT_EQ(back.strategy, r.strategy);
    EXPECT_EQ(back.n_subjects, r.n_subjects);
    EXPECT_EQ(back.k, r.k);
  }
  EXPECT_THROW(ranking_from_json("[1,"), IoError);
  EXPECT_EQ(strategy_from_string("voting"), Strategy::kVoting);
  EXPECT_THROW(strategy_from_string("greedy"), ValidationError);
}

}  // namespace
}  // namespace plugselect::ranking
