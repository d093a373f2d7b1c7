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

#ifndef PLUGSELECT_EVALUATION_HPP_
#define PLUGSELECT_EVALUATION_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plugselect/attribution.hpp"
#include "plugselect/diffnet.hpp"
#include "plugselect/eegdata.hpp"
#include "plugselect/filter.hpp"
#include "plugselect/metrics.hpp"
#include "plugselect/ranking.hpp"

namespace plugselect::evaluation {

// --- per-subject preprocessing ------------------------------------------------

struct PreprocessSpec {
  std::optional<filter::FilterSpec> filter;
  double window_seconds = 0.5;
  double overlap_fraction = 0.0;
  double test_fraction = 0.25;
  int augment_factor = 1;
  int augment_segments = 4;
  std::uint64_t split_seed = 7;
  std::uint64_t augment_seed = 11;
};

// z-scored train/test windows of one subject; statistics come from the
// training windows only.
struct SubjectData {
  int subject_id = 0;
  std::vector<eegdata::Window> train;
  std::vector<eegdata::Window> test;
  eegdata::NormStats stats;

  std::size_t n_channels() const { return train.front().data.rows(); }
  std::size_t n_samples() const { return train.front().data.cols(); }
  SubjectData select_channels(std::span<const std::size_t> channels) const;
};

// Split -> (filter) -> (augment train) -> window -> z-score.
SubjectData prepare_subject(const eegdata::EegDataset& subject_trials, int subject_id,
                            const PreprocessSpec& spec);
std::vector<SubjectData> prepare_subjects(const eegdata::EegDataset& dataset,
                                          const PreprocessSpec& spec,
                                          std::size_t jobs = 1);

// --- training / evaluation ------------------------------------------------------

enum class FpsMode { kMeasured, kNominal };

std::string to_string(FpsMode mode);
FpsMode fps_mode_from_string(const std::string& name);

struct EvalConfig {
  // input_channels / input_samples / seed are filled in per subject.
  diffnet::ModelConfig model;
  diffnet::TrainSpec train;
  std::uint64_t model_seed = 1;
  std::size_t n_random_sets = 5;
  std::uint64_t random_seed = 5;
  // Voting top-k; defaults to the selection size at each density.
  std::optional<std::size_t> vote_k;
  ranking::Sign sign = ranking::Sign::kAbsolute;
  FpsMode fps_mode = FpsMode::kMeasured;
  int fps_warmup = 50;
  int fps_reps = 1000;
  std::size_t jobs = 1;
};

// Settings that train reliably on band-power tasks: relu, global pooling,
// a narrower hidden layer, and a shorter Adam schedule.
EvalConfig pipeline_defaults();

// Model config for one subject and channel count.
diffnet::ModelConfig subject_model_config(const EvalConfig& cfg, int subject_id,
                                          std::size_t channels, std::size_t samples,
                                          std::size_t n_classes);

diffnet::TrainResult train_subject(const SubjectData& subject, std::size_t n_classes,
                                   const EvalConfig& cfg);

struct SubjectMetrics {
  int subject_id = 0;
  double acc = 0.0;
  std::optional<double> auc, f1, spe, sen;
};

SubjectMetrics evaluate_subject(const diffnet::DifferentiableModel& model,
                                std::span<const eegdata::Window> test, int subject_id);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

struct MetricsReport {
  MeanStd acc;
  std::optional<MeanStd> auc, f1, spe, sen;
};

MetricsReport summarize(std::span<const SubjectMetrics> per_subject, bool binary);

// Forward passes per second over `reps` timed passes, single-threaded.
double measure_fps(const diffnet::DifferentiableModel& model,
                   std::span<const eegdata::Window> windows, int warmup, int reps);

// Deterministic stand-in: forward passes per second at 1e9 multiply-accumulates
// per second.
double nominal_fps(const diffnet::ModelConfig& config);

struct PruneResult {
  ranking::Strategy strategy = ranking::Strategy::kAveraging;
  double eta = 1.0;
  std::size_t c = 0;
  std::vector<std::vector<std::size_t>> channel_sets;  // 1 set, or n_random_sets
  MetricsReport metrics;
  std::vector<SubjectMetrics> per_subject;  // random: averaged over sets
  double fps = 0.0;
  bool effective = false;
};

// Caches retrained subset models and FPS measurements across strategies.
// Thread-safe.
class EvaluationCache {
 public:
  struct Entry {
    diffnet::ConvDecoder model;
    SubjectMetrics metrics;
  };

  // Registers an already-trained model for (subject, channels).
  void put(int subject_id, std::span<const std::size_t> channels, Entry entry);
  std::optional<Entry> get(int subject_id, std::span<const std::size_t> channels) const;

  std::optional<double> fps(std::size_t c) const;
  void set_fps(std::size_t c, double fps);

 private:
  using Key = std::pair<int, std::vector<std::size_t>>;
  mutable std::mutex mutex_;
  std::map<Key, Entry> entries_;
  std::map<std::size_t, double> fps_;
};

// Channel count for a density: round(eta * C). Throws when it maps to 0.
std::size_t channels_for_density(double eta, std::size_t n_channels);

// Per density: select channels with the strategy, retrain one decoder per
// subject on the reduced channels, evaluate on held-out windows and average
// across subjects. Random repeats over n_random_sets subsets.
std::vector<PruneResult> prune_and_evaluate(
    std::span<const SubjectData> subjects,
    std::span<const attribution::SubjectAttribution> attributions,
    ranking::Strategy strategy, std::span<const double> densities,
    std::size_t n_classes, const EvalConfig& cfg, EvaluationCache* cache = nullptr);

struct BalancePoint {
  double eta = 0.0;
  std::size_t c = 0;
  double relative_acc = 0.0;  // ACC(c) / ACC(full)
  double relative_ce = 0.0;   // FPS(c) / max FPS
};

struct BalanceCurve {
  ranking::Strategy strategy = ranking::Strategy::kAveraging;
  std::vector<BalancePoint> points;  // ascending eta
};

BalanceCurve balance_curve(std::span<const PruneResult> results);

// --- reports -----------------------------------------------------------------------

struct ReportContext {
  std::vector<std::string> channel_labels;
  std::size_t n_classes = 2;
  std::vector<ranking::ChannelRanking> rankings;
  std::string config_echo;  // JSON object text, embedded verbatim
  std::map<std::string, std::uint64_t> seeds;
};

std::string report_csv(std::span<const PruneResult> results);
std::string report_json(std::span<const PruneResult> results, const ReportContext& ctx);
std::string balance_csv(std::span<const BalanceCurve> curves);

// Writes <stem>.csv and <stem>.json.
void emit_report(std::span<const PruneResult> results, const ReportContext& ctx,
                 const std::filesystem::path& stem);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace plugselect::evaluation

#endif  // PLUGSELECT_EVALUATION_HPP_
