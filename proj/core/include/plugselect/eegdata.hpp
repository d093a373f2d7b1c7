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

#ifndef PLUGSELECT_EEGDATA_HPP_
#define PLUGSELECT_EEGDATA_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plugselect/matrix.hpp"

namespace plugselect::eegdata {

// One recorded trial: channels x samples.
struct EegTrial {
  Matrix data;
  int label = 0;
  int subject_id = 0;
  int trial_id = 0;

  std::size_t n_channels() const noexcept { return data.rows(); }
  std::size_t n_samples() const noexcept { return data.cols(); }
};

struct EegDataset {
  std::vector<EegTrial> trials;
  double fs = 0.0;
  std::vector<std::string> channel_labels;
  std::vector<std::string> class_names;

  std::size_t n_channels() const noexcept { return channel_labels.size(); }
  std::size_t n_classes() const noexcept { return class_names.size(); }

  // Sorted, unique subject ids.
  std::vector<int> subject_ids() const;
  // Same metadata, only the trials of one subject (original order kept).
  EegDataset subject(int subject_id) const;
  // Same trials restricted to the given channels (in the given order).
  EegDataset select_channels(std::span<const std::size_t> channels) const;

  // Throws ValidationError if any invariant is broken: shared C, label range,
  // finite values, positive fs.
  void validate() const;
};

// Decision window: a contiguous slice of a trial.
struct Window {
  Matrix data;
  int label = 0;
  int subject_id = 0;
  int window_index = 0;
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

struct SynthSpec {
  int n_channels = 16;
  int n_informative = 4;
  int n_subjects = 20;
  int trials_per_subject = 40;
  double fs = 128.0;
  double trial_seconds = 2.0;
  int n_classes = 2;
  double signal_amplitude = 1.0;
  double noise_amplitude = 1.0;
  std::vector<double> carrier_hz_per_class = {10.0, 14.0};

  void validate() const;
};

struct SynthResult {
  EegDataset dataset;
  // Sorted indices of the channels that carry class information.
  std::vector<std::size_t> informative_channels;
};

// --- file I/O -------------------------------------------------------------

// Reads `manifest.json` plus one binary file per trial.
EegDataset load_dataset(const std::filesystem::path& dir);
// Writes `manifest.json` and `trial_<id>.bin` files. Values are stored as
// float32, so only float-representable data round-trips bit-exactly.
void save_dataset(const EegDataset& dataset, const std::filesystem::path& dir);

// Single-trial binary codec ("EEGT" header + channel-major float32).
std::vector<std::uint8_t> encode_trial(const Matrix& data);
Matrix decode_trial(std::span<const std::uint8_t> bytes);

// --- preprocessing --------------------------------------------------------

NormStats zscore_fit(std::span<const Window> training_windows);
Window zscore_apply(const Window& window, const NormStats& stats);
std::vector<Window> zscore_apply(std::span<const Window> windows,
                                 const NormStats& stats);

std::vector<Window> segment_windows(const EegDataset& dataset,
                                    double window_seconds,
                                    double overlap_fraction);

// Segmentation-and-reconstruction augmentation: appends (factor - 1)
// synthetic trials per input trial, each assembled position-wise from
// segments of same-class donor trials.
std::vector<EegTrial> sr_augment(std::span<const EegTrial> trials,
                                 int n_segments, int factor,
                                 std::uint64_t seed);

SynthResult synth_generate(const SynthSpec& spec, std::uint64_t seed);

// Stratified trial-level split of one dataset.
std::pair<EegDataset, EegDataset> split_train_test(const EegDataset& dataset,
                                                   double test_fraction,
                                                   std::uint64_t seed);

// Default 10-20 labels for synthetic data with `n` channels.
std::vector<std::string> default_channel_labels(std::size_t n);

}  // namespace plugselect::eegdata

#endif  // PLUGSELECT_EEGDATA_HPP_
