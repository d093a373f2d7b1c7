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

#include "plugselect/eegdata.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include <nlohmann/json.hpp>
#include "plugselect/error.hpp"

namespace plugselect::eegdata {
namespace {

using nlohmann::json;

constexpr std::array<char, 4> kTrialMagic = {'E', 'E', 'G', 'T'};
constexpr std::size_t kTrialHeaderBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

// Standard 10-20 / 10-10 names, ordered so that short prefixes still cover
// the whole scalp.
constexpr std::array<const char*, 64> kDefaultLabels = {
    "Fp1", "Fp2", "F7",  "F3",  "Fz",  "F4",  "F8",  "T7",  "C3",  "Cz",
    "C4",  "T8",  "P7",  "P3",  "Pz",  "P4",  "P8",  "O1",  "O2",  "Oz",
    "AF3", "AF4", "FC5", "FC1", "FC2", "FC6", "CP5", "CP1", "CP2", "CP6",
    "PO3", "PO4", "Fpz", "AF7", "AF8", "F5",  "F1",  "F2",  "F6",  "FT7",
    "FC3", "FCz", "FC4", "FT8", "C5",  "C1",  "C2",  "C6",  "TP7", "CP3",
    "CPz", "CP4", "TP8", "P5",  "P1",  "P2",  "P6",  "PO7", "POz", "PO8",
    "AFz", "PO5", "PO6", "Iz"};

}  // namespace

std::vector<std::string> default_channel_labels(std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(i < kDefaultLabels.size() ? kDefaultLabels[i]
                                            : "Ch" + std::to_string(i + 1));
  }
  return out;
}

// --- dataset -------------------------------------------------------------

std::vector<int> EegDataset::subject_ids() const {
  std::set<int> ids;
  for (const auto& t : trials) ids.insert(t.subject_id);
  return {ids.begin(), ids.end()};
}

EegDataset EegDataset::subject(int subject_id) const {
  EegDataset out{{}, fs, channel_labels, class_names};
  for (const auto& t : trials) {
    if (t.subject_id == subject_id) out.trials.push_back(t);
  }
  return out;
}

EegDataset EegDataset::select_channels(
    std::span<const std::size_t> channels) const {
  EegDataset out{{}, fs, {}, class_names};
  for (std::size_t c : channels) {
    if (c >= channel_labels.size()) {
      throw ValidationError("channel index " + std::to_string(c) +
                            " out of range");
    }
    out.channel_labels.push_back(channel_labels[c]);
  }
  out.trials.reserve(trials.size());
  for (const auto& t : trials) {
    out.trials.push_back({t.data.select_rows(channels), t.label, t.subject_id,
                          t.trial_id});
  }
  return out;
}

void EegDataset::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) {
    throw ValidationError("sampling rate must be positive and finite");
  }
  if (channel_labels.empty()) throw ValidationError("dataset has no channels");
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    if (t.data.rows() != channel_labels.size()) {
      throw ValidationError("trial " + std::to_string(i) + " has " +
                            std::to_string(t.data.rows()) +
                            " channels, dataset declares " +
                            std::to_string(channel_labels.size()));
    }
    if (t.data.cols() == 0) {
      throw ValidationError("trial " + std::to_string(i) + " has no samples");
    }
    if (t.label < 0 || static_cast<std::size_t>(t.label) >= class_names.size()) {
      throw ValidationError("trial " + std::to_string(i) + " label " +
                            std::to_string(t.label) + " outside [0, " +
                            std::to_string(class_names.size()) + ")");
    }
    if (!t.data.all_finite()) {
      throw ValidationError("trial " + std::to_string(i) +
                            " contains non-finite values");
    }
  }
}

// --- binary codec ----------------------------------------------------------

std::vector<std::uint8_t> encode_trial(const Matrix& data) {
  std::vector<std::uint8_t> out;
  out.reserve(kTrialHeaderBytes + 4 * data.size());
  out.insert(out.end(), kTrialMagic.begin(), kTrialMagic.end());
  put_u32(out, static_cast<std::uint32_t>(data.rows()));
  put_u32(out, static_cast<std::uint32_t>(data.cols()));
  put_u32(out, 0);
  for (double v : data.values()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Matrix decode_trial(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTrialHeaderBytes) {
    throw IoError("trial file truncated: " + std::to_string(bytes.size()) +
                  " bytes, header needs 16");
  }
  if (!std::equal(kTrialMagic.begin(), kTrialMagic.end(), bytes.begin())) {
    throw IoError("trial file header magic mismatch (expected \"EEGT\")");
  }
  const std::size_t channels = get_u32(bytes, 4);
  const std::size_t samples = get_u32(bytes, 8);
  const std::size_t expected = kTrialHeaderBytes + 4 * channels * samples;
  if (bytes.size() != expected) {
    throw IoError("trial file has " + std::to_string(bytes.size()) +
                  " bytes, header implies " + std::to_string(expected));
  }
  Matrix out(channels, samples);
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, kTrialHeaderBytes + 4 * i));
  }
  return out;
}

// --- file I/O --------------------------------------------------------------

EegDataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest " + manifest_path.string() + ": " + e.what());
  }

  EegDataset ds;
  std::vector<json> entries;
  try {
    ds.fs = manifest.at("fs").get<double>();
    ds.channel_labels = manifest.at("channel_labels").get<std::vector<std::string>>();
    ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();
    entries = manifest.at("trials").get<std::vector<json>>();
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest " + manifest_path.string() + ": " + e.what());
  }

  ds.trials.reserve(entries.size());
  for (const auto& entry : entries) {
    EegTrial trial;
    std::string file;
    try {
      file = entry.at("file").get<std::string>();
      trial.label = entry.at("label").get<int>();
      trial.subject_id = entry.at("subject_id").get<int>();
      trial.trial_id = entry.at("trial_id").get<int>();
    } catch (const json::exception& e) {
      throw IoError("corrupt manifest trial entry: " + std::string(e.what()));
    }
    const auto path = dir / file;
    std::ifstream bin(path, std::ios::binary);
    if (!bin) throw IoError("cannot open trial file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(bin)),
                                    std::istreambuf_iterator<char>());
    trial.data = decode_trial(bytes);
    if (trial.data.rows() != ds.channel_labels.size()) {
      throw IoError("dimension mismatch in " + path.string() + ": manifest has " +
                    std::to_string(ds.channel_labels.size()) +
                    " channels, binary header has " +
                    std::to_string(trial.data.rows()));
    }
    ds.trials.push_back(std::move(trial));
  }
  ds.validate();
  return ds;
}

void save_dataset(const EegDataset& dataset, const std::filesystem::path& dir) {
  dataset.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  json trials = json::array();
  for (std::size_t i = 0; i < dataset.trials.size(); ++i) {
    const auto& t = dataset.trials[i];
    const std::string file = "trial_" + std::to_string(i) + ".bin";
    const auto bytes = encode_trial(t.data);
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + (dir / file).string());
    trials.push_back({{"file", file},
                      {"label", t.label},
                      {"subject_id", t.subject_id},
                      {"trial_id", t.trial_id}});
  }
  const json manifest = {{"fs", dataset.fs},
                         {"channel_labels", dataset.channel_labels},
                         {"class_names", dataset.class_names},
                         {"trials", trials}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + (dir / "manifest.json").string());
}

// --- z-score -----------------------------------------------------------------

NormStats zscore_fit(std::span<const Window> training_windows) {
  if (training_windows.size() < 2) {
    throw ValidationError("z-score fit needs at least 2 training windows");
  }
  const std::size_t channels = training_windows.front().data.rows();
  NormStats stats{std::vector<double>(channels, 0.0),
                  std::vector<double>(channels, 0.0)};
  std::size_t count = 0;
  for (const auto& w : training_windows) {
    if (w.data.rows() != channels) {
      throw ValidationError("z-score fit: windows disagree on channel count");
    }
    for (std::size_t c = 0; c < channels; ++c) {
      for (double v : w.data.row(c)) stats.mean[c] += v;
    }
    count += w.data.cols();
  }
  for (double& m : stats.mean) m /= static_cast<double>(count);
  for (const auto& w : training_windows) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (double v : w.data.row(c)) {
        const double d = v - stats.mean[c];
        stats.std[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    stats.std[c] = std::sqrt(stats.std[c] / static_cast<double>(count));
    if (!(stats.std[c] > 0.0)) {
      throw ValidationError("z-score fit: channel " + std::to_string(c) +
                            " has zero variance");
    }
  }
  return stats;
}

Window zscore_apply(const Window& window, const NormStats& stats) {
  const std::size_t channels = window.data.rows();
  if (stats.mean.size() != channels || stats.std.size() != channels) {
    throw ValidationError("z-score stats have " +
                          std::to_string(stats.mean.size()) +
                          " channels, window has " + std::to_string(channels));
  }
  Window out = window;
  for (std::size_t c = 0; c < channels; ++c) {
    for (double& v : out.data.row(c)) v = (v - stats.mean[c]) / stats.std[c];
  }
  return out;
}

std::vector<Window> zscore_apply(std::span<const Window> windows,
                                 const NormStats& stats) {
  std::vector<Window> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(zscore_apply(w, stats));
  return out;
}

// --- windowing -----------------------------------------------------------------

std::vector<Window> segment_windows(const EegDataset& dataset,
                                    double window_seconds,
                                    double overlap_fraction) {
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw ValidationError("overlap fraction must lie in [0, 1)");
  }
  const auto width = static_cast<std::size_t>(std::llround(dataset.fs * window_seconds));
  if (width < 1) throw ValidationError("window shorter than one sample");
  const auto stride = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(static_cast<double>(width) * (1.0 - overlap_fraction))));

  std::vector<Window> out;
  std::map<int, int> next_index;
  for (const auto& trial : dataset.trials) {
    if (trial.n_samples() < width) {
      throw ValidationError("window of " + std::to_string(width) +
                            " samples longer than trial " +
                            std::to_string(trial.trial_id) + " (" +
                            std::to_string(trial.n_samples()) + " samples)");
    }
    int& index = next_index[trial.subject_id];
    for (std::size_t start = 0; start + width <= trial.n_samples(); start += stride) {
      out.push_back({trial.data.slice_cols(start, width), trial.label,
                     trial.subject_id, index++});
    }
  }
  return out;
}

// --- augmentation --------------------------------------------------------------

std::vector<EegTrial> sr_augment(std::span<const EegTrial> trials,
                                 int n_segments, int factor,
                                 std::uint64_t seed) {
  if (factor < 1) throw ValidationError("augmentation factor must be >= 1");
  if (n_segments < 1) throw ValidationError("n_segments must be >= 1");
  std::vector<EegTrial> out(trials.begin(), trials.end());
  if (factor == 1 || trials.empty()) return out;

  const std::size_t samples = trials.front().n_samples();
  const std::size_t channels = trials.front().n_channels();
  for (const auto& t : trials) {
    if (t.n_samples() != samples || t.n_channels() != channels) {
      throw ValidationError("S&R augmentation needs equally shaped trials");
    }
  }
  if (static_cast<std::size_t>(n_segments) > samples) {
    throw ValidationError("more segments than samples");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < trials.size(); ++i) by_class[trials[i].label].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < 2) {
      throw ValidationError("class " + std::to_string(label) +
                            " has fewer than 2 trials; cannot recombine");
    }
  }

  const std::size_t seg_len = samples / static_cast<std::size_t>(n_segments);
  int next_id = 0;
  for (const auto& t : trials) next_id = std::max(next_id, t.trial_id + 1);

  std::mt19937_64 rng(seed);
  for (int rep = 1; rep < factor; ++rep) {
    for (const auto& source : trials) {
      const auto& donors = by_class[source.label];
      std::uniform_int_distribution<std::size_t> pick(0, donors.size() - 1);
      EegTrial synth{Matrix(channels, samples), source.label, source.subject_id,
                     next_id++};
      for (int p = 0; p < n_segments; ++p) {
        const auto& donor = trials[donors[pick(rng)]];
        const std::size_t begin = static_cast<std::size_t>(p) * seg_len;
        // The last segment absorbs the remainder of T / n_segments.
        const std::size_t end = (p + 1 == n_segments) ? samples : begin + seg_len;
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t s = begin; s < end; ++s) synth.data(c, s) = donor.data(c, s);
        }
      }
      out.push_back(std::move(synth));
    }
  }
  return out;
}

// --- synthetic data ------------------------------------------------------------

void SynthSpec::validate() const {
  if (n_channels < 1) throw ValidationError("n_channels must be >= 1");
  if (n_informative < 1 || n_informative > n_channels) {
    throw ValidationError("n_informative must lie in [1, n_channels]");
  }
  if (n_subjects < 1) throw ValidationError("n_subjects must be >= 1");
  if (trials_per_subject < 1) throw ValidationError("trials_per_subject must be >= 1");
  if (!(fs > 0.0)) throw ValidationError("fs must be positive");
  if (!(trial_seconds > 0.0) || std::llround(fs * trial_seconds) < 1) {
    throw ValidationError("trial shorter than one sample");
  }
  if (n_classes < 2) throw ValidationError("n_classes must be >= 2");
  if (!(signal_amplitude >= 0.0) || !(noise_amplitude >= 0.0)) {
    throw ValidationError("amplitudes must be non-negative");
  }
  if (carrier_hz_per_class.size() != static_cast<std::size_t>(n_classes)) {
    throw ValidationError("need one carrier frequency per class");
  }
  for (double f : carrier_hz_per_class) {
    if (!(f > 0.0) || f >= fs / 2.0) {
      throw ValidationError("carrier " + std::to_string(f) +
                            " Hz is not below Nyquist (" +
                            std::to_string(fs / 2.0) + " Hz)");
    }
  }
}

SynthResult synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> gain_dist(0.8, 1.2);

  const auto channels = static_cast<std::size_t>(spec.n_channels);
  std::vector<std::size_t> order(channels);
  for (std::size_t i = 0; i < channels; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> planted(order.begin(), order.begin() + spec.n_informative);
  std::sort(planted.begin(), planted.end());
  std::vector<bool> is_planted(channels, false);
  for (auto c : planted) is_planted[c] = true;

  SynthResult result;
  auto& ds = result.dataset;
  ds.fs = spec.fs;
  ds.channel_labels = default_channel_labels(channels);
  for (int k = 0; k < spec.n_classes; ++k) ds.class_names.push_back("class" + std::to_string(k));

  const auto samples = static_cast<std::size_t>(std::llround(spec.fs * spec.trial_seconds));
  int trial_id = 0;
  for (int s = 0; s < spec.n_subjects; ++s) {
    std::vector<double> gain(channels, 0.0);
    for (auto c : planted) gain[c] = gain_dist(rng);
    for (int i = 0; i < spec.trials_per_subject; ++i) {
      const int label = i % spec.n_classes;
      const double omega = 2.0 * std::numbers::pi * spec.carrier_hz_per_class[label];
      EegTrial trial{Matrix(channels, samples), label, s + 1, trial_id++};
      // One oscillatory source per trial, seen by every informative channel.
      const double phase = phase_dist(rng);
      for (std::size_t c = 0; c < channels; ++c) {
        const double amp = is_planted[c] ? spec.signal_amplitude * gain[c] : 0.0;
        auto row = trial.data.row(c);
        for (std::size_t t = 0; t < samples; ++t) {
          const double time = static_cast<double>(t) / spec.fs;
          const double v = amp * std::sin(omega * time + phase) +
                           spec.noise_amplitude * gauss(rng);
          // Stored as float32 on disk; keep memory and disk identical.
          row[t] = static_cast<float>(v);
        }
      }
      ds.trials.push_back(std::move(trial));
    }
  }
  result.informative_channels = std::move(planted);
  return result;
}

// --- split ---------------------------------------------------------------------

std::pair<EegDataset, EegDataset> split_train_test(const EegDataset& dataset,
                                                   double test_fraction,
                                                   std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.trials.size(); ++i) {
    by_class[dataset.trials[i].label].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<bool> is_test(dataset.trials.size(), false);
  for (auto& [label, members] : by_class) {
    if (members.size() < 2) {
      throw ValidationError("class " + std::to_string(label) +
                            " has fewer than 2 trials; cannot split");
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = static_cast<long long>(members.size());
    const auto n_test = std::clamp<long long>(
        std::llround(test_fraction * static_cast<double>(n)), 1, n - 1);
    for (long long k = 0; k < n_test; ++k) is_test[members[k]] = true;
  }
  EegDataset train{{}, dataset.fs, dataset.channel_labels, dataset.class_names};
  EegDataset test = train;
  for (std::size_t i = 0; i < dataset.trials.size(); ++i) {
    (is_test[i] ? test : train).trials.push_back(dataset.trials[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace plugselect::eegdata
