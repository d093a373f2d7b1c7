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


#ifndef PLUGSELECT_TOOLS_RUN_CONFIG_HPP_
#define PLUGSELECT_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plugselect/attribution.hpp"
#include "plugselect/eegdata.hpp"
#include "plugselect/evaluation.hpp"
#include "plugselect/ranking.hpp"

namespace plugselect::cli {

// Named random streams. Each one is derive_seed(master, stream) unless the
// config pins it explicitly.
struct Seeds {
  std::uint64_t master = 1;
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t augment = 0;
  std::uint64_t model = 0;
  std::uint64_t train = 0;
  std::uint64_t random = 0;
  std::map<std::string, std::uint64_t> named() const;
};

struct RunConfig {
  std::optional<std::filesystem::path> data_path;
  eegdata::SynthSpec synth;
  // Seeds and the filter are kept apart; see preprocess_spec().
  evaluation::PreprocessSpec preprocess;
  filter::FilterSpec filter;
  bool filter_enabled = true;
  // Model, training, random baseline and throughput settings.
  evaluation::EvalConfig eval;
  attribution::IgConfig ig;
  ranking::Strategy strategy = ranking::Strategy::kAveraging;
  std::optional<std::size_t> channels;
  std::vector<ranking::Strategy> strategies = {ranking::Strategy::kAveraging,
                                               ranking::Strategy::kVoting,
                                               ranking::Strategy::kRandom};
  std::vector<double> densities = {1.0, 0.75, 0.5, 0.25};
  Seeds seeds;
  std::filesystem::path out = "plugselect_out";
  std::size_t jobs = 1;

  RunConfig();
  // Core specs with the named seeds, filter and job count filled in.
  evaluation::PreprocessSpec preprocess_spec() const;
  evaluation::EvalConfig eval_config() const;
  // Throws ValidationError on the first broken constraint.
  void validate() const;
  // Canonical key = value listing of every setting that affects results
  // (out and jobs excluded). Parsing it back gives an identical config.
  std::string to_text() const;
  // The same settings as a JSON object.
  std::string to_json() const;
};

// Ordered key/value assignments; later entries win.
using Assignments = std::vector<std::pair<std::string, std::string>>;

// Format: one `key = value` per line, `#` starts a comment, blank lines are
// ignored. Lists are comma separated.
Assignments parse_config_text(const std::string& text);
Assignments read_config_file(const std::filesystem::path& path);
// "key=value" as given to --set.
std::pair<std::string, std::string> parse_assignment(const std::string& text);

// Applies assignments over the defaults and resolves derived seeds.
RunConfig build_config(const Assignments& assignments);

// Every recognized key with a one-line description.
std::vector<std::pair<std::string, std::string>> config_keys();

}  // namespace plugselect::cli

#endif  // PLUGSELECT_TOOLS_RUN_CONFIG_HPP_
