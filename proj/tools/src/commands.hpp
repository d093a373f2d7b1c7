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


#ifndef PLUGSELECT_TOOLS_COMMANDS_HPP_
#define PLUGSELECT_TOOLS_COMMANDS_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace plugselect::cli {

inline constexpr const char* kCommands[] = {"synth", "train", "attribute",
                                            "rank", "evaluate", "run-all"};

// Output layout below RunConfig::out.
struct Layout {
  std::filesystem::path root;
  std::filesystem::path dataset() const { return root / "dataset"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path checkpoint(int subject_id) const;
  std::filesystem::path attributions() const { return root / "attributions"; }
  std::filesystem::path attribution(int subject_id) const;
  std::filesystem::path ranking(const std::string& strategy) const;
  std::filesystem::path run_meta() const { return root / "run_meta.json"; }
};

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

// Runs one subcommand and writes run_meta.json next to its outputs. `synth`
// writes the dataset straight into cfg.out; every other command reads the
// dataset from cfg.data_path (run-all synthesizes into out/dataset when it
// is unset). Errors keep their plugselect::Error kind; run-all prefixes
// the failing stage name.
std::vector<StageTiming> run_command(const std::string& command, const RunConfig& cfg);

}  // namespace plugselect::cli

#endif  // PLUGSELECT_TOOLS_COMMANDS_HPP_
