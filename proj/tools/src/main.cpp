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


#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "plugselect/error.hpp"
#include "run_config.hpp"

namespace {

namespace cli = plugselect::cli;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

struct Flags {
  std::string config;
  std::string out;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<int> steps;
  std::string strategy;
  std::optional<std::size_t> channels;
  std::string densities;
  std::vector<std::string> sets;
  bool dry_run = false;
};

void add_shared(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "key = value config file");
  app.add_option("--out", f.out, "output directory (run.out)");
  app.add_option("--data", f.data, "dataset directory (data.path)");
  app.add_option("--seed", f.seed, "master seed (seed.master)");
  app.add_option("--jobs", f.jobs, "worker threads (run.jobs)");
  app.add_option("--steps", f.steps, "integration steps M (ig.steps)");
  app.add_option("--strategy", f.strategy, "averaging | voting | random (rank.strategy)");
  app.add_option("--channels", f.channels, "channels to select, voting k (rank.channels)");
  app.add_option("--densities", f.densities, "comma-separated densities (eval.densities)");
  app.add_option("--set", f.sets, "override any config key, key=value (repeatable)");
  app.add_flag("--dry-run", f.dry_run, "validate and print the resolved config only");
}

// Config file first, then --set, then the dedicated flags.
cli::Assignments collect(const Flags& f) {
  cli::Assignments a;
  if (!f.config.empty()) a = cli::read_config_file(f.config);
  for (const auto& s : f.sets) a.push_back(cli::parse_assignment(s));
  if (!f.out.empty()) a.emplace_back("run.out", f.out);
  if (!f.data.empty()) a.emplace_back("data.path", f.data);
  if (f.seed) a.emplace_back("seed.master", std::to_string(*f.seed));
  if (f.jobs) a.emplace_back("run.jobs", std::to_string(*f.jobs));
  if (f.steps) a.emplace_back("ig.steps", std::to_string(*f.steps));
  if (!f.strategy.empty()) a.emplace_back("rank.strategy", f.strategy);
  if (f.channels) a.emplace_back("rank.channels", std::to_string(*f.channels));
  if (!f.densities.empty()) a.emplace_back("eval.densities", f.densities);
  return a;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("plugselect");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  const char* env = std::getenv("PLUGSELECT_LOG");
  if (env == nullptr || *env == '\0') return;
  const std::string level = env;
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else throw plugselect::ValidationError("PLUGSELECT_LOG must be error, info or debug");
}

int exit_code(plugselect::ErrorKind kind) {
  switch (kind) {
    case plugselect::ErrorKind::kValidation: return kExitValidation;
    case plugselect::ErrorKind::kNumerical: return kExitRuntime;
    case plugselect::ErrorKind::kIo: return kExitIo;
  }
  return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel selection for EEG decoders via integrated gradients"};
  app.require_subcommand(1);
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print every config key and exit");

  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "generate a synthetic dataset with planted channels into --out"},
      {"train", "train one full-channel decoder per subject"},
      {"attribute", "integrated-gradients attributions per subject"},
      {"rank", "rank channels from the attributions"},
      {"evaluate", "retrain on selected channels and write reports"},
      {"run-all", "synth (unless --data), train, attribute, rank, evaluate"},
  };
  for (const auto& [name, help] : commands) add_shared(*app.add_subcommand(name, help), flags);

  // --list-keys works without a subcommand.
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--list-keys") {
      for (const auto& [key, help] : cli::config_keys()) std::cout << key << "  " << help << "\n";
      return 0;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    setup_logging();
    const auto cfg = cli::build_config(collect(flags));
    cfg.validate();
    if (flags.dry_run) {
      std::cout << cfg.to_text();
      spdlog::info("{}: configuration is valid (dry run)", command);
      return 0;
    }
    cli::run_command(command, cfg);
    return 0;
  } catch (const plugselect::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
}
