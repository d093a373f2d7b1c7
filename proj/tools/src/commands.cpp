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


#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <optional>
#include <utility>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "plugselect/attribution.hpp"
#include "plugselect/diffnet.hpp"
#include "plugselect/error.hpp"
#include "plugselect/evaluation.hpp"
#include "plugselect/parallel.hpp"
#include "plugselect/ranking.hpp"
#include "plugselect/seed.hpp"
#include "plugselect/topomap.hpp"

#ifndef PLUGSELECT_VERSION
#define PLUGSELECT_VERSION "0.0.0"
#endif

namespace plugselect::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using evaluation::read_text_file;
using evaluation::write_text_file;

std::string subject_stem(int subject_id) { return "subject_" + std::to_string(subject_id); }

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// Everything one invocation has loaded or produced so far.
struct Run {
  const RunConfig& cfg;
  Layout layout;
  std::optional<fs::path> data_path;
  std::vector<StageTiming> timings;
  bool name_stages = false;

  std::optional<eegdata::EegDataset> dataset;
  std::vector<evaluation::SubjectData> subjects;
  std::vector<diffnet::ConvDecoder> models;
  std::vector<attribution::SubjectAttribution> attributions;
  std::vector<std::string> attribution_labels;
};

template <typename F>
void stage(Run& run, const std::string& name, F&& body) {
  spdlog::info("{}: start", name);
  const auto t0 = std::chrono::steady_clock::now();
  if (!run.name_stages) {
    body();
  } else {
    const std::string prefix = "stage " + name + ": ";
    try {
      body();
    } catch (const ValidationError& e) {
      throw ValidationError(prefix + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(prefix + e.what());
    } catch (const IoError& e) {
      throw IoError(prefix + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(prefix + e.what());
    }
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  spdlog::info("{}: done in {:.2f} s", name, dt.count());
  run.timings.push_back({name, dt.count()});
}

const eegdata::EegDataset& dataset(Run& run) {
  if (!run.dataset) {
    if (!run.data_path) {
      throw ValidationError("no dataset given: set data.path or pass --data");
    }
    if (!fs::is_directory(*run.data_path)) {
      throw ValidationError("dataset directory " + run.data_path->string() + " does not exist");
    }
    spdlog::debug("loading dataset from {}", run.data_path->string());
    run.dataset = eegdata::load_dataset(*run.data_path);
  }
  return *run.dataset;
}

const std::vector<evaluation::SubjectData>& subjects(Run& run) {
  if (run.subjects.empty()) {
    const auto& data = dataset(run);
    run.subjects = evaluation::prepare_subjects(data, run.cfg.preprocess_spec(), run.cfg.jobs);
    spdlog::debug("prepared {} subjects", run.subjects.size());
  }
  return run.subjects;
}

const std::vector<diffnet::ConvDecoder>& models(Run& run) {
  if (!run.models.empty()) return run.models;
  const auto& subs = subjects(run);
  const auto& data = dataset(run);
  for (const auto& s : subs) {
    auto ck = diffnet::load_checkpoint(run.layout.checkpoint(s.subject_id));
    if (ck.model.input_channels() != s.n_channels() ||
        ck.model.input_samples() != s.n_samples() ||
        ck.model.n_classes() != data.n_classes()) {
      throw ValidationError(
          "checkpoint for subject " + std::to_string(s.subject_id) + " expects " +
          std::to_string(ck.model.input_channels()) + " x " +
          std::to_string(ck.model.input_samples()) + " inputs and " +
          std::to_string(ck.model.n_classes()) + " classes, data has " +
          std::to_string(s.n_channels()) + " x " + std::to_string(s.n_samples()) +
          " and " + std::to_string(data.n_classes()));
    }
    run.models.push_back(std::move(ck.model));
  }
  return run.models;
}

// Reads out/attributions/subject_<id>.json for every subject of the dataset,
// or every file present when no dataset is needed.
const std::vector<attribution::SubjectAttribution>& attributions(Run& run,
                                                                 bool need_dataset) {
  if (!run.attributions.empty()) return run.attributions;
  std::vector<fs::path> files;
  if (need_dataset) {
    for (int id : dataset(run).subject_ids()) files.push_back(run.layout.attribution(id));
  } else {
    const auto dir = run.layout.attributions();
    if (!fs::is_directory(dir)) {
      throw IoError("no attributions under " + dir.string() + "; run attribute first");
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw IoError("no attribution files found");
  for (const auto& f : files) {
    const auto text = read_text_file(f);
    run.attributions.push_back(attribution::attribution_from_json(text));
    if (run.attribution_labels.empty()) {
      try {
        run.attribution_labels =
            json::parse(text).at("channel_labels").get<std::vector<std::string>>();
      } catch (const json::exception& e) {
        throw IoError("malformed attribution file " + f.string() + ": " + e.what());
      }
    }
  }
  std::sort(run.attributions.begin(), run.attributions.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
  const auto c = run.attributions.front().values.size();
  for (const auto& a : run.attributions) {
    if (a.values.size() != c) throw ValidationError("attribution files disagree on channel count");
  }
  if (run.attribution_labels.size() != c) {
    throw ValidationError("attribution channel labels do not match its values");
  }
  return run.attributions;
}

// --- stages -------------------------------------------------------------------

void do_synth(const RunConfig& cfg, const fs::path& dir) {
  const auto result = eegdata::synth_generate(cfg.synth, cfg.seeds.data);
  eegdata::save_dataset(result.dataset, dir);
  json truth = {{"seed", cfg.seeds.data},
                {"n_channels", result.dataset.n_channels()},
                {"informative_channels", result.informative_channels}};
  std::vector<std::string> labels;
  for (auto c : result.informative_channels) labels.push_back(result.dataset.channel_labels[c]);
  truth["informative_labels"] = labels;
  write_text_file(dir / "ground_truth.json", truth.dump(2) + "\n");
  spdlog::info("synth: {} trials, {} channels, planted {}", result.dataset.trials.size(),
               result.dataset.n_channels(), json(result.informative_channels).dump());
}

void do_train(Run& run) {
  const auto& subs = subjects(run);
  const auto& data = dataset(run);
  const auto ecfg = run.cfg.eval_config();
  std::vector<std::optional<diffnet::TrainResult>> results(subs.size());
  parallel_for(subs.size(), run.cfg.jobs, [&](std::size_t i) {
    try {
      results[i] = evaluation::train_subject(subs[i], data.n_classes(), ecfg);
    } catch (const NumericalError& e) {
      throw NumericalError("subject " + std::to_string(subs[i].subject_id) + ": " + e.what());
    }
  });
  make_dirs(run.layout.checkpoints());
  std::string log = "subject,epoch,loss\n";
  run.models.clear();
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& r = *results[i];
    diffnet::save_checkpoint(r.model, r.meta, run.layout.checkpoint(subs[i].subject_id));
    for (std::size_t e = 0; e < r.loss_history.size(); ++e) {
      log += std::to_string(subs[i].subject_id) + "," + std::to_string(e + 1) + "," +
             fmt_g(r.loss_history[e]) + "\n";
    }
    spdlog::info("train: subject {} final loss {:.4f}, train ACC {:.3f}", subs[i].subject_id,
                 r.meta.final_loss, diffnet::accuracy(r.model, subs[i].train));
    run.models.push_back(r.model);
  }
  write_text_file(run.layout.root / "loss_log.csv", log);
}

void do_attribute(Run& run) {
  const auto& subs = subjects(run);
  const auto& mods = models(run);
  const auto& labels = dataset(run).channel_labels;
  make_dirs(run.layout.attributions());
  run.attributions.clear();
  for (std::size_t i = 0; i < subs.size(); ++i) {
    auto attr = attribution::attribute_subject(mods[i], subs[i].train, run.cfg.ig, run.cfg.jobs);
    attr.subject_id = subs[i].subject_id;
    write_text_file(run.layout.attribution(subs[i].subject_id),
                    attribution::to_json(attr, run.cfg.ig, labels) + "\n");
    spdlog::info("attribute: subject {} over {} windows, mean completeness gap {:.3g}",
                 attr.subject_id, attr.n_windows, attr.completeness_gap_mean);
    run.attributions.push_back(std::move(attr));
  }
  run.attribution_labels = labels;
}

std::vector<std::size_t> top_channels(const ranking::ChannelRanking& r, std::size_t c) {
  return ranking::select_top(r, c).channels;
}

void do_rank(Run& run) {
  const auto& cfg = run.cfg;
  const auto& attrs = attributions(run, false);
  const auto& labels = run.attribution_labels;
  const std::size_t n_channels = labels.size();
  const auto name = ranking::to_string(cfg.strategy);
  if (cfg.channels && *cfg.channels > n_channels) {
    throw ValidationError("--channels " + std::to_string(*cfg.channels) + " exceeds the " +
                          std::to_string(n_channels) + " available channels");
  }
  json doc;
  switch (cfg.strategy) {
    case ranking::Strategy::kAveraging: {
      const auto r = ranking::rank_averaging(attrs, cfg.eval.sign);
      doc = json::parse(ranking::to_json(r, labels));
      if (cfg.channels) doc["selected"] = top_channels(r, *cfg.channels);
      break;
    }
    case ranking::Strategy::kVoting: {
      if (!cfg.channels) throw ValidationError("--strategy voting requires --channels k");
      const auto r = ranking::rank_voting(attrs, *cfg.channels, cfg.eval.sign);
      doc = json::parse(ranking::to_json(r, labels));
      doc["selected"] = top_channels(r, *cfg.channels);
      break;
    }
    case ranking::Strategy::kRandom: {
      if (!cfg.channels) throw ValidationError("--strategy random requires --channels c");
      const auto seed = derive_seed(cfg.seeds.random, *cfg.channels);
      doc = {{"strategy", name},
             {"c", *cfg.channels},
             {"n_sets", cfg.eval.n_random_sets},
             {"seed", seed},
             {"channel_labels", labels},
             {"sets", ranking::random_subsets(n_channels, *cfg.channels,
                                              cfg.eval.n_random_sets, seed)}};
      break;
    }
  }
  write_text_file(run.layout.ranking(name), doc.dump(2) + "\n");
  spdlog::info("rank: wrote {}", run.layout.ranking(name).string());
}

void do_evaluate(Run& run) {
  const auto& cfg = run.cfg;
  const auto& subs = subjects(run);
  const auto& data = dataset(run);
  const auto& mods = models(run);
  const auto ecfg = cfg.eval_config();

  bool need_attrs = false;
  for (auto s : cfg.strategies) need_attrs = need_attrs || s != ranking::Strategy::kRandom;
  std::vector<attribution::SubjectAttribution> attrs;
  if (need_attrs || fs::is_directory(run.layout.attributions())) {
    attrs = attributions(run, true);
    if (attrs.front().values.size() != data.n_channels()) {
      throw ValidationError("attributions have " + std::to_string(attrs.front().values.size()) +
                            " channels, dataset has " + std::to_string(data.n_channels()));
    }
  }

  // Full-channel rows reuse the trained checkpoints.
  evaluation::EvaluationCache cache;
  std::vector<std::size_t> all(data.n_channels());
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    cache.put(subs[i].subject_id, all,
              {mods[i], evaluation::evaluate_subject(mods[i], subs[i].test, subs[i].subject_id)});
  }

  std::vector<evaluation::PruneResult> rows;
  std::vector<evaluation::BalanceCurve> curves;
  for (auto strategy : cfg.strategies) {
    spdlog::info("evaluate: {} over {} densities", ranking::to_string(strategy),
                 cfg.densities.size());
    auto results = evaluation::prune_and_evaluate(subs, attrs, strategy, cfg.densities,
                                                  data.n_classes(), ecfg, &cache);
    curves.push_back(evaluation::balance_curve(results));
    for (const auto& r : results) {
      spdlog::info("evaluate: {} eta {:.3f} c {} ACC {:.4f} +- {:.4f}",
                   ranking::to_string(strategy), r.eta, r.c, r.metrics.acc.mean,
                   r.metrics.acc.std);
    }
    rows.insert(rows.end(), results.begin(), results.end());
  }

  evaluation::ReportContext ctx;
  ctx.channel_labels = data.channel_labels;
  ctx.n_classes = data.n_classes();
  ctx.config_echo = cfg.to_json();
  ctx.seeds = cfg.seeds.named();
  if (!attrs.empty()) {
    const auto averaged = ranking::rank_averaging(attrs, cfg.eval.sign);
    const double lowest = *std::min_element(cfg.densities.begin(), cfg.densities.end());
    const std::size_t k = cfg.eval.vote_k.value_or(
        cfg.channels.value_or(evaluation::channels_for_density(lowest, data.n_channels())));
    ctx.rankings.push_back(averaged);
    ctx.rankings.push_back(ranking::rank_voting(attrs, k, cfg.eval.sign));

    topomap::TopomapOptions opts;
    opts.selected = top_channels(averaged, cfg.channels.value_or(k));
    opts.title = "averaging attribution";
    try {
      topomap::emit_topomap_svg(averaged.scores, data.channel_labels,
                                run.layout.root / "topomap.svg", opts);
    } catch (const ValidationError& e) {
      spdlog::warn("evaluate: skipping topomap.svg: {}", e.what());
    }
  }
  make_dirs(run.layout.root);
  evaluation::emit_report(rows, ctx, run.layout.root / "report");
  write_text_file(run.layout.root / "balance.csv", evaluation::balance_csv(curves));
}

void write_meta(const Run& run, const std::string& command, const fs::path& dir,
                const std::string& error) {
  json stages = json::array();
  double total = 0.0;
  for (const auto& t : run.timings) {
    stages.push_back({{"name", t.name}, {"seconds", t.seconds}});
    total += t.seconds;
  }
  json meta = {{"tool", "plugselect"},
               {"version", PLUGSELECT_VERSION},
               {"command", command},
               {"status", error.empty() ? "ok" : "failed"},
               {"config", json::parse(run.cfg.to_json())},
               {"config_text", run.cfg.to_text()},
               {"seeds", run.cfg.seeds.named()},
               {"jobs", run.cfg.jobs},
               {"stages", stages},
               {"total_seconds", total}};
  if (run.data_path) meta["dataset"] = run.data_path->string();
  if (!error.empty()) meta["error"] = error;
  make_dirs(dir);
  write_text_file(dir / "run_meta.json", meta.dump(2) + "\n");
}

}  // namespace

fs::path Layout::checkpoint(int subject_id) const {
  return checkpoints() / subject_stem(subject_id);
}

fs::path Layout::attribution(int subject_id) const {
  return attributions() / (subject_stem(subject_id) + ".json");
}

fs::path Layout::ranking(const std::string& strategy) const {
  return root / ("ranking_" + strategy + ".json");
}

std::vector<StageTiming> run_command(const std::string& command, const RunConfig& cfg) {
  cfg.validate();
  Run run{cfg, Layout{cfg.out}, cfg.data_path, {}, false, {}, {}, {}, {}, {}};
  const auto meta_dir = cfg.out;
  try {
    if (command == "synth") {
      stage(run, "synth", [&] { do_synth(cfg, cfg.out); });
    } else if (command == "train") {
      stage(run, "train", [&] { do_train(run); });
    } else if (command == "attribute") {
      stage(run, "attribute", [&] { do_attribute(run); });
    } else if (command == "rank") {
      stage(run, "rank", [&] { do_rank(run); });
    } else if (command == "evaluate") {
      stage(run, "evaluate", [&] { do_evaluate(run); });
    } else if (command == "run-all") {
      run.name_stages = true;
      if (!run.data_path) {
        run.data_path = run.layout.dataset();
        stage(run, "synth", [&] { do_synth(cfg, *run.data_path); });
      }
      stage(run, "train", [&] { do_train(run); });
      stage(run, "attribute", [&] { do_attribute(run); });
      stage(run, "rank", [&] { do_rank(run); });
      stage(run, "evaluate", [&] { do_evaluate(run); });
    } else {
      throw ValidationError("unknown command '" + command + "'");
    }
  } catch (const std::exception& e) {
    try {
      write_meta(run, command, meta_dir, e.what());
    } catch (const std::exception&) {
      // The original error matters more than a missing meta file.
    }
    throw;
  }
  write_meta(run, command, meta_dir, "");
  return run.timings;
}

}  // namespace plugselect::cli
