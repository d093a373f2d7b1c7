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

#include "plugselect/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>
#include "plugselect/error.hpp"
#include "plugselect/parallel.hpp"
#include "plugselect/seed.hpp"

namespace plugselect::evaluation {

using nlohmann::json;

// --- preprocessing -------------------------------------------------------------

SubjectData SubjectData::select_channels(std::span<const std::size_t> channels) const {
  SubjectData out;
  out.subject_id = subject_id;
  auto slice = [&](const std::vector<eegdata::Window>& src) {
    std::vector<eegdata::Window> dst;
    dst.reserve(src.size());
    for (const auto& w : src) {
      dst.push_back({w.data.select_rows(channels), w.label, w.subject_id, w.window_index});
    }
    return dst;
  };
  out.train = slice(train);
  out.test = slice(test);
  for (std::size_t c : channels) {
    out.stats.mean.push_back(stats.mean.at(c));
    out.stats.std.push_back(stats.std.at(c));
  }
  return out;
}

SubjectData prepare_subject(const eegdata::EegDataset& subject_trials, int subject_id,
                            const PreprocessSpec& spec) {
  const auto sid = static_cast<std::uint64_t>(subject_id);
  auto [train_ds, test_ds] =
      eegdata::split_train_test(subject_trials, spec.test_fraction,
                                derive_seed(spec.split_seed, sid));
  if (spec.filter) {
    for (auto* ds : {&train_ds, &test_ds}) {
      for (auto& trial : ds->trials) {
        trial = filter::bandpass_chebyshev(trial, *spec.filter, ds->fs);
      }
    }
  }
  if (spec.augment_factor > 1) {
    train_ds.trials = eegdata::sr_augment(train_ds.trials, spec.augment_segments,
                                          spec.augment_factor,
                                          derive_seed(spec.augment_seed, sid));
  }
  const auto train_windows =
      eegdata::segment_windows(train_ds, spec.window_seconds, spec.overlap_fraction);
  const auto test_windows =
      eegdata::segment_windows(test_ds, spec.window_seconds, spec.overlap_fraction);

  SubjectData out;
  out.subject_id = subject_id;
  out.stats = eegdata::zscore_fit(train_windows);
  out.train = eegdata::zscore_apply(train_windows, out.stats);
  out.test = eegdata::zscore_apply(test_windows, out.stats);
  return out;
}

std::vector<SubjectData> prepare_subjects(const eegdata::EegDataset& dataset,
                                          const PreprocessSpec& spec, std::size_t jobs) {
  const auto ids = dataset.subject_ids();
  if (ids.empty()) throw ValidationError("dataset has no trials");
  std::vector<SubjectData> out(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    try {
      out[i] = prepare_subject(dataset.subject(ids[i]), ids[i], spec);
    } catch (const ValidationError& e) {
      throw ValidationError("subject " + std::to_string(ids[i]) + ": " + e.what());
    }
  });
  return out;
}

// --- training / evaluation -----------------------------------------------------------

std::string to_string(FpsMode mode) {
  return mode == FpsMode::kMeasured ? "measured" : "nominal";
}

FpsMode fps_mode_from_string(const std::string& name) {
  if (name == "measured") return FpsMode::kMeasured;
  if (name == "nominal") return FpsMode::kNominal;
  throw ValidationError("unknown fps mode '" + name + "'");
}

EvalConfig pipeline_defaults() {
  EvalConfig cfg;
  cfg.model.activation = diffnet::Activation::kRelu;
  cfg.model.pool_width = 0;
  cfg.model.hidden_units = 16;
  cfg.train.learning_rate = 3e-3;
  cfg.train.epochs = 20;
  return cfg;
}

diffnet::ModelConfig subject_model_config(const EvalConfig& cfg, int subject_id,
                                          std::size_t channels, std::size_t samples,
                                          std::size_t n_classes) {
  diffnet::ModelConfig mc = cfg.model;
  mc.input_channels = channels;
  mc.input_samples = samples;
  mc.n_classes = n_classes;
  mc.seed = derive_seed(cfg.model_seed, static_cast<std::uint64_t>(subject_id));
  return mc;
}

diffnet::TrainResult train_subject(const SubjectData& subject, std::size_t n_classes,
                                   const EvalConfig& cfg) {
  const auto mc = subject_model_config(cfg, subject.subject_id, subject.n_channels(),
                                       subject.n_samples(), n_classes);
  diffnet::TrainSpec ts = cfg.train;
  ts.seed = derive_seed(cfg.train.seed, static_cast<std::uint64_t>(subject.subject_id));
  return diffnet::train(diffnet::build_model(mc), subject.train, ts);
}

SubjectMetrics evaluate_subject(const diffnet::DifferentiableModel& model,
                                std::span<const eegdata::Window> test, int subject_id) {
  if (test.empty()) throw ValidationError("no test windows for evaluation");
  const std::size_t n_classes = model.n_classes();
  std::vector<int> truth, pred;
  std::vector<double> score1;
  for (const auto& w : test) {
    const auto logits = model.forward(w.data);
    truth.push_back(w.label);
    pred.push_back(static_cast<int>(diffnet::argmax(logits)));
    if (n_classes == 2) {
      // softmax probability of class 1
      score1.push_back(1.0 / (1.0 + std::exp(logits[0] - logits[1])));
    }
  }
  const auto counts = metrics::confusion(truth, pred, n_classes);
  const auto m = metrics::metrics_from_counts(counts);
  SubjectMetrics out{subject_id, m.acc, std::nullopt, m.f1, m.spe, m.sen};
  if (n_classes == 2) {
    const bool both = std::count(truth.begin(), truth.end(), 1) > 0 &&
                      std::count(truth.begin(), truth.end(), 0) > 0;
    if (both) out.auc = metrics::auc(score1, truth);
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean of an empty set");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

namespace {

std::optional<MeanStd> summarize_optional(
    std::span<const SubjectMetrics> rows,
    std::optional<double> SubjectMetrics::*field) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.*field) v.push_back(*(r.*field));
  }
  if (v.empty()) return std::nullopt;
  return mean_std(v);
}

std::optional<double> mean_optional(std::span<const SubjectMetrics> rows,
                                    std::optional<double> SubjectMetrics::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.*field) {
      sum += *(r.*field);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// Averages one subject's metrics over several channel sets.
SubjectMetrics average_over_sets(std::span<const SubjectMetrics> rows) {
  SubjectMetrics out;
  out.subject_id = rows.front().subject_id;
  for (const auto& r : rows) out.acc += r.acc;
  out.acc /= static_cast<double>(rows.size());
  out.auc = mean_optional(rows, &SubjectMetrics::auc);
  out.f1 = mean_optional(rows, &SubjectMetrics::f1);
  out.spe = mean_optional(rows, &SubjectMetrics::spe);
  out.sen = mean_optional(rows, &SubjectMetrics::sen);
  return out;
}

}  // namespace

MetricsReport summarize(std::span<const SubjectMetrics> per_subject, bool binary) {
  std::vector<double> acc;
  for (const auto& r : per_subject) acc.push_back(r.acc);
  MetricsReport out;
  out.acc = mean_std(acc);
  if (binary) {
    out.auc = summarize_optional(per_subject, &SubjectMetrics::auc);
    out.f1 = summarize_optional(per_subject, &SubjectMetrics::f1);
    out.spe = summarize_optional(per_subject, &SubjectMetrics::spe);
    out.sen = summarize_optional(per_subject, &SubjectMetrics::sen);
  }
  return out;
}

double measure_fps(const diffnet::DifferentiableModel& model,
                   std::span<const eegdata::Window> windows, int warmup, int reps) {
  if (windows.empty()) throw ValidationError("FPS measurement needs at least one window");
  if (warmup < 0 || reps < 1) throw ValidationError("FPS needs warmup >= 0 and reps >= 1");
  double sink = 0.0;
  for (int i = 0; i < warmup; ++i) {
    sink += model.forward(windows[static_cast<std::size_t>(i) % windows.size()].data)[0];
  }
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) {
    sink += model.forward(windows[static_cast<std::size_t>(i) % windows.size()].data)[0];
  }
  const auto stop = std::chrono::steady_clock::now();
  const double elapsed = std::chrono::duration<double>(stop - start).count();
  if (!(elapsed > 0.0)) {
    throw ValidationError("elapsed time below timer resolution; increase reps");
  }
  // Keeps the forward passes observable.
  if (std::isnan(sink)) throw NumericalError("non-finite logits during FPS measurement");
  return static_cast<double>(reps) / elapsed;
}

double nominal_fps(const diffnet::ModelConfig& config) {
  return 1e9 / static_cast<double>(config.forward_macs());
}

// --- cache ----------------------------------------------------------------------------

void EvaluationCache::put(int subject_id, std::span<const std::size_t> channels,
                          Entry entry) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(Key{subject_id, {channels.begin(), channels.end()}},
                            std::move(entry));
}

std::optional<EvaluationCache::Entry> EvaluationCache::get(
    int subject_id, std::span<const std::size_t> channels) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(Key{subject_id, {channels.begin(), channels.end()}});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> EvaluationCache::fps(std::size_t c) const {
  std::lock_guard lock(mutex_);
  const auto it = fps_.find(c);
  if (it == fps_.end()) return std::nullopt;
  return it->second;
}

void EvaluationCache::set_fps(std::size_t c, double fps) {
  std::lock_guard lock(mutex_);
  fps_[c] = fps;
}

// --- pruning sweep ----------------------------------------------------------------------

std::size_t channels_for_density(double eta, std::size_t n_channels) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw ValidationError("density " + std::to_string(eta) + " outside (0, 1]");
  }
  const auto c = static_cast<std::size_t>(std::llround(eta * static_cast<double>(n_channels)));
  if (c == 0) {
    throw ValidationError("density " + std::to_string(eta) + " selects 0 of " +
                          std::to_string(n_channels) + " channels");
  }
  return c;
}

std::vector<PruneResult> prune_and_evaluate(
    std::span<const SubjectData> subjects,
    std::span<const attribution::SubjectAttribution> attributions,
    ranking::Strategy strategy, std::span<const double> densities,
    std::size_t n_classes, const EvalConfig& cfg, EvaluationCache* cache) {
  if (subjects.empty()) throw ValidationError("no subjects to evaluate");
  const std::size_t n_channels = subjects.front().n_channels();
  for (const auto& s : subjects) {
    if (s.n_channels() != n_channels) {
      throw ValidationError("subjects disagree on channel count");
    }
  }
  if (strategy != ranking::Strategy::kRandom) {
    if (attributions.empty()) throw ValidationError("ranking strategy needs attributions");
    for (const auto& a : attributions) {
      if (a.values.size() != n_channels) {
        throw ValidationError("attribution for subject " + std::to_string(a.subject_id) +
                              " has " + std::to_string(a.values.size()) +
                              " channels, data has " + std::to_string(n_channels));
      }
    }
  }
  EvaluationCache local_cache;
  EvaluationCache& store = cache != nullptr ? *cache : local_cache;

  std::optional<ranking::ChannelRanking> averaged;
  if (strategy == ranking::Strategy::kAveraging) {
    averaged = ranking::rank_averaging(attributions, cfg.sign);
  }

  std::vector<PruneResult> results;
  for (double eta : densities) {
    const std::size_t c = channels_for_density(eta, n_channels);
    PruneResult row;
    row.strategy = strategy;
    row.c = c;
    row.eta = static_cast<double>(c) / static_cast<double>(n_channels);
    switch (strategy) {
      case ranking::Strategy::kAveraging:
        row.channel_sets.push_back(ranking::select_top(*averaged, c).channels);
        break;
      case ranking::Strategy::kVoting: {
        const auto voted = ranking::rank_voting(attributions, cfg.vote_k.value_or(c), cfg.sign);
        row.channel_sets.push_back(ranking::select_top(voted, c).channels);
        break;
      }
      case ranking::Strategy::kRandom:
        row.channel_sets = ranking::random_subsets(n_channels, c, cfg.n_random_sets,
                                                   derive_seed(cfg.random_seed, c));
        break;
    }

    row.per_subject.resize(subjects.size());
    parallel_for(subjects.size(), cfg.jobs, [&](std::size_t i) {
      const auto& subject = subjects[i];
      std::vector<SubjectMetrics> per_set;
      for (const auto& set : row.channel_sets) {
        auto hit = store.get(subject.subject_id, set);
        if (!hit) {
          const auto reduced = subject.select_channels(set);
          try {
            auto trained = train_subject(reduced, n_classes, cfg);
            auto m = evaluate_subject(trained.model, reduced.test, subject.subject_id);
            hit = EvaluationCache::Entry{std::move(trained.model), m};
          } catch (const NumericalError& e) {
            throw NumericalError("subject " + std::to_string(subject.subject_id) +
                                 ", " + std::to_string(c) + " channels: " + e.what());
          }
          store.put(subject.subject_id, set, *hit);
        }
        per_set.push_back(hit->metrics);
      }
      row.per_subject[i] = average_over_sets(per_set);
    });

    row.metrics = summarize(row.per_subject, n_classes == 2);
    row.effective = metrics::effective_acc(row.metrics.acc.mean, n_classes).effective;

    // Throughput is serialized and shared by every strategy at this size.
    if (auto known = store.fps(c)) {
      row.fps = *known;
    } else {
      const auto& first = row.channel_sets.front();
      const auto entry = store.get(subjects.front().subject_id, first);
      if (cfg.fps_mode == FpsMode::kNominal) {
        row.fps = nominal_fps(entry->model.config());
      } else {
        const auto reduced = subjects.front().select_channels(first);
        row.fps = measure_fps(entry->model, reduced.test, cfg.fps_warmup, cfg.fps_reps);
      }
      store.set_fps(c, row.fps);
    }
    results.push_back(std::move(row));
  }
  return results;
}

BalanceCurve balance_curve(std::span<const PruneResult> results) {
  if (results.empty()) throw ValidationError("balance curve needs results");
  const auto full = std::find_if(results.begin(), results.end(),
                                 [](const PruneResult& r) { return r.eta == 1.0; });
  if (full == results.end()) {
    throw ValidationError("balance curve needs the full-density row");
  }
  double max_fps = 0.0;
  for (const auto& r : results) max_fps = std::max(max_fps, r.fps);
  if (!(max_fps > 0.0) || !(full->metrics.acc.mean > 0.0)) {
    throw ValidationError("balance curve needs positive FPS and full-density ACC");
  }
  BalanceCurve curve;
  curve.strategy = results.front().strategy;
  for (const auto& r : results) {
    curve.points.push_back(
        {r.eta, r.c, r.metrics.acc.mean / full->metrics.acc.mean, r.fps / max_fps});
  }
  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const BalancePoint& a, const BalancePoint& b) { return a.eta < b.eta; });
  return curve;
}

// --- reports ------------------------------------------------------------------------------

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string fmt_opt(const std::optional<MeanStd>& v) {
  if (!v) return ",";
  return fmt("%.6f", v->mean) + "," + fmt("%.6f", v->std);
}

json mean_std_json(const std::optional<MeanStd>& v) {
  if (!v) return nullptr;
  return {{"mean", v->mean}, {"std", v->std}};
}

json opt_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

std::string report_csv(std::span<const PruneResult> results) {
  std::string out =
      "strategy,eta,c,acc_mean,acc_std,auc_mean,auc_std,f1_mean,f1_std,"
      "spe_mean,spe_std,sen_mean,sen_std,fps,effective\n";
  for (const auto& r : results) {
    out += ranking::to_string(r.strategy) + "," + fmt("%.3f", r.eta) + "," +
           std::to_string(r.c) + "," + fmt_opt(r.metrics.acc) + "," +
           fmt_opt(r.metrics.auc) + "," + fmt_opt(r.metrics.f1) + "," +
           fmt_opt(r.metrics.spe) + "," + fmt_opt(r.metrics.sen) + "," +
           fmt("%.3f", r.fps) + "," + (r.effective ? "true" : "false") + "\n";
  }
  return out;
}

std::string report_json(std::span<const PruneResult> results, const ReportContext& ctx) {
  json rows = json::array();
  for (const auto& r : results) {
    json sets = json::array();
    json set_labels = json::array();
    for (const auto& set : r.channel_sets) {
      sets.push_back(set);
      json labels = json::array();
      for (auto c : set) labels.push_back(ctx.channel_labels.at(c));
      set_labels.push_back(labels);
    }
    json subjects = json::array();
    for (const auto& s : r.per_subject) {
      subjects.push_back({{"subject_id", s.subject_id},
                          {"acc", s.acc},
                          {"auc", opt_json(s.auc)},
                          {"f1", opt_json(s.f1)},
                          {"spe", opt_json(s.spe)},
                          {"sen", opt_json(s.sen)}});
    }
    rows.push_back({{"strategy", ranking::to_string(r.strategy)},
                    {"eta", r.eta},
                    {"c", r.c},
                    {"channel_sets", sets},
                    {"channel_set_labels", set_labels},
                    {"acc", mean_std_json(r.metrics.acc)},
                    {"auc", mean_std_json(r.metrics.auc)},
                    {"f1", mean_std_json(r.metrics.f1)},
                    {"spe", mean_std_json(r.metrics.spe)},
                    {"sen", mean_std_json(r.metrics.sen)},
                    {"fps", r.fps},
                    {"effective", r.effective},
                    {"per_subject", subjects}});
  }
  json rankings = json::array();
  for (const auto& rk : ctx.rankings) {
    rankings.push_back(json::parse(ranking::to_json(rk, ctx.channel_labels)));
  }
  json doc = {{"results", rows},
              {"rankings", rankings},
              {"channel_labels", ctx.channel_labels},
              {"n_classes", ctx.n_classes},
              {"seeds", ctx.seeds}};
  doc["config"] = ctx.config_echo.empty() ? json::object() : json::parse(ctx.config_echo);
  return doc.dump(2) + "\n";
}

std::string balance_csv(std::span<const BalanceCurve> curves) {
  std::string out = "strategy,eta,c,relative_acc,relative_ce\n";
  for (const auto& curve : curves) {
    for (const auto& p : curve.points) {
      out += ranking::to_string(curve.strategy) + "," + fmt("%.3f", p.eta) + "," +
             std::to_string(p.c) + "," + fmt("%.6f", p.relative_acc) + "," +
             fmt("%.6f", p.relative_ce) + "\n";
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit_report(std::span<const PruneResult> results, const ReportContext& ctx,
                 const std::filesystem::path& stem) {
  write_text_file(stem.string() + ".csv", report_csv(results));
  write_text_file(stem.string() + ".json", report_json(results, ctx));
}

}  // namespace plugselect::evaluation
