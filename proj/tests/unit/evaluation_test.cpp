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
#include <vector>

#include <gtest/gtest.h>

#include "plugselect/error.hpp"
#include "plugselect/evaluation.hpp"
#include "test_util.hpp"

namespace plugselect::evaluation {
namespace {

using plugselect::testing::TempDir;

struct Fixture {
  std::vector<SubjectData> subjects;
  std::vector<attribution::SubjectAttribution> attrs;
  EvalConfig cfg;
};

// Small synthetic task: 3 subjects, 8 channels, short training.
const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    eegdata::SynthSpec spec;
    spec.n_channels = 8;
    spec.n_informative = 2;
    spec.n_subjects = 3;
    spec.trials_per_subject = 20;
    const auto syn = eegdata::synth_generate(spec, 4);
    out.subjects = prepare_subjects(syn.dataset, PreprocessSpec{});
    out.cfg = pipeline_defaults();
    out.cfg.train.epochs = 4;
    out.cfg.fps_mode = FpsMode::kNominal;
    attribution::IgConfig ig;
    ig.steps = 4;
    for (const auto& s : out.subjects) {
      const auto trained = train_subject(s, 2, out.cfg);
      out.attrs.push_back(attribution::attribute_subject(trained.model, s.train, ig));
    }
    return out;
  }();
  return f;
}

PruneResult fake_row(double eta, std::size_t c, double acc, double fps) {
  PruneResult r;
  r.eta = eta;
  r.c = c;
  r.metrics.acc = {acc, 0.01};
  r.fps = fps;
  return r;
}

// --- preprocessing ---------------------------------------------------------------

TEST(Prepare, SplitsWindowsAndNormalizesWithTrainStats) {
  eegdata::SynthSpec spec;
  spec.n_subjects = 1;
  const auto syn = eegdata::synth_generate(spec, 9);
  PreprocessSpec pp;
  const auto s = prepare_subject(syn.dataset, 1, pp);
  EXPECT_EQ(s.train.size(), 30u * 4u);
  EXPECT_EQ(s.test.size(), 10u * 4u);
  EXPECT_EQ(s.n_samples(), 64u);
  const auto refit = eegdata::zscore_fit(s.train);
  for (std::size_t c = 0; c < 16; ++c) {
    EXPECT_LE(std::abs(refit.mean[c]), 1e-9);
    EXPECT_LE(std::abs(refit.std[c] - 1.0), 1e-6);
  }
  pp.augment_factor = 3;
  pp.filter = filter::FilterSpec{};
  pp.filter->high_hz = 40.0;
  const auto aug = prepare_subject(syn.dataset, 1, pp);
  EXPECT_EQ(aug.train.size(), 3u * 30u * 4u);
  EXPECT_EQ(aug.test.size(), 10u * 4u);
}

TEST(Prepare, ParallelMatchesSequential) {
  eegdata::SynthSpec spec;
  spec.n_subjects = 4;
  const auto syn = eegdata::synth_generate(spec, 10);
  const auto a = prepare_subjects(syn.dataset, PreprocessSpec{}, 1);
  const auto b = prepare_subjects(syn.dataset, PreprocessSpec{}, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].subject_id, b[i].subject_id);
    EXPECT_EQ(a[i].train.back().data, b[i].train.back().data);
  }
}

// --- summaries ------------------------------------------------------------------

TEST(MeanStd, SampleStandardDeviation) {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  const auto ms = mean_std(v);
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  EXPECT_DOUBLE_EQ(ms.std, std::sqrt(5.0 / 3.0));
  const std::vector<double> one = {0.7};
  EXPECT_EQ(mean_std(one).std, 0.0);
  EXPECT_THROW(mean_std({}), ValidationError);
}

TEST(Summarize, BinaryOnlyFields) {
  std::vector<SubjectMetrics> rows = {{1, 0.8, 0.9, 0.7, 0.6, 0.5}, {2, 0.6, 0.7, 0.5, 0.4, 0.3}};
  const auto bin = summarize(rows, true);
  EXPECT_DOUBLE_EQ(bin.acc.mean, 0.7);
  ASSERT_TRUE(bin.auc.has_value());
  EXPECT_DOUBLE_EQ(bin.auc->mean, 0.8);
  const auto multi = summarize(rows, false);
  EXPECT_FALSE(multi.auc || multi.f1 || multi.spe || multi.sen);
}

TEST(EvaluateSubject, BinaryMetricsInRange) {
  const auto& f = fixture();
  const auto trained = train_subject(f.subjects[0], 2, f.cfg);
  const auto m = evaluate_subject(trained.model, f.subjects[0].test, 1);
  EXPECT_EQ(m.acc, diffnet::accuracy(trained.model, f.subjects[0].test));
  ASSERT_TRUE(m.auc.has_value());
  for (double v : {m.acc, *m.auc}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

// --- densities --------------------------------------------------------------------

TEST(Density, ChannelCounts) {
  EXPECT_EQ(channels_for_density(1.0, 16), 16u);
  EXPECT_EQ(channels_for_density(0.5, 16), 8u);
  EXPECT_EQ(channels_for_density(0.469, 32), 15u);
  EXPECT_THROW(channels_for_density(0.01, 16), ValidationError);
  EXPECT_THROW(channels_for_density(0.0, 16), ValidationError);
  EXPECT_THROW(channels_for_density(1.5, 16), ValidationError);
}

TEST(Prune, FullDensityReproducesFullEvaluation) {
  const auto& f = fixture();
  const std::vector<double> full = {1.0};
  std::vector<SubjectMetrics> direct;
  for (const auto& s : f.subjects) {
    const auto trained = train_subject(s, 2, f.cfg);
    direct.push_back(evaluate_subject(trained.model, s.test, s.subject_id));
  }
  for (auto strategy : {ranking::Strategy::kAveraging, ranking::Strategy::kVoting,
                        ranking::Strategy::kRandom}) {
    const auto rows = prune_and_evaluate(f.subjects, f.attrs, strategy, full, 2, f.cfg);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].c, 8u);
    EXPECT_EQ(rows[0].eta, 1.0);
    for (std::size_t i = 0; i < direct.size(); ++i) {
      EXPECT_EQ(rows[0].per_subject[i].acc, direct[i].acc);
      EXPECT_EQ(rows[0].per_subject[i].auc, direct[i].auc);
    }
  }
}

TEST(Prune, EtaIsChannelFractionAndRandomUsesFiveSets) {
  const auto& f = fixture();
  const std::vector<double> densities = {1.0, 0.6, 0.3};
  EvaluationCache cache;
  for (auto strategy : {ranking::Strategy::kAveraging, ranking::Strategy::kRandom}) {
    const auto rows = prune_and_evaluate(f.subjects, f.attrs, strategy, densities, 2, f.cfg,
                                         &cache);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
      EXPECT_EQ(r.eta, static_cast<double>(r.c) / 8.0);
      EXPECT_GT(r.fps, 0.0);
      EXPECT_EQ(r.per_subject.size(), 3u);
      EXPECT_EQ(r.channel_sets.size(),
                strategy == ranking::Strategy::kRandom ? f.cfg.n_random_sets : 1u);
      for (const auto& set : r.channel_sets) EXPECT_EQ(set.size(), r.c);
    }
    EXPECT_EQ(rows[1].c, 5u);
    EXPECT_EQ(rows[2].c, 2u);
  }
  // Averaging keeps the top of the averaged ranking.
  const auto ranking = ranking::rank_averaging(f.attrs);
  const auto rows = prune_and_evaluate(f.subjects, f.attrs, ranking::Strategy::kAveraging,
                                       densities, 2, f.cfg, &cache);
  EXPECT_EQ(rows[2].channel_sets[0], ranking::select_top(ranking, 2).channels);
}

TEST(Prune, ParallelIsDeterministic) {
  const auto& f = fixture();
  const std::vector<double> densities = {1.0, 0.5};
  auto cfg = f.cfg;
  const auto a = prune_and_evaluate(f.subjects, f.attrs, ranking::Strategy::kVoting,
                                    densities, 2, cfg);
  cfg.jobs = 3;
  const auto b = prune_and_evaluate(f.subjects, f.attrs, ranking::Strategy::kVoting,
                                    densities, 2, cfg);
  ReportContext ctx;
  ctx.channel_labels = eegdata::default_channel_labels(8);
  EXPECT_EQ(report_json(a, ctx), report_json(b, ctx));
}

TEST(Prune, DivergenceCarriesContext) {
  const auto& f = fixture();
  auto cfg = f.cfg;
  cfg.model.activation = diffnet::Activation::kIdentity;
  cfg.train.optimizer = diffnet::Optimizer::kSgdMomentum;
  cfg.train.learning_rate = 1e300;
  const std::vector<double> half = {0.5};
  try {
    prune_and_evaluate(f.subjects, f.attrs, ranking::Strategy::kAveraging, half, 2, cfg);
    FAIL() << "expected divergence";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("subject 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4 channels"), std::string::npos) << msg;
    EXPECT_NE(msg.find("epoch"), std::string::npos) << msg;
  }
}

TEST(Prune, Errors) {
  const auto& f = fixture();
  const std::vector<double> tiny = {0.01};
  EXPECT_THROW(prune_and_evaluate(f.subjects, f.attrs, ranking::Strategy::kAveraging, tiny, 2,
                                  f.cfg),
               ValidationError);
  const std::vector<double> full = {1.0};
  EXPECT_THROW(prune_and_evaluate(f.subjects, {}, ranking::Strategy::kAveraging, full, 2, f.cfg),
               ValidationError);
}

// --- throughput -------------------------------------------------------------------

TEST(Fps, FewerChannelsAreNotSlower) {
  auto make = [](std::size_t channels) {
    diffnet::ModelConfig c;
    c.input_channels = channels;
    return diffnet::build_model(c);
  };
  auto windows = [](std::size_t channels) {
    std::vector<eegdata::Window> w;
    for (int i = 0; i < 4; ++i) {
      w.push_back({plugselect::testing::random_matrix(channels, 64, i), 0, 1, i});
    }
    return w;
  };
  const auto m5 = make(5), m32 = make(32);
  const auto w5 = windows(5), w32 = windows(32);
  // Timing is machine-dependent; take the best of a few attempts.
  double best5 = 0.0, best32 = 0.0;
  for (int attempt = 0; attempt < 3; ++attempt) {
    best5 = std::max(best5, measure_fps(m5, w5, 50, 1000));
    best32 = std::max(best32, measure_fps(m32, w32, 50, 1000));
  }
  EXPECT_GT(best5, 0.0);
  EXPECT_GE(best5, 0.95 * best32);
  EXPECT_GT(nominal_fps(m5.config()), nominal_fps(m32.config()));
  EXPECT_THROW(measure_fps(m5, w5, 0, 0), ValidationError);
  EXPECT_THROW(measure_fps(m5, {}, 0, 10), ValidationError);
}

TEST(Fps, DoublingRepsIsStable) {
  const auto m = diffnet::build_model(diffnet::ModelConfig{});
  std::vector<eegdata::Window> w = {{plugselect::testing::random_matrix(16, 64, 1), 0, 1, 0}};
  bool stable = false;
  for (int attempt = 0; attempt < 5 && !stable; ++attempt) {
    const double a = measure_fps(m, w, 50, 500), b = measure_fps(m, w, 50, 1000);
    stable = std::abs(a - b) / b < 0.10;
  }
  EXPECT_TRUE(stable);
}

// --- balance curves -----------------------------------------------------------------

TEST(Balance, RelativeValues) {
  const std::vector<PruneResult> rows = {fake_row(1.0, 16, 0.9, 100.0),
                                         fake_row(0.25, 4, 0.8, 300.0),
                                         fake_row(0.5, 8, 0.85, 200.0)};
  const auto curve = balance_curve(rows);
  ASSERT_EQ(curve.points.size(), 3u);
  EXPECT_EQ(curve.points[0].eta, 0.25);
  EXPECT_EQ(curve.points[2].eta, 1.0);
  EXPECT_EQ(curve.points[2].relative_acc, 1.0);
  EXPECT_EQ(curve.points[0].relative_ce, 1.0);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_LE(curve.points[i].relative_ce, curve.points[i - 1].relative_ce);
  }
  for (const auto& p : curve.points) {
    EXPECT_GT(p.relative_acc, 0.0);
    EXPECT_GT(p.relative_ce, 0.0);
  }
  const std::vector<PruneResult> no_full = {fake_row(0.5, 8, 0.8, 10.0)};
  EXPECT_THROW(balance_curve(no_full), ValidationError);
}

// --- reports --------------------------------------------------------------------

TEST(Report, CsvLayout) {
  EXPECT_EQ(report_csv({}),
            "strategy,eta,c,acc_mean,acc_std,auc_mean,auc_std,f1_mean,f1_std,spe_mean,"
            "spe_std,sen_mean,sen_std,fps,effective\n");
  auto row = fake_row(15.0 / 32.0, 15, 0.9274, 1234.5);
  row.metrics.auc = MeanStd{0.95, 0.02};
  row.effective = true;
  const std::vector<PruneResult> rows = {row};
  const auto csv = report_csv(rows);
  EXPECT_NE(csv.find("\naveraging,0.469,15,0.927400,0.010000,0.950000,0.020000,,,,,,,"
                     "1234.500,true\n"),
            std::string::npos)
      << csv;
}

TEST(Report, ByteDeterministicFiles) {
  const auto& f = fixture();
  const std::vector<double> densities = {1.0, 0.5};
  const auto rows = prune_and_evaluate(f.subjects, f.attrs, ranking::Strategy::kAveraging,
                                       densities, 2, f.cfg);
  ReportContext ctx;
  ctx.channel_labels = eegdata::default_channel_labels(8);
  ctx.rankings.push_back(ranking::rank_averaging(f.attrs));
  ctx.config_echo = R"({"seed": 4})";
  ctx.seeds = {{"data", 4}};
  TempDir dir("report");
  emit_report(rows, ctx, dir.path() / "a");
  emit_report(rows, ctx, dir.path() / "b");
  EXPECT_EQ(read_text_file(dir.path() / "a.csv"), read_text_file(dir.path() / "b.csv"));
  EXPECT_EQ(read_text_file(dir.path() / "a.json"), read_text_file(dir.path() / "b.json"));
  const auto json = read_text_file(dir.path() / "a.json");
  for (const char* key : {"\"channel_sets\"", "\"per_subject\"", "\"seeds\"", "\"config\"",
                          "\"rankings\""}) {
    EXPECT_NE(json.find(key), std::string::npos) << key;
  }
  const std::vector<BalanceCurve> curves = {balance_curve(rows)};
  const auto bal = balance_csv(curves);
  EXPECT_EQ(bal.rfind("strategy,eta,c,relative_acc,relative_ce\n", 0), 0u);
  EXPECT_NE(bal.find("averaging,1.000,8,1.000000,"), std::string::npos) << bal;
}

TEST(Cache, StoresEntriesByChannelSet) {
  EvaluationCache cache;
  const std::vector<std::size_t> set = {1, 3};
  EXPECT_FALSE(cache.get(1, set).has_value());
  diffnet::ModelConfig c;
  c.input_channels = 2;
  cache.put(1, set, {diffnet::build_model(c), SubjectMetrics{1, 0.75, {}, {}, {}, {}}});
  ASSERT_TRUE(cache.get(1, set).has_value());
  EXPECT_EQ(cache.get(1, set)->metrics.acc, 0.75);
  EXPECT_FALSE(cache.get(2, set).has_value());
  EXPECT_FALSE(cache.fps(2).has_value());
  cache.set_fps(2, 10.0);
  EXPECT_EQ(*cache.fps(2), 10.0);
}

}  // namespace
}  // namespace plugselect::evaluation
