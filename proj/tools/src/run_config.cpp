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


#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "plugselect/error.hpp"
#include "plugselect/seed.hpp"

namespace plugselect::cli {
namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

template <typename T>
T parse_integer(const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("expected an integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ValidationError("expected a finite number, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ValidationError("expected true or false, got '" + value + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string fmt_list(const std::vector<T>& values, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += f(values[i]);
  }
  return out;
}

struct Key {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool echoed = true;
};

// Seed keys are handled separately so unpinned streams can be derived.
const std::vector<std::string> kSeedNames = {"data", "split", "augment",
                                             "model", "train", "random"};

std::uint64_t* seed_slot(Seeds& s, const std::string& name) {
  if (name == "data") return &s.data;
  if (name == "split") return &s.split;
  if (name == "augment") return &s.augment;
  if (name == "model") return &s.model;
  if (name == "train") return &s.train;
  if (name == "random") return &s.random;
  return nullptr;
}

#define PS_SIZE(field) \
  [](RunConfig& c, const std::string& v) { c.field = parse_integer<std::size_t>(v); }, \
  [](const RunConfig& c) { return std::to_string(c.field); }
#define PS_INT(field) \
  [](RunConfig& c, const std::string& v) { c.field = parse_integer<int>(v); }, \
  [](const RunConfig& c) { return std::to_string(c.field); }
#define PS_DOUBLE(field) \
  [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }, \
  [](const RunConfig& c) { return fmt(c.field); }
#define PS_BOOL(field) \
  [](RunConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
  [](const RunConfig& c) { return fmt(c.field); }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"data.path", "dataset directory; empty means synthesize",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) c.data_path.reset(); else c.data_path = v;
       },
       [](const RunConfig& c) { return c.data_path ? c.data_path->string() : std::string(); }},
      {"synth.channels", "synthetic channel count", PS_INT(synth.n_channels)},
      {"synth.informative", "channels carrying class information", PS_INT(synth.n_informative)},
      {"synth.subjects", "number of subjects", PS_INT(synth.n_subjects)},
      {"synth.trials", "trials per subject", PS_INT(synth.trials_per_subject)},
      {"synth.fs", "sampling rate in Hz", PS_DOUBLE(synth.fs)},
      {"synth.trial_seconds", "trial length in seconds", PS_DOUBLE(synth.trial_seconds)},
      {"synth.classes", "number of classes", PS_INT(synth.n_classes)},
      {"synth.signal_amplitude", "class oscillation amplitude", PS_DOUBLE(synth.signal_amplitude)},
      {"synth.noise_amplitude", "white noise amplitude", PS_DOUBLE(synth.noise_amplitude)},
      {"synth.carriers", "carrier frequency per class, Hz (list)",
       [](RunConfig& c, const std::string& v) {
         c.synth.carrier_hz_per_class.clear();
         for (const auto& item : split_list(v)) {
           c.synth.carrier_hz_per_class.push_back(parse_double(item));
         }
       },
       [](const RunConfig& c) {
         return fmt_list<double>(c.synth.carrier_hz_per_class,
                                 [](const double& x) { return fmt(x); });
       }},
      {"preprocess.window_seconds", "decision window length", PS_DOUBLE(preprocess.window_seconds)},
      {"preprocess.overlap", "window overlap fraction in [0, 1)", PS_DOUBLE(preprocess.overlap_fraction)},
      {"preprocess.test_fraction", "held-out trial fraction per class", PS_DOUBLE(preprocess.test_fraction)},
      {"preprocess.augment_factor", "S&R augmentation factor (1 = off)", PS_INT(preprocess.augment_factor)},
      {"preprocess.augment_segments", "segments per S&R trial", PS_INT(preprocess.augment_segments)},
      {"filter.enabled", "apply the Chebyshev band-pass",
       PS_BOOL(filter_enabled)},
      {"filter.order", "band-pass order (even)", PS_INT(filter.order)},
      {"filter.low_hz", "lower band edge", PS_DOUBLE(filter.low_hz)},
      {"filter.high_hz", "upper band edge", PS_DOUBLE(filter.high_hz)},
      {"filter.ripple_db", "passband ripple in dB", PS_DOUBLE(filter.ripple_db)},
      {"filter.zero_phase", "forward-backward filtering", PS_BOOL(filter.zero_phase)},
      {"model.temporal_kernels", "temporal filters", PS_SIZE(eval.model.temporal_kernels)},
      {"model.temporal_width", "temporal kernel width in samples", PS_SIZE(eval.model.temporal_width)},
      {"model.spatial_kernels", "spatial filters", PS_SIZE(eval.model.spatial_kernels)},
      {"model.pool_width", "average pool width (0 = global)", PS_SIZE(eval.model.pool_width)},
      {"model.hidden_units", "dense hidden units (0 = none)", PS_SIZE(eval.model.hidden_units)},
      {"model.activation", "tanh | relu | identity",
       [](RunConfig& c, const std::string& v) {
         c.eval.model.activation = diffnet::activation_from_string(v);
       },
       [](const RunConfig& c) { return diffnet::to_string(c.eval.model.activation); }},
      {"train.epochs", "training epochs", PS_INT(eval.train.epochs)},
      {"train.batch_size", "mini-batch size", PS_SIZE(eval.train.batch_size)},
      {"train.lr", "learning rate", PS_DOUBLE(eval.train.learning_rate)},
      {"train.optimizer", "adam | sgd",
       [](RunConfig& c, const std::string& v) {
         c.eval.train.optimizer = diffnet::optimizer_from_string(v);
       },
       [](const RunConfig& c) { return diffnet::to_string(c.eval.train.optimizer); }},
      {"train.momentum", "SGD momentum", PS_DOUBLE(eval.train.momentum)},
      {"train.beta1", "Adam beta1", PS_DOUBLE(eval.train.beta1)},
      {"train.beta2", "Adam beta2", PS_DOUBLE(eval.train.beta2)},
      {"ig.steps", "integration steps M", PS_INT(ig.steps)},
      {"ig.target_rule", "true | predicted",
       [](RunConfig& c, const std::string& v) {
         c.ig.target_rule = attribution::target_rule_from_string(v);
       },
       [](const RunConfig& c) { return attribution::to_string(c.ig.target_rule); }},
      {"ig.normalize", "scale subject attributions to max |phi| = 1", PS_BOOL(ig.normalize)},
      {"ig.correct_only", "attribute correctly classified windows only", PS_BOOL(ig.correct_only)},
      {"rank.strategy", "averaging | voting | random", 
       [](RunConfig& c, const std::string& v) {
         c.strategy = ranking::strategy_from_string(v);
       },
       [](const RunConfig& c) { return ranking::to_string(c.strategy); }},
      {"rank.channels", "channels to select (voting k); empty = unset",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) c.channels.reset(); else c.channels = parse_integer<std::size_t>(v);
       },
       [](const RunConfig& c) { return c.channels ? std::to_string(*c.channels) : std::string(); }},
      {"rank.sign", "absolute | signed",
       [](RunConfig& c, const std::string& v) {
         if (v == "absolute") c.eval.sign = ranking::Sign::kAbsolute;
         else if (v == "signed") c.eval.sign = ranking::Sign::kSigned;
         else throw ValidationError("expected absolute or signed, got '" + v + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.eval.sign == ranking::Sign::kAbsolute ? "absolute" : "signed");
       }},
      {"eval.densities", "channel densities in (0, 1], must include 1 (list)",
       [](RunConfig& c, const std::string& v) {
         c.densities.clear();
         for (const auto& item : split_list(v)) c.densities.push_back(parse_double(item));
       },
       [](const RunConfig& c) {
         return fmt_list<double>(c.densities, [](const double& x) { return fmt(x); });
       }},
      {"eval.strategies", "strategies to evaluate (list)",
       [](RunConfig& c, const std::string& v) {
         c.strategies.clear();
         for (const auto& item : split_list(v)) {
           c.strategies.push_back(ranking::strategy_from_string(item));
         }
       },
       [](const RunConfig& c) {
         return fmt_list<ranking::Strategy>(
             c.strategies, [](const ranking::Strategy& s) { return ranking::to_string(s); });
       }},
      {"eval.random_sets", "random subsets per density", PS_SIZE(eval.n_random_sets)},
      {"eval.vote_k", "voting top-k (empty = selection size)",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) c.eval.vote_k.reset(); else c.eval.vote_k = parse_integer<std::size_t>(v);
       },
       [](const RunConfig& c) { return c.eval.vote_k ? std::to_string(*c.eval.vote_k) : std::string(); }},
      {"eval.fps_mode", "measured | nominal",
       [](RunConfig& c, const std::string& v) {
         c.eval.fps_mode = evaluation::fps_mode_from_string(v);
       },
       [](const RunConfig& c) { return evaluation::to_string(c.eval.fps_mode); }},
      {"eval.fps_warmup", "untimed forward passes", PS_INT(eval.fps_warmup)},
      {"eval.fps_reps", "timed forward passes", PS_INT(eval.fps_reps)},
      {"seed.master", "base seed for every unpinned stream",
       [](RunConfig& c, const std::string& v) { c.seeds.master = parse_integer<std::uint64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.seeds.master); }},
      {"run.out", "output directory",
       [](RunConfig& c, const std::string& v) { c.out = v; },
       [](const RunConfig& c) { return c.out.string(); }, false},
      {"run.jobs", "worker threads",
       [](RunConfig& c, const std::string& v) { c.jobs = parse_integer<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.jobs); }, false},
  };
  return table;
}

#undef PS_SIZE
#undef PS_INT
#undef PS_DOUBLE
#undef PS_BOOL

const Key* find_key(const std::string& name) {
  for (const auto& k : keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

std::map<std::string, std::uint64_t> Seeds::named() const {
  return {{"master", master}, {"data", data},   {"split", split},  {"augment", augment},
          {"model", model},   {"train", train}, {"random", random}};
}

RunConfig::RunConfig() : eval(evaluation::pipeline_defaults()) {}

evaluation::PreprocessSpec RunConfig::preprocess_spec() const {
  auto p = preprocess;
  if (filter_enabled) p.filter = filter; else p.filter.reset();
  p.split_seed = seeds.split;
  p.augment_seed = seeds.augment;
  return p;
}

evaluation::EvalConfig RunConfig::eval_config() const {
  auto e = eval;
  e.model_seed = seeds.model;
  e.train.seed = seeds.train;
  e.random_seed = seeds.random;
  e.jobs = jobs;
  return e;
}

void RunConfig::validate() const {
  const bool synthetic = !data_path.has_value();
  if (synthetic) synth.validate();
  const auto& p = preprocess;
  if (!(p.window_seconds > 0.0)) throw ValidationError("preprocess.window_seconds must be > 0");
  if (!(p.overlap_fraction >= 0.0 && p.overlap_fraction < 1.0)) {
    throw ValidationError("preprocess.overlap must be in [0, 1)");
  }
  if (!(p.test_fraction > 0.0 && p.test_fraction < 1.0)) {
    throw ValidationError("preprocess.test_fraction must be in (0, 1)");
  }
  if (p.augment_factor < 1) throw ValidationError("preprocess.augment_factor must be >= 1");
  if (p.augment_segments < 1) throw ValidationError("preprocess.augment_segments must be >= 1");
  if (synthetic) {
    if (p.window_seconds > synth.trial_seconds) {
      throw ValidationError("preprocess.window_seconds exceeds synth.trial_seconds");
    }
    if (filter_enabled) filter.validate(synth.fs);
    auto mc = eval.model;
    mc.input_channels = static_cast<std::size_t>(synth.n_channels);
    mc.input_samples = static_cast<std::size_t>(std::llround(p.window_seconds * synth.fs));
    mc.n_classes = static_cast<std::size_t>(synth.n_classes);
    mc.validate();
  }
  eval.train.validate();
  ig.validate();
  if (densities.empty()) throw ValidationError("eval.densities is empty");
  bool has_full = false;
  for (double d : densities) {
    if (!(d > 0.0 && d <= 1.0)) {
      throw ValidationError("eval.densities: " + fmt(d) + " is outside (0, 1]");
    }
    has_full = has_full || d == 1.0;
    if (synthetic) evaluation::channels_for_density(d, static_cast<std::size_t>(synth.n_channels));
  }
  if (!has_full) throw ValidationError("eval.densities must include 1.0");
  if (strategies.empty()) throw ValidationError("eval.strategies is empty");
  if (std::set<ranking::Strategy>(strategies.begin(), strategies.end()).size() != strategies.size()) {
    throw ValidationError("eval.strategies lists a strategy twice");
  }
  if (channels && *channels == 0) throw ValidationError("rank.channels must be >= 1");
  if (channels && synthetic && *channels > static_cast<std::size_t>(synth.n_channels)) {
    throw ValidationError("rank.channels exceeds synth.channels");
  }
  if (eval.vote_k && *eval.vote_k == 0) throw ValidationError("eval.vote_k must be >= 1");
  if (eval.n_random_sets == 0) throw ValidationError("eval.random_sets must be >= 1");
  if (eval.fps_warmup < 0) throw ValidationError("eval.fps_warmup must be >= 0");
  if (eval.fps_reps < 1) throw ValidationError("eval.fps_reps must be >= 1");
  if (jobs == 0) throw ValidationError("run.jobs must be >= 1");
  if (out.empty()) throw ValidationError("run.out is empty");
}

std::string RunConfig::to_text() const {
  std::string text;
  for (const auto& k : keys()) {
    if (!k.echoed) continue;
    text += k.name + " = " + k.get(*this) + "\n";
  }
  for (const auto& name : kSeedNames) {
    text += "seed." + name + " = " + std::to_string(seeds.named().at(name)) + "\n";
  }
  return text;
}

std::string RunConfig::to_json() const {
  json doc = json::object();
  for (const auto& k : keys()) {
    if (k.echoed) doc[k.name] = k.get(*this);
  }
  for (const auto& [name, value] : seeds.named()) doc["seed." + name] = value;
  return doc.dump();
}

Assignments parse_config_text(const std::string& text) {
  Assignments out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    }
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

Assignments read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::pair<std::string, std::string> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || trim(text.substr(0, eq)).empty()) {
    throw ValidationError("expected key=value, got '" + text + "'");
  }
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

RunConfig build_config(const Assignments& assignments) {
  RunConfig cfg;
  std::map<std::string, std::uint64_t> pinned;
  for (const auto& [key, value] : assignments) {
    if (key.rfind("seed.", 0) == 0 && key != "seed.master") {
      const auto name = key.substr(5);
      if (seed_slot(cfg.seeds, name) == nullptr) {
        throw ValidationError("unknown config key '" + key + "'");
      }
      try {
        pinned[name] = parse_integer<std::uint64_t>(value);
      } catch (const ValidationError& e) {
        throw ValidationError(key + ": " + e.what());
      }
      continue;
    }
    const Key* k = find_key(key);
    if (k == nullptr) throw ValidationError("unknown config key '" + key + "'");
    try {
      k->set(cfg, value);
    } catch (const ValidationError& e) {
      throw ValidationError(key + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < kSeedNames.size(); ++i) {
    const auto& name = kSeedNames[i];
    const auto it = pinned.find(name);
    *seed_slot(cfg.seeds, name) =
        it != pinned.end() ? it->second : derive_seed(cfg.seeds.master, i + 1);
  }
  return cfg;
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.help);
  for (const auto& name : kSeedNames) {
    out.emplace_back("seed." + name, "pins the " + name + " stream");
  }
  return out;
}

}  // namespace plugselect::cli
