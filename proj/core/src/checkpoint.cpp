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

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>
#include "plugselect/diffnet.hpp"
#include "plugselect/error.hpp"

namespace plugselect::diffnet {
namespace {

using nlohmann::json;

constexpr std::array<char, 4> kWeightsMagic = {'P', 'S', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kWeightsHeaderBytes = 16;

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(in[at + i]) << (8 * i);
  return v;
}

json config_to_json(const ModelConfig& c) {
  return {{"input_channels", c.input_channels},
          {"input_samples", c.input_samples},
          {"temporal_kernels", c.temporal_kernels},
          {"temporal_width", c.temporal_width},
          {"spatial_kernels", c.spatial_kernels},
          {"pool_width", c.pool_width},
          {"hidden_units", c.hidden_units},
          {"n_classes", c.n_classes},
          {"activation", to_string(c.activation)},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.input_channels = j.at("input_channels").get<std::size_t>();
  c.input_samples = j.at("input_samples").get<std::size_t>();
  c.temporal_kernels = j.at("temporal_kernels").get<std::size_t>();
  c.temporal_width = j.at("temporal_width").get<std::size_t>();
  c.spatial_kernels = j.at("spatial_kernels").get<std::size_t>();
  c.pool_width = j.at("pool_width").get<std::size_t>();
  c.hidden_units = j.at("hidden_units").get<std::size_t>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  c.activation = activation_from_string(j.at("activation").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::vector<std::uint8_t> encode_weights(std::span<const double> parameters) {
  std::vector<std::uint8_t> out;
  out.reserve(kWeightsHeaderBytes + 8 * parameters.size());
  out.insert(out.end(), kWeightsMagic.begin(), kWeightsMagic.end());
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, parameters.size());
  for (double v : parameters) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

std::vector<double> decode_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWeightsHeaderBytes) {
    throw IoError("weights file truncated (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (!std::equal(kWeightsMagic.begin(), kWeightsMagic.end(), bytes.begin())) {
    throw IoError("weights file magic mismatch (expected \"PSCK\")");
  }
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kFormatVersion) {
    throw IoError("unsupported weights format version " + std::to_string(version));
  }
  const auto count = get_le<std::uint64_t>(bytes, 8);
  if (bytes.size() != kWeightsHeaderBytes + 8 * count) {
    throw IoError("weights file truncated: header declares " + std::to_string(count) +
                  " values, file holds " + std::to_string(bytes.size()) + " bytes");
  }
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, kWeightsHeaderBytes + 8 * i));
  }
  return out;
}

void save_checkpoint(const ConvDecoder& model, const TrainingMeta& meta,
                     const std::filesystem::path& stem) {
  if (stem.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(stem.parent_path(), ec);
    if (ec) throw IoError("cannot create " + stem.parent_path().string());
  }
  const auto bin_path = with_ext(stem, ".bin");
  const auto bytes = encode_weights(model.parameters());
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  bin.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!bin) throw IoError("write failed: " + bin_path.string());

  const json sidecar = {
      {"format_version", kFormatVersion},
      {"config", config_to_json(model.config())},
      {"training_meta",
       {{"epochs", meta.epochs}, {"final_loss", meta.final_loss}, {"seed", meta.seed}}},
      {"parameter_count", model.parameters().size()},
      {"weights_file", bin_path.filename().string()}};
  const auto json_path = with_ext(stem, ".json");
  std::ofstream js(json_path, std::ios::trunc);
  js << sidecar.dump(2) << '\n';
  if (!js) throw IoError("write failed: " + json_path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  const auto json_path = with_ext(stem, ".json");
  std::ifstream js(json_path);
  if (!js) throw IoError("cannot open " + json_path.string());
  ModelConfig config;
  TrainingMeta meta;
  std::size_t declared = 0;
  std::string weights_file;
  try {
    const json sidecar = json::parse(js);
    const auto version = sidecar.at("format_version").get<std::uint32_t>();
    if (version != kFormatVersion) {
      throw IoError("unsupported checkpoint format version " + std::to_string(version));
    }
    config = config_from_json(sidecar.at("config"));
    const auto& tm = sidecar.at("training_meta");
    meta = {tm.at("epochs").get<int>(), tm.at("final_loss").get<double>(),
            tm.at("seed").get<std::uint64_t>()};
    declared = sidecar.at("parameter_count").get<std::size_t>();
    weights_file = sidecar.at("weights_file").get<std::string>();
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint sidecar " + json_path.string() + ": " + e.what());
  }

  const auto bin_path = json_path.parent_path() / weights_file;
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + bin_path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(bin)),
                                        std::istreambuf_iterator<char>());
  auto params = decode_weights(bytes);
  if (params.size() != declared || declared != config.parameter_count()) {
    throw IoError("checkpoint parameter count mismatch: sidecar " +
                  std::to_string(declared) + ", weights " + std::to_string(params.size()) +
                  ", config implies " + std::to_string(config.parameter_count()));
  }
  for (double v : params) {
    if (!std::isfinite(v)) throw IoError("checkpoint contains non-finite weights");
  }
  return {ConvDecoder(config, std::move(params)), meta};
}

}  // namespace plugselect::diffnet
