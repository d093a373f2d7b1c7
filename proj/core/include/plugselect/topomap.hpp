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

#ifndef PLUGSELECT_TOPOMAP_HPP_
#define PLUGSELECT_TOPOMAP_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plugselect::topomap {

// Position on the projected scalp disc. The head outline (electrodes on the
// nasion-inion-ear circumference) has radius 1; +y points to the nose.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Built-in 10-20 / 10-10 table (case-insensitive, a few legacy aliases).
std::optional<Point> electrode_position(const std::string& label);
std::vector<std::string> known_electrodes();

struct TopomapOptions {
  std::vector<std::size_t> selected;  // outlined channels
  std::map<std::string, Point> extra_positions;
  std::string title;
};

// SVG scalp map, one circle per channel, fill proportional to |score| / max.
// Throws ValidationError for a label with no known position.
std::string topomap_svg(std::span<const double> scores,
                        std::span<const std::string> channel_labels,
                        const TopomapOptions& options = {});

void emit_topomap_svg(std::span<const double> scores,
                      std::span<const std::string> channel_labels,
                      const std::filesystem::path& path,
                      const TopomapOptions& options = {});

}  // namespace plugselect::topomap

#endif  // PLUGSELECT_TOPOMAP_HPP_
