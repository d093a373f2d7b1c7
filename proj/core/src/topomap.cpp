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

#include "plugselect/topomap.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "plugselect/error.hpp"
#include "plugselect/evaluation.hpp"

namespace plugselect::topomap {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Vec3 {
  double x, y, z;
};

Vec3 on_sphere(double polar_deg, double azimuth_deg) {
  const double t = polar_deg * kDeg;
  const double a = azimuth_deg * kDeg;
  return {std::sin(t) * std::cos(a), std::sin(t) * std::sin(a), std::cos(t)};
}

Vec3 slerp(const Vec3& p, const Vec3& q, double f) {
  const double dot = std::clamp(p.x * q.x + p.y * q.y + p.z * q.z, -1.0, 1.0);
  const double omega = std::acos(dot);
  if (omega < 1e-12) return p;
  const double a = std::sin((1.0 - f) * omega) / std::sin(omega);
  const double b = std::sin(f * omega) / std::sin(omega);
  return {a * p.x + b * q.x, a * p.y + b * q.y, a * p.z + b * q.z};
}

// Azimuthal equidistant projection around the vertex.
Point project(const Vec3& v) {
  const double polar = std::acos(std::clamp(v.z, -1.0, 1.0));
  const double azimuth = std::atan2(v.y, v.x);
  const double r = polar / (std::numbers::pi / 2.0);
  return {r * std::cos(azimuth), r * std::sin(azimuth)};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Row {
  const char* prefix;        // inner electrodes and midline
  const char* outer_prefix;  // electrode on the circumference
  double left_azimuth;       // circumference point of the left (odd) side
  double midline_polar;
  double midline_azimuth;
};

const std::map<std::string, std::pair<std::string, Point>>& table() {
  static const auto built = [] {
    std::map<std::string, std::pair<std::string, Point>> t;
    auto add = [&](const std::string& name, const Vec3& v) {
      t[lower(name)] = {name, project(v)};
    };
    // Each row spans circumference -> midline in four equal arcs:
    // <outer>7, 5, 3, 1, z (and mirrored 8, 6, 4, 2 on the right).
    constexpr std::array<Row, 7> rows = {{
        {"AF", "AF", 126.0, 67.5, 90.0},
        {"F", "F", 144.0, 45.0, 90.0},
        {"FC", "FT", 162.0, 22.5, 90.0},
        {"C", "T", 180.0, 0.0, 90.0},
        {"CP", "TP", 198.0, 22.5, 270.0},
        {"P", "P", 216.0, 45.0, 270.0},
        {"PO", "PO", 234.0, 67.5, 270.0},
    }};
    for (const auto& row : rows) {
      const Vec3 mid = on_sphere(row.midline_polar, row.midline_azimuth);
      const Vec3 left = on_sphere(90.0, row.left_azimuth);
      const Vec3 right = on_sphere(90.0, 180.0 - row.left_azimuth);
      add(std::string(row.prefix) + "z", mid);
      const std::array<int, 4> odd = {7, 5, 3, 1};
      for (int i = 0; i < 4; ++i) {
        const std::string prefix = i == 0 ? row.outer_prefix : row.prefix;
        add(prefix + std::to_string(odd[i]), slerp(left, mid, i / 4.0));
        add(prefix + std::to_string(odd[i] + 1), slerp(right, mid, i / 4.0));
      }
    }
    add("Fpz", on_sphere(90.0, 90.0));
    add("Fp1", on_sphere(90.0, 108.0));
    add("Fp2", on_sphere(90.0, 72.0));
    add("Oz", on_sphere(90.0, 270.0));
    add("O1", on_sphere(90.0, 252.0));
    add("O2", on_sphere(90.0, 288.0));
    add("Iz", on_sphere(112.5, 270.0));
    add("CB1", on_sphere(112.5, 240.0));
    add("CB2", on_sphere(112.5, 300.0));
    // Legacy 10-20 names.
    t["t3"] = {"T3", t.at("t7").second};
    t["t4"] = {"T4", t.at("t8").second};
    t["t5"] = {"T5", t.at("p7").second};
    t["t6"] = {"T6", t.at("p8").second};
    return t;
  }();
  return built;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::optional<Point> electrode_position(const std::string& label) {
  const auto it = table().find(lower(label));
  if (it == table().end()) return std::nullopt;
  return it->second.second;
}

std::vector<std::string> known_electrodes() {
  std::vector<std::string> out;
  for (const auto& [key, entry] : table()) out.push_back(entry.first);
  return out;
}

namespace {

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string topomap_svg(std::span<const double> scores,
                        std::span<const std::string> channel_labels,
                        const TopomapOptions& options) {
  if (scores.size() != channel_labels.size()) {
    throw ValidationError("score count differs from channel label count");
  }
  std::vector<Point> positions;
  for (const auto& label : channel_labels) {
    auto p = electrode_position(label);
    if (const auto it = options.extra_positions.find(label); it != options.extra_positions.end()) {
      p = it->second;
    }
    if (!p) throw ValidationError("no scalp position for channel label '" + label + "'");
    positions.push_back(*p);
  }
  double peak = 0.0;
  for (double s : scores) peak = std::max(peak, std::abs(s));

  constexpr double kSize = 420.0;
  constexpr double kCenter = kSize / 2.0;
  constexpr double kRadius = 160.0;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"420\" height=\"440\" "
                    "viewBox=\"0 0 420 440\">\n";
  if (!options.title.empty()) {
    svg += "  <text x=\"210\" y=\"432\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">" + xml_escape(options.title) + "</text>\n";
  }
  svg += "  <circle cx=\"210\" cy=\"210\" r=\"160\" fill=\"none\" stroke=\"black\" "
         "stroke-width=\"2\"/>\n";
  svg += "  <polyline points=\"195,52 210,30 225,52\" fill=\"none\" stroke=\"black\" "
         "stroke-width=\"2\"/>\n";
  svg += "  <ellipse cx=\"44\" cy=\"210\" rx=\"8\" ry=\"24\" fill=\"none\" stroke=\"black\" "
         "stroke-width=\"2\"/>\n";
  svg += "  <ellipse cx=\"376\" cy=\"210\" rx=\"8\" ry=\"24\" fill=\"none\" stroke=\"black\" "
         "stroke-width=\"2\"/>\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double level = peak > 0.0 ? std::abs(scores[i]) / peak : 0.0;
    const int shade = static_cast<int>(std::lround(255.0 * (1.0 - level)));
    const bool selected = std::find(options.selected.begin(), options.selected.end(), i) !=
                          options.selected.end();
    const double cx = kCenter + kRadius * positions[i].x;
    const double cy = kCenter - kRadius * positions[i].y;
    svg += "  <circle class=\"electrode\" data-label=\"" + xml_escape(channel_labels[i]) +
           "\" cx=\"" +
           num(cx) + "\" cy=\"" + num(cy) + "\" r=\"11\" fill=\"rgb(255," +
           std::to_string(shade) + "," + std::to_string(shade) + ")\" stroke=\"" +
           (selected ? "black\" stroke-width=\"3\"" : "gray\" stroke-width=\"1\"") + "/>\n";
    svg += "  <text x=\"" + num(cx) + "\" y=\"" + num(cy + 3.5) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"8\">" +
           xml_escape(channel_labels[i]) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_topomap_svg(std::span<const double> scores,
                      std::span<const std::string> channel_labels,
                      const std::filesystem::path& path, const TopomapOptions& options) {
  evaluation::write_text_file(path, topomap_svg(scores, channel_labels, options));
}

}  // namespace plugselect::topomap
