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

#ifndef PLUGSELECT_FILTER_HPP_
#define PLUGSELECT_FILTER_HPP_

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "plugselect/eegdata.hpp"

namespace plugselect::filter {

// Band-pass design parameters. `order` is the order of the resulting band-pass
// filter (twice the order of the low-pass prototype), so it must be even.
struct FilterSpec {
  int order = 6;
  double low_hz = 4.0;
  double high_hz = 40.0;
  double ripple_db = 0.5;
  bool zero_phase = true;

  void validate(double fs) const;
};

// Direct-form II transposed second-order section, a0 normalized to 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{};
};

struct SosFilter {
  std::vector<Biquad> sections;

  std::complex<double> response(double freq_hz, double fs) const;
  double magnitude(double freq_hz, double fs) const {
    return std::abs(response(freq_hz, fs));
  }
  // One causal pass over `signal`, zero initial state.
  std::vector<double> apply(std::span<const double> signal) const;
  // Forward then backward pass with odd-reflection padding at both ends.
  std::vector<double> apply_zero_phase(std::span<const double> signal) const;
};

// Chebyshev type-I band-pass via analog prototype, low-pass to band-pass
// transform and bilinear mapping with pre-warped edges. Throws
// NumericalError when a pole lands on or outside the unit circle.
SosFilter design_chebyshev_bandpass(const FilterSpec& spec, double fs);

// Ideal magnitude of the analog design evaluated through the same
// frequency warping. Independent of the SOS realization.
double chebyshev_bandpass_magnitude(const FilterSpec& spec, double fs,
                                    double freq_hz);

eegdata::EegTrial bandpass_chebyshev(const eegdata::EegTrial& trial,
                                     const FilterSpec& spec, double fs);

}  // namespace plugselect::filter

#endif  // PLUGSELECT_FILTER_HPP_
