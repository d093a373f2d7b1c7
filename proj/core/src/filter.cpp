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

#include "plugselect/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "plugselect/error.hpp"

namespace plugselect::filter {
namespace {

using cd = std::complex<double>;

struct Prewarped {
  double center_sq;  // w0^2 = wl * wh
  double bandwidth;  // wh - wl
  double epsilon;
  int proto_order;
};

double prewarp(double freq_hz, double fs) {
  return 2.0 * fs * std::tan(std::numbers::pi * freq_hz / fs);
}

Prewarped prewarped(const FilterSpec& spec, double fs) {
  const double wl = prewarp(spec.low_hz, fs);
  const double wh = prewarp(spec.high_hz, fs);
  return {wl * wh, wh - wl, std::sqrt(std::pow(10.0, spec.ripple_db / 10.0) - 1.0),
          spec.order / 2};
}

double chebyshev_poly(int n, double x) {
  if (std::abs(x) <= 1.0) return std::cos(n * std::acos(x));
  const double v = std::cosh(n * std::acosh(std::abs(x)));
  return (x < 0.0 && n % 2 == 1) ? -v : v;
}

}  // namespace

void FilterSpec::validate(double fs) const {
  if (order < 2 || order % 2 != 0) {
    throw ValidationError("band-pass order must be even and >= 2, got " +
                          std::to_string(order));
  }
  if (!(fs > 0.0)) throw ValidationError("sampling rate must be positive");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0)) {
    throw ValidationError("band edges must satisfy 0 < low < high < fs/2");
  }
  if (!(ripple_db > 0.0)) throw ValidationError("ripple must be positive");
}

std::complex<double> SosFilter::response(double freq_hz, double fs) const {
  const double omega = 2.0 * std::numbers::pi * freq_hz / fs;
  const cd z1 = std::polar(1.0, -omega);
  const cd z2 = z1 * z1;
  cd h = 1.0;
  for (const auto& s : sections) {
    h *= (s.b[0] + s.b[1] * z1 + s.b[2] * z2) / (1.0 + s.a[1] * z1 + s.a[2] * z2);
  }
  return h;
}

std::vector<double> SosFilter::apply(std::span<const double> signal) const {
  std::vector<double> y(signal.begin(), signal.end());
  for (const auto& s : sections) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& v : y) {
      const double x = v;
      const double out = s.b[0] * x + z1;
      z1 = s.b[1] * x - s.a[1] * out + z2;
      z2 = s.b[2] * x - s.a[2] * out;
      v = out;
    }
  }
  return y;
}

namespace {

// Runs the cascade with per-section state initialized to the steady state of
// a constant input equal to the first sample.
void filter_steady_start(const std::vector<Biquad>& sections,
                         std::vector<double>& y) {
  if (y.empty()) return;
  double level = y.front();
  for (const auto& s : sections) {
    const double dc = (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[1] + s.a[2]);
    double z2 = (s.b[2] - s.a[2] * dc) * level;
    double z1 = (s.b[1] - s.a[1] * dc) * level + z2;
    for (double& v : y) {
      const double x = v;
      const double out = s.b[0] * x + z1;
      z1 = s.b[1] * x - s.a[1] * out + z2;
      z2 = s.b[2] * x - s.a[2] * out;
      v = out;
    }
    level *= dc;
  }
}

}  // namespace

std::vector<double> SosFilter::apply_zero_phase(
    std::span<const double> signal) const {
  const std::size_t n = signal.size();
  if (n == 0) return {};
  const std::size_t pad = std::min(n - 1, 3 * (2 * sections.size() + 1));

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * signal[0] - signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) {
    ext.push_back(2.0 * signal[n - 1] - signal[n - 1 - i]);
  }

  filter_steady_start(sections, ext);
  std::reverse(ext.begin(), ext.end());
  filter_steady_start(sections, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

SosFilter design_chebyshev_bandpass(const FilterSpec& spec, double fs) {
  spec.validate(fs);
  const auto pw = prewarped(spec, fs);
  const int n = pw.proto_order;
  const double mu = std::asinh(1.0 / pw.epsilon) / n;

  // Analog prototype poles, low-pass -> band-pass, bilinear map.
  std::vector<cd> zpoles;
  zpoles.reserve(2 * static_cast<std::size_t>(n));
  const double two_fs = 2.0 * fs;
  for (int k = 1; k <= n; ++k) {
    const double theta = std::numbers::pi * (2.0 * k - 1.0) / (2.0 * n);
    const cd p(-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta));
    const cd pb = p * pw.bandwidth;
    const cd disc = std::sqrt(pb * pb - 4.0 * pw.center_sq);
    for (const cd s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) {
      const cd z = (two_fs + s) / (two_fs - s);
      if (!(std::abs(z) < 1.0 - 1e-12) || !std::isfinite(z.real())) {
        throw NumericalError("unstable Chebyshev design: pole at |z| = " +
                             std::to_string(std::abs(z)) +
                             " (band edge too close to Nyquist or DC?)");
      }
      zpoles.push_back(z);
    }
  }

  // Pair conjugates into biquads; leftover real poles pair with each other.
  constexpr double kRealTol = 1e-10;
  SosFilter out;
  std::vector<double> reals;
  for (const cd& z : zpoles) {
    if (z.imag() > kRealTol) {
      out.sections.push_back({{1.0, 0.0, -1.0}, {1.0, -2.0 * z.real(), std::norm(z)}});
    } else if (std::abs(z.imag()) <= kRealTol) {
      reals.push_back(z.real());
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    out.sections.push_back(
        {{1.0, 0.0, -1.0}, {1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]}});
  }
  if (out.sections.size() != static_cast<std::size_t>(n)) {
    throw NumericalError("Chebyshev design produced an unpaired pole");
  }

  // Match the prototype's DC gain at the (warped) band center.
  const double center_hz =
      fs / std::numbers::pi * std::atan(std::sqrt(pw.center_sq) / two_fs);
  const double target = (n % 2 == 1) ? 1.0 : 1.0 / std::sqrt(1.0 + pw.epsilon * pw.epsilon);
  const double gain = target / out.magnitude(center_hz, fs);
  if (!std::isfinite(gain)) throw NumericalError("Chebyshev gain is not finite");
  for (double& b : out.sections.front().b) b *= gain;
  return out;
}

double chebyshev_bandpass_magnitude(const FilterSpec& spec, double fs,
                                    double freq_hz) {
  spec.validate(fs);
  const auto pw = prewarped(spec, fs);
  const double w = prewarp(freq_hz, fs);
  if (w == 0.0) return 0.0;
  const double omega = (w * w - pw.center_sq) / (w * pw.bandwidth);
  const double t = chebyshev_poly(pw.proto_order, omega);
  return 1.0 / std::sqrt(1.0 + pw.epsilon * pw.epsilon * t * t);
}

eegdata::EegTrial bandpass_chebyshev(const eegdata::EegTrial& trial,
                                     const FilterSpec& spec, double fs) {
  const SosFilter sos = design_chebyshev_bandpass(spec, fs);
  eegdata::EegTrial out = trial;
  for (std::size_t c = 0; c < trial.data.rows(); ++c) {
    const auto src = trial.data.row(c);
    const auto filtered = spec.zero_phase ? sos.apply_zero_phase(src) : sos.apply(src);
    std::copy(filtered.begin(), filtered.end(), out.data.row(c).begin());
  }
  return out;
}

}  // namespace plugselect::filter
