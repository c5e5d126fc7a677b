// Copyright 2026 The UWSVC Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UWSVC_CHANNEL_HPP
#define UWSVC_CHANNEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "uwsvc/common.hpp"

namespace uwsvc {

// ---------------------------------------------------------------------------
// Frequency grid
// ---------------------------------------------------------------------------

/// Uniform frequency grid over the passband; the integration domain for the
/// link-capacity integral.
struct FrequencyGrid {
  double f_lo_hz = 50e3;
  double f_hi_hz = 150e3;
  int n_points = 1024;

  FrequencyGrid() = default;
  FrequencyGrid(double lo, double hi, int n) : f_lo_hz(lo), f_hi_hz(hi), n_points(n) {
    validate();
  }

  void validate() const {
    if (!(f_lo_hz > 0.0)) throw DomainError("FrequencyGrid: f_lo must be > 0");
    if (!(f_hi_hz > f_lo_hz)) throw DomainError("FrequencyGrid: f_hi must exceed f_lo");
    if (n_points < 2) throw DomainError("FrequencyGrid: need at least 2 points");
  }

  double bandwidth_hz() const { return f_hi_hz - f_lo_hz; }

  double frequency(int i) const {
    return f_lo_hz + (f_hi_hz - f_lo_hz) * static_cast<double>(i) /
                         static_cast<double>(n_points - 1);
  }

  bool operator==(const FrequencyGrid&) const = default;
};

// ---------------------------------------------------------------------------
// Attenuation and ambient noise
// ---------------------------------------------------------------------------

/// Thorp absorption in dB/km, frequency in Hz.
inline double thorp_absorption_db_per_km(double f_hz) {
  if (!(f_hz > 0.0)) throw DomainError("thorp: frequency must be > 0");
  const double f = f_hz / 1e3;  // kHz
  const double fsq = f * f;
  if (f >= 0.4) {
    return 0.11 * fsq / (1.0 + fsq) + 44.0 * fsq / (4100.0 + fsq) +
           2.75e-4 * fsq + 0.003;
  }
  return 0.002 + 0.11 * (fsq / (1.0 + fsq)) + 0.011 * fsq;
}

/// Spreading-plus-absorption power gain, dimensionless.
/// gain = d^-k * 10^(-thorp(f) * d_km / 10)
inline double attenuation(double distance_m, double f_hz, double spreading_exponent = 1.5,
                          bool absorption = true) {
  if (!(distance_m > 0.0)) throw DomainError("attenuation: distance must be > 0");
  if (!(f_hz > 0.0)) throw DomainError("attenuation: frequency must be > 0");
  double gain = std::pow(distance_m, -spreading_exponent);
  if (absorption) {
    gain *= std::pow(10.0, -thorp_absorption_db_per_km(f_hz) * (distance_m / 1e3) / 10.0);
  }
  return gain;
}

/// Ambient-noise composite parameters. The wind default keeps the total PSD
/// monotone decreasing across the 10-100 kHz band (thermal noise takes over
/// only above it).
struct NoiseParams {
  double shipping = 0.5;   // activity factor in [0,1]
  double wind_mps = 10.0;  // surface wind speed
  double scale = 1.0;      // linear multiplier on the composite output
};

/// Four-component ambient noise PSD (turbulence, shipping, waves, thermal),
/// returned linear in the simulator's noise power units per Hz.
inline double noise_psd(double f_hz, const NoiseParams& params = {}) {
  if (!(f_hz > 0.0)) throw DomainError("noise_psd: frequency must be > 0");
  const double f = f_hz / 1e3;  // kHz
  const double log_f = std::log10(f);
  const double turb_db = 17.0 - 30.0 * log_f;
  const double ship_db = 40.0 + 20.0 * (params.shipping - 0.5) + 26.0 * log_f -
                         60.0 * std::log10(f + 0.03);
  const double wave_db = 50.0 + 7.5 * std::sqrt(params.wind_mps) + 20.0 * log_f -
                         40.0 * std::log10(f + 0.4);
  const double therm_db = -15.0 + 20.0 * log_f;
  const double lin = std::pow(10.0, turb_db / 10.0) + std::pow(10.0, ship_db / 10.0) +
                     std::pow(10.0, wave_db / 10.0) + std::pow(10.0, therm_db / 10.0);
  return params.scale * lin;
}

// ---------------------------------------------------------------------------
// Channel state and transmit spectrum
// ---------------------------------------------------------------------------

/// Frequency response, block-fading gain, delay and noise for one directed
/// link during one chunk.
struct ChannelState {
  int tx_id = -1;
  int rx_id = -1;
  std::vector<double> gain_samples;  // |H(f)|^2 per grid point
  double fading_gain = 1.0;          // |h|^2, block-constant within the chunk
  double delay_s = 0.0;
  std::vector<double> noise_psd_samples;  // S(f) per grid point
  int chunk_index = 0;

  void validate() const {
    for (double g : gain_samples)
      if (!(g >= 0.0)) throw DomainError("ChannelState: gain samples must be >= 0");
    for (double s : noise_psd_samples)
      if (!(s > 0.0)) throw DomainError("ChannelState: noise samples must be > 0");
    if (!(fading_gain >= 0.0)) throw DomainError("ChannelState: fading gain must be >= 0");
    if (!(delay_s >= 0.0)) throw DomainError("ChannelState: delay must be >= 0");
  }
};

/// Transmit power spectral density over the grid plus its band integral.
struct PowerSpectrum {
  std::vector<double> psd;  // W/Hz per grid point
  double total_power_w = 0.0;

  static PowerSpectrum flat(const FrequencyGrid& grid, double total_power_w) {
    if (!(total_power_w >= 0.0)) throw DomainError("PowerSpectrum: power must be >= 0");
    PowerSpectrum p;
    p.psd.assign(static_cast<std::size_t>(grid.n_points),
                 total_power_w / grid.bandwidth_hz());
    p.total_power_w = total_power_w;
    return p;
  }

  static PowerSpectrum from_samples(const FrequencyGrid& grid, std::vector<double> samples) {
    PowerSpectrum p;
    p.psd = std::move(samples);
    for (double v : p.psd)
      if (!(v >= 0.0)) throw DomainError("PowerSpectrum: psd must be >= 0 everywhere");
    p.total_power_w = trapezoid(p.psd, grid.f_lo_hz, grid.f_hi_hz);
    return p;
  }

  /// Checks the stored total against the grid integral (relative 1e-9).
  void validate(const FrequencyGrid& grid) const {
    const double integral = trapezoid(psd, grid.f_lo_hz, grid.f_hi_hz);
    const double ref = std::max(std::abs(integral), 1e-300);
    if (std::abs(integral - total_power_w) > 1e-9 * ref)
      throw ContractError("PowerSpectrum: total_power inconsistent with psd integral");
  }
};

// ---------------------------------------------------------------------------
// Fading and capacity
// ---------------------------------------------------------------------------

/// Unit-mean exponential (Rayleigh power) block-fading draws, one per link.
/// Sorting the result gives the weak-to-strong receiver ordering.
inline std::vector<double> sample_fading(std::uint64_t rng_seed, int n_links) {
  if (n_links < 1) throw ContractError("sample_fading: need at least one link");
  Rng rng(rng_seed);
  std::vector<double> gains(static_cast<std::size_t>(n_links));
  for (double& g : gains) g = rng.exponential();
  return gains;
}

/// Link capacity in bits/s: trapezoidal integral of
/// log2(1 + P(f)|H(f)|^2|h|^2 / S(f)) over the passband. The one-sided
/// integral without a 1/2 factor reduces to B*log2(1+SNR) on flat channels.
inline double capacity(const ChannelState& chan, const PowerSpectrum& pwr,
                       const FrequencyGrid& grid) {
  const auto n = static_cast<std::size_t>(grid.n_points);
  if (chan.gain_samples.size() != n || chan.noise_psd_samples.size() != n ||
      pwr.psd.size() != n) {
    throw ContractError("capacity: channel/power samples do not match the grid");
  }
  std::vector<double> integrand(n);
  for (std::size_t i = 0; i < n; ++i) {
    integrand[i] =
        log2_1p(pwr.psd[i] * chan.gain_samples[i] * chan.fading_gain /
                chan.noise_psd_samples[i]);
  }
  return trapezoid(integrand, grid.f_lo_hz, grid.f_hi_hz);
}

struct CapacityEstimate {
  double mean_bps = 0.0;
  double std_error_bps = 0.0;
  int n_samples = 0;
};

/// Fading-power sampler; the default is unit-mean exponential. A constant
/// sampler models a degenerate (no-fading) link.
using FadingSampler = double (*)(Rng&);

inline double rayleigh_power_fading(Rng& rng) { return rng.exponential(); }
inline double degenerate_fading(Rng&) { return 1.0; }

/// Monte-Carlo mean of capacity over fading draws, applied on top of the
/// template's fading gain.
inline CapacityEstimate expected_capacity(const ChannelState& chan_template,
                                          const PowerSpectrum& pwr,
                                          const FrequencyGrid& grid, int n_samples,
                                          std::uint64_t seed,
                                          FadingSampler sampler = rayleigh_power_fading) {
  if (n_samples < 1) throw ContractError("expected_capacity: n_samples must be >= 1");
  Rng rng(seed);
  ChannelState chan = chan_template;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    chan.fading_gain = chan_template.fading_gain * sampler(rng);
    const double c = capacity(chan, pwr, grid);
    sum += c;
    sum_sq += c * c;
  }
  CapacityEstimate est;
  est.n_samples = n_samples;
  est.mean_bps = sum / n_samples;
  if (n_samples > 1) {
    const double var = std::max(0.0, (sum_sq - sum * sum / n_samples) / (n_samples - 1));
    est.std_error_bps = std::sqrt(var / n_samples);
  }
  return est;
}

}  // namespace uwsvc

#endif  // UWSVC_CHANNEL_HPP
