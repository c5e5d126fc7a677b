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

#ifndef UWSVC_SVC_HPP
#define UWSVC_SVC_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "uwsvc/common.hpp"

namespace uwsvc {

// ---------------------------------------------------------------------------
// Layer ladder
// ---------------------------------------------------------------------------

struct SvcLayer {
  int index = 0;                  // 0 is the base layer
  double incremental_rate_bps = 0.0;
  double cumulative_rate_bps = 0.0;
  double frame_rate_fps = 0.0;
  std::optional<double> psnr_db;
};

/// Hyperbolic rate-distortion model D(R) = theta / (R - r0) + d0.
struct RdParams {
  double theta = 0.0;
  double r0_bps = 0.0;
  double d0 = 0.0;
};

struct SvcLadder {
  std::vector<SvcLayer> layers;
  RdParams rd_params;

  void validate() const {
    if (layers.empty()) throw ContractError("SvcLadder: base layer required");
    double prev = 0.0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const double expect = prev + layers[l].incremental_rate_bps;
      if (std::abs(layers[l].cumulative_rate_bps - expect) >
          1e-6 * std::max(1.0, expect)) {
        throw ContractError("SvcLadder: cumulative rates do not telescope");
      }
      if (l > 0 && !(layers[l].cumulative_rate_bps > layers[l - 1].cumulative_rate_bps)) {
        throw ContractError("SvcLadder: cumulative rate must increase with layer");
      }
      prev = layers[l].cumulative_rate_bps;
    }
    if (!(rd_params.r0_bps < layers.front().cumulative_rate_bps)) {
      throw ContractError("SvcLadder: rd model pole must sit below the base rate");
    }
  }

  int levels() const { return static_cast<int>(layers.size()); }
  double base_rate_bps() const { return layers.front().cumulative_rate_bps; }
  double top_rate_bps() const { return layers.back().cumulative_rate_bps; }
  double cumulative_rate_bps(int l) const { return layers.at(static_cast<std::size_t>(l)).cumulative_rate_bps; }
};

/// Builds a ladder from cumulative rates; incremental rates are differenced.
inline SvcLadder make_ladder(const std::vector<double>& cumulative_rates_bps,
                             const std::vector<double>& frame_rates_fps,
                             const std::vector<double>& psnrs_db,
                             RdParams rd) {
  SvcLadder ladder;
  ladder.rd_params = rd;
  double prev = 0.0;
  for (std::size_t l = 0; l < cumulative_rates_bps.size(); ++l) {
    SvcLayer layer;
    layer.index = static_cast<int>(l);
    layer.cumulative_rate_bps = cumulative_rates_bps[l];
    layer.incremental_rate_bps = cumulative_rates_bps[l] - prev;
    prev = cumulative_rates_bps[l];
    if (l < frame_rates_fps.size()) layer.frame_rate_fps = frame_rates_fps[l];
    if (l < psnrs_db.size()) layer.psnr_db = psnrs_db[l];
    ladder.layers.push_back(layer);
  }
  ladder.validate();
  return ladder;
}

/// 8-bit MSE distortion from PSNR: D = 255^2 * 10^(-PSNR/10).
inline double psnr_to_distortion(double psnr_db) {
  return 255.0 * 255.0 * std::pow(10.0, -psnr_db / 10.0);
}

// ---------------------------------------------------------------------------
// Rate-distortion model
// ---------------------------------------------------------------------------

/// D(R) = theta/(R - r0) + d0 for R above the model pole.
inline double distortion(const SvcLadder& ladder, double rate_bps) {
  if (!(rate_bps > ladder.rd_params.r0_bps)) {
    throw DomainError("distortion: rate must exceed the model pole R0");
  }
  return ladder.rd_params.theta / (rate_bps - ladder.rd_params.r0_bps) +
         ladder.rd_params.d0;
}

/// Least-squares fit of (theta, r0, d0) to rate/distortion points. For a
/// fixed pole the model is linear in (theta, d0); the pole itself is found
/// by a coarse scan plus golden-section refinement, constrained below the
/// smallest sample rate.
inline RdParams fit_rd_params(const std::vector<std::pair<double, double>>& points) {
  std::vector<double> rates;
  std::vector<double> dists;
  for (const auto& [r, d] : points) {
    bool dup = false;
    for (double seen : rates) {
      if (std::abs(seen - r) <= 1e-9 * std::max(1.0, std::abs(r))) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      rates.push_back(r);
      dists.push_back(d);
    }
  }
  if (rates.size() < 3) throw FitError("fit_rd_params: need >= 3 points with distinct rates");

  double min_rate = rates.front();
  double max_rate = rates.front();
  for (double r : rates) {
    min_rate = std::min(min_rate, r);
    max_rate = std::max(max_rate, r);
  }
  const double span = std::max(max_rate - min_rate, std::abs(min_rate) * 1e-3 + 1.0);

  // Linear LS in (theta, d0) for a fixed pole; returns SSE.
  auto solve_linear = [&](double r0, double* theta, double* d0) {
    double sxx = 0.0, sx = 0.0, sxy = 0.0, sy = 0.0;
    const auto n = static_cast<double>(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double x = 1.0 / (rates[i] - r0);
      sxx += x * x;
      sx += x;
      sxy += x * dists[i];
      sy += dists[i];
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-300) {
      *theta = 0.0;
      *d0 = sy / n;
    } else {
      *theta = (n * sxy - sx * sy) / det;
      *d0 = (sxx * sy - sx * sxy) / det;
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double e = *theta / (rates[i] - r0) + *d0 - dists[i];
      sse += e * e;
    }
    return sse;
  };

  // Coarse geometric scan over the pole offset min_rate - r0: dense near the
  // data, sparse far away where the model degenerates to a straight line.
  const double off_lo = 1e-9 * span;
  const double off_hi = 1e4 * span;
  const int kScan = 800;
  const double ratio = std::pow(off_hi / off_lo, 1.0 / kScan);
  double best_off = off_lo;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double off = off_lo * std::pow(ratio, static_cast<double>(i));
    double th, d0;
    const double sse = solve_linear(min_rate - off, &th, &d0);
    if (sse < best_sse) {
      best_sse = sse;
      best_off = off;
    }
  }
  // Golden-section refinement of the offset around the best scan cell.
  {
    double a = std::max(off_lo, best_off / (ratio * ratio));
    double b = std::min(off_hi, best_off * ratio * ratio);
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double th, d0;
    double f1 = solve_linear(min_rate - x1, &th, &d0);
    double f2 = solve_linear(min_rate - x2, &th, &d0);
    for (int it = 0; it < 300 && (b - a) > 1e-14 * b; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = solve_linear(min_rate - x1, &th, &d0);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = solve_linear(min_rate - x2, &th, &d0);
      }
    }
    const double off = 0.5 * (a + b);
    if (solve_linear(min_rate - off, &th, &d0) <= best_sse) {
      best_off = off;
    }
  }
  const double best_r0 = min_rate - best_off;

  RdParams out;
  out.r0_bps = best_r0;
  solve_linear(best_r0, &out.theta, &out.d0);
  return out;
}

// ---------------------------------------------------------------------------
// Layer knapsack
// ---------------------------------------------------------------------------

/// 0/1 flags per layer. The chain constraint (a layer decodes only on top of
/// the one below) forces every selection to be a prefix of the ladder.
struct LayerSelection {
  std::vector<bool> selected;   // flag per layer, index 0 is the base
  bool base_fits_budget = true; // false when even the base exceeds R_max

  int count() const {
    int c = 0;
    for (bool s : selected) c += s ? 1 : 0;
    return c;
  }
  int highest_layer() const { return count() - 1; }
};

/// Rate-budget knapsack over the layer chain. The prefix structure makes the
/// optimum the longest prefix whose cumulative rate fits R_max; the base flag
/// is always set and callers check base_fits_budget for floor feasibility.
inline LayerSelection knapsack_layers(const SvcLadder& ladder, double r_max_bps) {
  if (!(r_max_bps >= 0.0)) throw DomainError("knapsack_layers: R_max must be >= 0");
  LayerSelection sel;
  sel.selected.assign(ladder.layers.size(), false);
  sel.selected[0] = true;
  sel.base_fits_budget = ladder.base_rate_bps() <= r_max_bps;
  for (std::size_t l = 1; l < ladder.layers.size(); ++l) {
    if (ladder.layers[l].cumulative_rate_bps <= r_max_bps) {
      sel.selected[l] = true;
    } else {
      break;
    }
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Defaults
// ---------------------------------------------------------------------------

/// Five-level ladder used throughout: cumulative rates 100.9 to 517.5 kbps,
/// frame rates 1.875 to 30 fps. RD parameters come from the hyperbolic fit
/// of the (rate, PSNR-derived distortion) pairs.
inline SvcLadder default_ladder() {
  static const SvcLadder ladder = [] {
    const std::vector<double> rates = {100.9e3, 179.4e3, 293.3e3, 415.3e3, 517.5e3};
    const std::vector<double> fps = {1.875, 3.75, 7.5, 15.0, 30.0};
    const std::vector<double> psnr = {45.1, 44.14, 43.31, 42.68, 42.19};
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      pts.emplace_back(rates[i], psnr_to_distortion(psnr[i]));
    }
    return make_ladder(rates, fps, psnr, fit_rd_params(pts));
  }();
  return ladder;
}

}  // namespace uwsvc

#endif  // UWSVC_SVC_HPP
