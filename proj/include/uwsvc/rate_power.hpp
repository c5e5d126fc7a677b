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

#ifndef UWSVC_RATE_POWER_HPP
#define UWSVC_RATE_POWER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uwsvc/common.hpp"

namespace uwsvc {

// ---------------------------------------------------------------------------
// Broadcast problem
// ---------------------------------------------------------------------------

struct BroadcastReceiver {
  int rx_id = 0;
  double gain = 0.0;          // |h|^2, folds in attenuation and fading
  double noise_power_w = 1.0; // s_i, band-integrated
  int active = 1;             // alpha weight, 0 or 1
  double outage_floor_bps = 0.0;      // R*_i
  double capacity_ceiling_bps = 0.0;  // E[C_i]
};

struct BroadcastProblem {
  int tx_id = 0;
  std::vector<BroadcastReceiver> receivers;
  double p_th_w = 0.0;
  double p_max_w = 0.0;
  double bandwidth_hz = 100e3;

  void validate() const {
    if (!(p_th_w > 0.0 && p_th_w <= p_max_w))
      throw DomainError("BroadcastProblem: need 0 < p_th <= p_max");
    if (!(bandwidth_hz > 0.0)) throw DomainError("BroadcastProblem: bandwidth must be > 0");
    for (const auto& r : receivers) {
      if (!(r.noise_power_w > 0.0))
        throw DomainError("BroadcastProblem: noise power must be > 0");
      if (!(r.outage_floor_bps >= 0.0))
        throw DomainError("BroadcastProblem: outage floor must be >= 0");
      if (!(r.capacity_ceiling_bps > 0.0))
        throw DomainError("BroadcastProblem: capacity ceiling must be > 0");
      if (r.active != 0 && r.active != 1)
        throw DomainError("BroadcastProblem: active weight must be 0 or 1");
    }
  }
};

struct BroadcastSolution {
  double p_star_w = 0.0;
  double min_feasible_power_w = 0.0;     // smallest p meeting every active floor
  std::vector<double> assigned_rate_bps; // one entry per receiver; 0 for inactive
  double objective = 0.0;                // expected weighted sum of log2 terms
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Shannon rate of one link: B * log2(1 + p|h|^2/s).
inline double instantaneous_rate(double p_w, double gain, double noise_power_w,
                                 double bandwidth_hz) {
  if (!(noise_power_w > 0.0)) throw DomainError("instantaneous_rate: noise must be > 0");
  if (!(p_w >= 0.0)) throw DomainError("instantaneous_rate: power must be >= 0");
  return bandwidth_hz * log2_1p(p_w * gain / noise_power_w);
}

/// Ascending-gain receiver order (weak to strong), ties by rx_id.
inline std::vector<BroadcastReceiver> sort_receivers_by_gain(
    std::vector<BroadcastReceiver> receivers) {
  std::stable_sort(receivers.begin(), receivers.end(),
                   [](const BroadcastReceiver& a, const BroadcastReceiver& b) {
                     if (a.gain != b.gain) return a.gain < b.gain;
                     return a.rx_id < b.rx_id;
                   });
  return receivers;
}

/// Expected weighted sum of log2(1 + p|h|^2 xi / s) over unit-mean exponential
/// fading, one independent draw stream per receiver keyed off the seed.
/// Separable across receivers, so the per-receiver means are reusable by the
/// subset planner.
inline std::vector<double> expected_log_terms(const BroadcastProblem& prob, double p_w,
                                              int n_mc, std::uint64_t seed) {
  std::vector<double> terms(prob.receivers.size(), 0.0);
  for (std::size_t i = 0; i < prob.receivers.size(); ++i) {
    const auto& r = prob.receivers[i];
    Rng rng = Rng::child(seed, 0x1091, static_cast<std::uint64_t>(r.rx_id));
    double acc = 0.0;
    for (int k = 0; k < n_mc; ++k) {
      acc += log2_1p(p_w * r.gain * rng.exponential() / r.noise_power_w);
    }
    terms[i] = acc / n_mc;
  }
  return terms;
}

inline double broadcast_objective(const BroadcastProblem& prob, double p_w, int n_mc,
                                  std::uint64_t seed) {
  const auto terms = expected_log_terms(prob, p_w, n_mc, seed);
  double obj = 0.0;
  for (std::size_t i = 0; i < prob.receivers.size(); ++i) {
    if (prob.receivers[i].active) obj += terms[i];
  }
  return obj;
}

/// Solves the broadcast power/rate problem. The objective is increasing in p
/// and the floor constraints relax as p grows, so the feasible powers form an
/// upper interval of [p_th, p_max]: p* = p_max whenever any power works, and
/// the reported min_feasible_power is located by bisection. Assigned rates
/// are min(instantaneous rate at the receiver's gain, capacity ceiling);
/// floors that remain unmet at p_max are reported, never clipped.
inline BroadcastSolution solve_broadcast(const BroadcastProblem& prob, int n_mc,
                                         std::uint64_t seed) {
  prob.validate();
  bool any_active = false;
  for (const auto& r : prob.receivers) any_active |= (r.active == 1);
  if (!any_active) throw EmptyActiveSetError("solve_broadcast: all receivers inactive");

  auto assigned = [&](const BroadcastReceiver& r, double p) {
    return std::min(instantaneous_rate(p, r.gain, r.noise_power_w, prob.bandwidth_hz),
                    r.capacity_ceiling_bps);
  };
  auto floors_met = [&](double p) {
    for (const auto& r : prob.receivers) {
      if (r.active && assigned(r, p) < r.outage_floor_bps) return false;
    }
    return true;
  };

  if (!floors_met(prob.p_max_w)) {
    for (const auto& r : prob.receivers) {
      if (r.active && assigned(r, prob.p_max_w) < r.outage_floor_bps) {
        throw OutageInfeasibleError(
            r.rx_id, "solve_broadcast: receiver " + std::to_string(r.rx_id) +
                         " cannot reach its outage floor at p_max");
      }
    }
  }

  BroadcastSolution sol;
  sol.p_star_w = prob.p_max_w;
  if (floors_met(prob.p_th_w)) {
    sol.min_feasible_power_w = prob.p_th_w;
  } else {
    double lo = prob.p_th_w;
    double hi = prob.p_max_w;
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * prob.p_max_w; ++it) {
      const double mid = 0.5 * (lo + hi);
      (floors_met(mid) ? hi : lo) = mid;
    }
    sol.min_feasible_power_w = hi;
  }

  sol.assigned_rate_bps.resize(prob.receivers.size(), 0.0);
  for (std::size_t i = 0; i < prob.receivers.size(); ++i) {
    if (prob.receivers[i].active) {
      sol.assigned_rate_bps[i] = assigned(prob.receivers[i], sol.p_star_w);
    }
  }
  sol.objective = broadcast_objective(prob, sol.p_star_w, n_mc, seed);
  return sol;
}

}  // namespace uwsvc

#endif  // UWSVC_RATE_POWER_HPP
