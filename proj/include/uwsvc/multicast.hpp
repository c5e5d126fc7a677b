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

#ifndef UWSVC_MULTICAST_HPP
#define UWSVC_MULTICAST_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "uwsvc/geometry.hpp"
#include "uwsvc/rate_power.hpp"
#include "uwsvc/svc.hpp"

namespace uwsvc {

// ---------------------------------------------------------------------------
// Shutdown problem
// ---------------------------------------------------------------------------

/// Inputs of the active-set selection: the broadcast link budget, the layer
/// ladder with its distortion model, the pairwise overlap matrix (indexed by
/// receiver position, not id), and the three constraint thresholds.
struct ShutdownProblem {
  BroadcastProblem broadcast;
  SvcLadder ladder;
  OverlapMatrix overlap{0};
  double qos_threshold = 0.0;     // floor on the expected sum-log objective
  double distortion_threshold = 0.0;
  double overlap_threshold = 0.0; // Pr floor licensing a shutdown
  int n_mc = 4096;
  std::uint64_t seed = 0;

  void validate() const {
    broadcast.validate();
    ladder.validate();
    if (overlap.size() != broadcast.receivers.size())
      throw ContractError("ShutdownProblem: overlap matrix size != receiver count");
    if (!std::isfinite(qos_threshold) || !std::isfinite(distortion_threshold) ||
        !std::isfinite(overlap_threshold))
      throw DomainError("ShutdownProblem: thresholds must be finite");
  }
};

struct MulticastPlan {
  std::vector<int> active_flags;          // alpha per receiver
  std::vector<double> assigned_rate_bps;  // 0 for shut-down receivers
  std::vector<LayerSelection> layer_selection;
  double objective = 0.0;  // expected sum-log over the active set
  int qoe_proxy = 0;       // number of active receivers

  int active_count() const {
    int c = 0;
    for (int a : active_flags) c += a;
    return c;
  }
};

// ---------------------------------------------------------------------------
// Feasibility predicate
// ---------------------------------------------------------------------------

/// Per-receiver quantities that do not depend on the active set: a receiver's
/// assigned rate, floor feasibility, distortion and expected log term are all
/// functions of the shared broadcast power alone, so subset search reduces to
/// sums and coverage checks.
struct ShutdownTableau {
  std::vector<double> rate_bps;
  std::vector<bool> floor_ok;
  std::vector<bool> distortion_ok;
  std::vector<double> log_term;

  static ShutdownTableau build(const ShutdownProblem& prob) {
    prob.validate();
    const auto& bc = prob.broadcast;
    ShutdownTableau t;
    const std::size_t n = bc.receivers.size();
    t.rate_bps.resize(n);
    t.floor_ok.resize(n);
    t.distortion_ok.resize(n);
    t.log_term = expected_log_terms(bc, bc.p_max_w, prob.n_mc, prob.seed);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = bc.receivers[i];
      const double rate =
          std::min(instantaneous_rate(bc.p_max_w, r.gain, r.noise_power_w, bc.bandwidth_hz),
                   r.capacity_ceiling_bps);
      t.rate_bps[i] = rate;
      t.floor_ok[i] = rate >= r.outage_floor_bps;
      // below the model pole the hyperbolic distortion is undefined: treat as
      // unbounded distortion
      t.distortion_ok[i] = rate > prob.ladder.rd_params.r0_bps &&
                           distortion(prob.ladder, rate) < prob.distortion_threshold;
    }
    return t;
  }

  double objective(std::uint64_t active_mask) const {
    double obj = 0.0;
    for (std::size_t i = 0; i < log_term.size(); ++i) {
      if (active_mask >> i & 1) obj += log_term[i];
    }
    return obj;
  }
};

/// The three constraint families of the shutdown program, evaluated for one
/// active set given the precomputed tableau:
///  - every active receiver meets its outage floor and distortion bound,
///  - the expected sum-log objective over the active set reaches the QoS
///    threshold,
///  - every shut-down receiver overlaps some active one with probability at
///    least the overlap threshold (a shutdown must be licensed by coverage).
inline bool shutdown_set_feasible(const ShutdownProblem& prob, const ShutdownTableau& t,
                                  std::uint64_t active_mask) {
  const std::size_t n = prob.broadcast.receivers.size();
  if (active_mask == 0) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (active_mask >> i & 1) {
      if (!t.floor_ok[i] || !t.distortion_ok[i]) return false;
    }
  }
  if (t.objective(active_mask) < prob.qos_threshold) return false;
  for (std::size_t k = 0; k < n; ++k) {
    if (active_mask >> k & 1) continue;
    bool covered = false;
    for (std::size_t i = 0; i < n && !covered; ++i) {
      if ((active_mask >> i & 1) && prob.overlap.available(k, i) &&
          prob.overlap.prob(k, i) >= prob.overlap_threshold) {
        covered = true;
      }
    }
    if (!covered) return false;
  }
  return true;
}

namespace detail {

inline MulticastPlan plan_from_mask(const ShutdownProblem& prob, const ShutdownTableau& t,
                                    std::uint64_t mask) {
  const std::size_t n = prob.broadcast.receivers.size();
  MulticastPlan plan;
  plan.active_flags.resize(n, 0);
  plan.assigned_rate_bps.resize(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask >> i & 1) {
      plan.active_flags[i] = 1;
      plan.assigned_rate_bps[i] = t.rate_bps[i];
    }
  }
  plan.objective = t.objective(mask);
  plan.qoe_proxy = plan.active_count();
  return plan;
}

/// Shutdown ids (ascending) for lexicographic tie-breaking.
inline std::vector<int> shutdown_ids(const ShutdownProblem& prob, std::uint64_t mask) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < prob.broadcast.receivers.size(); ++i) {
    if (!(mask >> i & 1)) ids.push_back(prob.broadcast.receivers[i].rx_id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Planners
// ---------------------------------------------------------------------------

/// Exhaustive active-set search: maximize the active count, then the
/// expected sum-log objective, then prefer the lexicographically smallest
/// shutdown id set. Receiver count is capped at 16.
inline MulticastPlan plan_exhaustive(const ShutdownProblem& prob) {
  const std::size_t n = prob.broadcast.receivers.size();
  if (n > 16) throw ContractError("plan_exhaustive: more than 16 receivers");
  const auto tableau = ShutdownTableau::build(prob);

  std::optional<std::uint64_t> best;
  int best_count = -1;
  double best_obj = -std::numeric_limits<double>::infinity();
  std::vector<int> best_ids;
  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t mask = 1; mask < total; ++mask) {
    if (!shutdown_set_feasible(prob, tableau, mask)) continue;
    const int count = std::popcount(mask);
    const double obj = tableau.objective(mask);
    bool better = false;
    if (count != best_count) {
      better = count > best_count;
    } else if (obj != best_obj) {
      better = obj > best_obj;
    } else {
      better = detail::shutdown_ids(prob, mask) < best_ids;
    }
    if (better) {
      best = mask;
      best_count = count;
      best_obj = obj;
      best_ids = detail::shutdown_ids(prob, mask);
    }
  }
  if (!best) throw NoFeasibleSetError("plan_exhaustive: no feasible active set");
  return detail::plan_from_mask(prob, tableau, *best);
}

/// Greedy planner: start all-active; while infeasible, shut down the
/// weakest-gain active receiver whose removal keeps every shut-down vehicle
/// overlap-covered. Feasible on return or NoFeasibleSet.
inline MulticastPlan plan_greedy(const ShutdownProblem& prob) {
  const std::size_t n = prob.broadcast.receivers.size();
  if (n > 63) throw ContractError("plan_greedy: receiver count out of range");
  const auto tableau = ShutdownTableau::build(prob);
  std::uint64_t mask = (n == 63) ? ~0ULL >> 1 : (1ULL << n) - 1;

  auto weakest_removable = [&]() -> std::optional<std::size_t> {
    std::optional<std::size_t> pick;
    double pick_gain = 0.0;
    int pick_id = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      const std::uint64_t next = mask & ~(1ULL << i);
      if (next == 0) continue;
      // removal is licensed only if every shut-down vehicle, including this
      // one, keeps an overlap-covering active neighbor
      bool covered = true;
      for (std::size_t k = 0; k < n && covered; ++k) {
        if (next >> k & 1) continue;
        bool ok = false;
        for (std::size_t a = 0; a < n && !ok; ++a) {
          if ((next >> a & 1) && prob.overlap.available(k, a) &&
              prob.overlap.prob(k, a) >= prob.overlap_threshold) {
            ok = true;
          }
        }
        covered = ok;
      }
      if (!covered) continue;
      const auto& r = prob.broadcast.receivers[i];
      if (!pick || r.gain < pick_gain || (r.gain == pick_gain && r.rx_id < pick_id)) {
        pick = i;
        pick_gain = r.gain;
        pick_id = r.rx_id;
      }
    }
    return pick;
  };

  while (!shutdown_set_feasible(prob, tableau, mask)) {
    const auto victim = weakest_removable();
    if (!victim) throw NoFeasibleSetError("plan_greedy: no removable receiver left");
    mask &= ~(1ULL << *victim);
  }
  return detail::plan_from_mask(prob, tableau, mask);
}

/// Fills in the per-receiver layer selection: active receivers get the
/// knapsack prefix their assigned rate affords, shut-down receivers keep the
/// base layer only.
inline MulticastPlan assign_layers(MulticastPlan plan, const SvcLadder& ladder) {
  plan.layer_selection.clear();
  plan.layer_selection.reserve(plan.active_flags.size());
  for (std::size_t i = 0; i < plan.active_flags.size(); ++i) {
    if (plan.active_flags[i]) {
      plan.layer_selection.push_back(knapsack_layers(ladder, plan.assigned_rate_bps[i]));
    } else {
      LayerSelection base_only;
      base_only.selected.assign(ladder.layers.size(), false);
      base_only.selected[0] = true;
      base_only.base_fits_budget = true;
      plan.layer_selection.push_back(base_only);
    }
  }
  return plan;
}

}  // namespace uwsvc

#endif  // UWSVC_MULTICAST_HPP
