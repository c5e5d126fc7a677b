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

#ifndef UWSVC_MAC_HPP
#define UWSVC_MAC_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "uwsvc/channel.hpp"
#include "uwsvc/config.hpp"
#include "uwsvc/consensus.hpp"
#include "uwsvc/geometry.hpp"
#include "uwsvc/metrics.hpp"
#include "uwsvc/multicast.hpp"
#include "uwsvc/rate_power.hpp"
#include "uwsvc/svc.hpp"

namespace uwsvc {

// ---------------------------------------------------------------------------
// TDMA
// ---------------------------------------------------------------------------

/// Round-robin slot map: slot k belongs to vehicle rank (k mod n).
struct TdmaSchedule {
  int n_vehicles = 1;
  double slot_len_s = 1.0;

  int owner_of_slot(int slot) const { return slot % n_vehicles; }
  double slot_start_s(int slot) const { return slot * slot_len_s; }
};

inline TdmaSchedule tdma_schedule(int n_vehicles, double slot_len_s) {
  if (n_vehicles < 1) throw ContractError("tdma_schedule: need at least one vehicle");
  if (!(slot_len_s > 0.0)) throw DomainError("tdma_schedule: slot length must be > 0");
  return TdmaSchedule{n_vehicles, slot_len_s};
}

// ---------------------------------------------------------------------------
// Tone contention
// ---------------------------------------------------------------------------

struct ContentionOutcome {
  int winner_id = -1;
  int rounds = 0;       // contention rounds actually played
  double elapsed_s = 0.0;
};

/// Simplified tone-based contention: contenders pick a backoff slot of one
/// max-propagation-delay each; a uniquely earliest tone wins (everyone else
/// hears it within one delay and defers), ties collide and redraw. Draws are
/// taken in ascending contender-id order from the seeded stream.
inline ContentionOutcome tone_contention(const std::vector<int>& idle_nodes,
                                         double max_prop_delay_s, std::uint64_t seed,
                                         int contention_window = 16, int max_retries = 64) {
  if (idle_nodes.empty()) throw ContractError("tone_contention: no contenders");
  if (!(max_prop_delay_s > 0.0))
    throw DomainError("tone_contention: propagation delay must be > 0");
  if (contention_window < 1) throw DomainError("tone_contention: window must be >= 1");

  std::vector<int> contenders = idle_nodes;
  std::sort(contenders.begin(), contenders.end());
  ContentionOutcome out;
  if (contenders.size() == 1) {
    out.winner_id = contenders.front();
    out.rounds = 1;
    out.elapsed_s = max_prop_delay_s;  // lone tone, no reply to wait out
    return out;
  }

  Rng rng(seed);
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    int best_slot = contention_window;
    int best_id = -1;
    bool tie = false;
    for (int id : contenders) {
      const int slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(contention_window)));
      if (slot < best_slot) {
        best_slot = slot;
        best_id = id;
        tie = false;
      } else if (slot == best_slot) {
        tie = true;
      }
    }
    ++out.rounds;
    out.elapsed_s += (best_slot + 1) * max_prop_delay_s;
    if (!tie) {
      out.winner_id = best_id;
      out.elapsed_s += max_prop_delay_s;  // silence confirming the win
      return out;
    }
    out.elapsed_s += max_prop_delay_s;  // colliding tones drain before redraw
  }
  throw ContentionLivelockError("tone_contention: retry bound exhausted");
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

enum class SimStatus : int {
  Ok = 0,
  UnsatisfiedAfterCap = 1,
  NoFeasibleSet = 2,
  NonConvergence = 3,
  ContentionLivelock = 4,
};

inline const char* sim_status_name(SimStatus s) {
  switch (s) {
    case SimStatus::Ok: return "ok";
    case SimStatus::UnsatisfiedAfterCap: return "unsatisfied_after_cap";
    case SimStatus::NoFeasibleSet: return "no_feasible_set";
    case SimStatus::NonConvergence: return "non_convergence";
    case SimStatus::ContentionLivelock: return "contention_livelock";
  }
  return "unknown";
}

enum class PayloadKind : int { Base, Enhancement, Consensus, Intent, Ack };

/// One logical transfer. Airtime is bits/tx_rate; each recipient's delivery
/// lands at tx_end plus its link delay.
struct SimMessage {
  PayloadKind payload = PayloadKind::Base;
  int sender = -1;           // vehicle rank
  std::vector<int> recipients;
  double bits = 0.0;
  int layer_lo = 0;
  int layer_hi = 0;
  int chunk = 0;
  double tx_rate_bps = 0.0;
  double value = 0.0;        // consensus / intent payload
  std::uint64_t msg_seq = 0;
};

struct SimEvent {
  double time_s = 0.0;
  EventKind kind = EventKind::TxStart;
  int sender = -1;
  std::uint64_t seq = 0;  // insertion order, final tie-break
  SimMessage msg;
  int recipient = -1;  // for RxComplete
  int tag = 0;         // slot index / round / retry counter

  // delivery order: time, then kind rank, then sender id, then insertion
  bool after(const SimEvent& other) const {
    if (time_s != other.time_s) return time_s > other.time_s;
    if (kind != other.kind) return static_cast<int>(kind) > static_cast<int>(other.kind);
    if (sender != other.sender) return sender > other.sender;
    return seq > other.seq;
  }
};

struct SimResult {
  SimStatus status = SimStatus::Ok;
  std::string status_detail;
  EventLog events;
  std::vector<MetricsRecord> metrics;
  int frv_id = -1;
  MulticastPlan final_plan;
  bool qoe_satisfied = false;
  int iterations_used = 0;
};

/// Message-drop hook; the default is a Bernoulli draw per delivery.
using DropFilter = std::function<bool(const SimMessage&, int recipient_rank, double u01)>;

// ---------------------------------------------------------------------------

class SimEngine {
 public:
  explicit SimEngine(ScenarioConfig cfg, DropFilter drop_filter = {})
      : cfg_(std::move(cfg)), drop_filter_(std::move(drop_filter)) {
    ladder_ = cfg_.build_ladder();
    vehicles_ = cfg_.vehicles;
    std::sort(vehicles_.begin(), vehicles_.end(),
              [](const VehicleConfig& a, const VehicleConfig& b) { return a.id < b.id; });
    n_ = static_cast<int>(vehicles_.size());
    build_geometry();
    build_links();
  }

  SimResult run() {
    SimResult result;
    try {
      run_iterations(result);
    } catch (const NoFeasibleSetError& e) {
      result.status = SimStatus::NoFeasibleSet;
      result.status_detail = e.what();
    } catch (const ContentionLivelockError& e) {
      result.status = SimStatus::ContentionLivelock;
      result.status_detail = e.what();
    }
    result.events = std::move(log_);
    result.metrics = std::move(metrics_);
    return result;
  }

  // Exposed for the sweep and plot-data paths: the broadcast problem of one
  // transmitter over one chunk's channel realization.
  BroadcastProblem broadcast_problem(int tx_rank, int iteration, int chunk,
                                     std::optional<PowerProfile> profile = {}) const {
    BroadcastProblem prob;
    prob.tx_id = vehicles_[static_cast<std::size_t>(tx_rank)].id;
    prob.bandwidth_hz = cfg_.channel.grid.bandwidth_hz();
    prob.p_th_w = profile ? profile->p_th_w : vehicles_[static_cast<std::size_t>(tx_rank)].p_th_w;
    prob.p_max_w = profile ? profile->p_max_w : vehicles_[static_cast<std::size_t>(tx_rank)].p_max_w;
    for (int i = 0; i < n_; ++i) {
      if (i == tx_rank || !in_range(tx_rank, i)) continue;
      BroadcastReceiver r;
      r.rx_id = vehicles_[static_cast<std::size_t>(i)].id;
      r.gain = mean_gain(tx_rank, i) * fading(iteration, chunk, tx_rank, i);
      r.noise_power_w = noise_power_;
      r.active = 1;
      r.outage_floor_bps =
          cfg_.outage_floor_bps > 0.0 ? cfg_.outage_floor_bps : ladder_.base_rate_bps();
      r.capacity_ceiling_bps = expected_link_capacity(tx_rank, i, prob.p_max_w, iteration, chunk);
      prob.receivers.push_back(r);
    }
    return prob;
  }

  const SvcLadder& ladder() const { return ladder_; }
  const OverlapMatrix& overlap() const { return overlap_; }
  int vehicle_count() const { return n_; }
  int rank_of(int vehicle_id) const {
    for (int i = 0; i < n_; ++i) {
      if (vehicles_[static_cast<std::size_t>(i)].id == vehicle_id) return i;
    }
    throw ContractError("unknown vehicle id");
  }
  double max_prop_delay_s() const { return max_delay_s_; }

 private:
  // ---- setup -------------------------------------------------------------

  void build_geometry() {
    std::vector<std::pair<FovModel, PositionSamples>> geo;
    for (int i = 0; i < n_; ++i) {
      const auto& v = vehicles_[static_cast<std::size_t>(i)];
      FovModel fov = FovModel::looking_at_origin(v.x_m, v.y_m, v.fov_radius_m, v.fov_offset_rad);
      PositionSamples ps;
      ps.gamma = cfg_.confidence.gamma;
      Rng rng = Rng::child(cfg_.seed, 'P', static_cast<std::uint64_t>(v.id));
      for (int k = 0; k < cfg_.confidence.n_position_samples; ++k) {
        ps.samples.push_back({v.x_m + v.position_sigma_m * rng.normal(),
                              v.y_m + v.position_sigma_m * rng.normal()});
      }
      geo.emplace_back(fov, ps);
    }
    if (n_ >= 2) {
      overlap_ = pairwise_overlap_matrix(geo, cfg_.confidence.overlap_n_mc,
                                         mix64(cfg_.seed ^ 'O'));
    }
  }

  void build_links() {
    const auto& grid = cfg_.channel.grid;
    grid.validate();
    const auto np = static_cast<std::size_t>(grid.n_points);
    noise_curve_.resize(np);
    for (std::size_t k = 0; k < np; ++k) {
      noise_curve_[k] = noise_psd(grid.frequency(static_cast<int>(k)), cfg_.channel.noise);
    }
    noise_power_ = trapezoid(noise_curve_, grid.f_lo_hz, grid.f_hi_hz);
    source_factor_ = std::pow(10.0, cfg_.channel.source_level_db_w / 10.0);

    distance_.assign(static_cast<std::size_t>(n_ * n_), 0.0);
    delay_.assign(static_cast<std::size_t>(n_ * n_), 0.0);
    mean_gain_.assign(static_cast<std::size_t>(n_ * n_), 0.0);
    gain_curve_.assign(static_cast<std::size_t>(n_ * n_), {});
    const double f_mid = 0.5 * (grid.f_lo_hz + grid.f_hi_hz);
    for (int a = 0; a < n_; ++a) {
      for (int b = 0; b < n_; ++b) {
        if (a == b) continue;
        const auto& va = vehicles_[static_cast<std::size_t>(a)];
        const auto& vb = vehicles_[static_cast<std::size_t>(b)];
        const double d = std::hypot(va.x_m - vb.x_m, va.y_m - vb.y_m);
        const std::size_t idx = static_cast<std::size_t>(a * n_ + b);
        distance_[idx] = d;
        delay_[idx] = d / cfg_.channel.sound_speed_mps;
        mean_gain_[idx] = attenuation(d, f_mid, cfg_.channel.spreading_exponent,
                                      cfg_.channel.absorption) *
                          source_factor_;
        auto& curve = gain_curve_[idx];
        curve.resize(np);
        for (std::size_t k = 0; k < np; ++k) {
          curve[k] = attenuation(d, grid.frequency(static_cast<int>(k)),
                                 cfg_.channel.spreading_exponent, cfg_.channel.absorption) *
                     source_factor_;
        }
        if (in_range(a, b)) max_delay_s_ = std::max(max_delay_s_, delay_[idx]);
      }
    }
    if (max_delay_s_ <= 0.0) max_delay_s_ = 1e-3;
  }

  // ---- channel helpers -----------------------------------------------------

  bool in_range(int a, int b) const {
    if (a == b) return false;
    if (cfg_.comm_range_m <= 0.0) return true;
    return distance_[static_cast<std::size_t>(a * n_ + b)] <= cfg_.comm_range_m;
  }

  double mean_gain(int a, int b) const {
    return mean_gain_[static_cast<std::size_t>(a * n_ + b)];
  }

  double link_delay(int a, int b) const {
    return delay_[static_cast<std::size_t>(a * n_ + b)];
  }

  /// Symmetric block fading for one (iteration, chunk, link).
  double fading(int iteration, int chunk, int a, int b) const {
    const int lo = std::min(a, b);
    const int hi = std::max(a, b);
    Rng rng = Rng::child(cfg_.seed, 'F',
                         static_cast<std::uint64_t>(iteration) * 4096 +
                             static_cast<std::uint64_t>(chunk),
                         static_cast<std::uint64_t>(lo * 64 + hi));
    return rng.exponential();
  }

  double expected_link_capacity(int tx, int rx, double p_max_w, int iteration,
                                int chunk) const {
    ChannelState chan;
    chan.tx_id = vehicles_[static_cast<std::size_t>(tx)].id;
    chan.rx_id = vehicles_[static_cast<std::size_t>(rx)].id;
    chan.gain_samples = gain_curve_[static_cast<std::size_t>(tx * n_ + rx)];
    chan.noise_psd_samples = noise_curve_;
    chan.fading_gain = 1.0;
    chan.delay_s = link_delay(tx, rx);
    chan.chunk_index = chunk;
    const auto pwr = PowerSpectrum::flat(cfg_.channel.grid, p_max_w);
    const auto est = expected_capacity(
        chan, pwr, cfg_.channel.grid, cfg_.solver.n_mc,
        Rng::child(cfg_.seed, 'C',
                   static_cast<std::uint64_t>(iteration) * 4096 +
                       static_cast<std::uint64_t>(chunk),
                   static_cast<std::uint64_t>(tx * 64 + rx))
            .raw());
    return est.mean_bps;
  }

  // ---- event machinery -----------------------------------------------------

  void push_event(SimEvent ev) {
    ev.seq = next_seq_++;
    queue_.push_back(std::move(ev));
    std::push_heap(queue_.begin(), queue_.end(),
                   [](const SimEvent& a, const SimEvent& b) { return a.after(b); });
  }

  SimEvent pop_event() {
    std::pop_heap(queue_.begin(), queue_.end(),
                  [](const SimEvent& a, const SimEvent& b) { return a.after(b); });
    SimEvent ev = std::move(queue_.back());
    queue_.pop_back();
    return ev;
  }

  void log_event(double t, EventKind kind, int sender_rank, int chunk, std::string detail) {
    LogEvent e;
    e.time_s = t;
    e.kind = kind;
    e.sender = sender_rank >= 0 ? vehicles_[static_cast<std::size_t>(sender_rank)].id : -1;
    e.chunk = chunk;
    e.detail = std::move(detail);
    log_.push_back(std::move(e));
  }

  bool dropped(const SimMessage& msg, int recipient_rank) {
    Rng rng = Rng::child(cfg_.seed, 'L', msg.msg_seq, static_cast<std::uint64_t>(recipient_rank));
    const double u = rng.uniform01();
    if (drop_filter_) return drop_filter_(msg, recipient_rank, u);
    return u < cfg_.loss_probability;
  }

  /// Schedules a transmission: TxStart now, one RxComplete per surviving
  /// recipient at tx_end + link delay.
  double transmit(double t_start, SimMessage msg) {
    msg.msg_seq = next_msg_seq_++;
    const double airtime = msg.tx_rate_bps > 0.0 ? msg.bits / msg.tx_rate_bps : 0.0;
    SimEvent tx;
    tx.time_s = t_start;
    tx.kind = EventKind::TxStart;
    tx.sender = msg.sender;
    tx.msg = msg;
    push_event(tx);
    const double t_end = t_start + airtime;
    for (int r : msg.recipients) {
      if (dropped(msg, r)) continue;
      SimEvent rx;
      rx.time_s = t_end + link_delay(msg.sender, r);
      rx.kind = EventKind::RxComplete;
      rx.sender = msg.sender;
      rx.recipient = r;
      rx.msg = msg;
      push_event(rx);
    }
    return t_end;
  }

  // ---- per-chunk state ------------------------------------------------------

  struct ChunkState {
    std::vector<std::vector<double>> received_rate;  // [receiver][sender]
    std::vector<double> rs;
    std::vector<double> y;           // consensus values
    std::vector<bool> withdrawn;     // election claimants that stood down
    std::vector<int> acks_pending;   // per claimant rank: outstanding acks
    std::vector<int> retries;        // per claimant rank
    int frv_rank = -1;
    int consensus_rounds = 0;
  };

  // ---- algorithm phases ------------------------------------------------------

  void run_iterations(SimResult& result) {
    // a single vehicle reconstructs locally; nothing to share or elect
    if (n_ == 1) {
      result.status = SimStatus::Ok;
      result.qoe_satisfied = true;
      result.iterations_used = 0;
      result.frv_id = vehicles_[0].id;
      log_event(clock_, EventKind::ChunkBoundary, 0, -1, "single vehicle, local reconstruction");
      return;
    }

    bool satisfied = false;
    for (int iteration = 0; iteration < cfg_.solver.max_iterations && !satisfied;
         ++iteration) {
      result.iterations_used = iteration + 1;
      bool all_chunks_ok = true;
      for (int chunk = 0; chunk < cfg_.chunks; ++chunk) {
        const bool ok = run_chunk(iteration, chunk, result);
        all_chunks_ok = all_chunks_ok && ok;
      }
      satisfied = all_chunks_ok;
    }
    result.qoe_satisfied = satisfied;
    result.status = satisfied ? SimStatus::Ok : SimStatus::UnsatisfiedAfterCap;
    if (!satisfied) result.status_detail = "QoE target not met within the iteration cap";
  }

  /// One chunk of the outer loop: base broadcast, scoring, consensus and
  /// election, shutdown planning, enhancement multicast, QoE check.
  bool run_chunk(int iteration, int chunk, SimResult& result) {
    ChunkState st;
    st.received_rate.assign(static_cast<std::size_t>(n_),
                            std::vector<double>(static_cast<std::size_t>(n_), 0.0));
    st.rs.assign(static_cast<std::size_t>(n_), 0.0);
    st.y.assign(static_cast<std::size_t>(n_), 0.0);
    st.withdrawn.assign(static_cast<std::size_t>(n_), false);
    st.acks_pending.assign(static_cast<std::size_t>(n_), 0);
    st.retries.assign(static_cast<std::size_t>(n_), 0);

    log_event(clock_, EventKind::ChunkBoundary, -1, chunk,
              "iteration=" + std::to_string(iteration));

    base_phase(iteration, chunk, st);
    scoring_phase(chunk, st);
    const bool converged = consensus_phase(iteration, chunk, st);
    if (!converged) {
      throw_with_status(result, SimStatus::NonConvergence,
                        "consensus did not converge within the round cap");
      return false;
    }
    election_phase(iteration, chunk, st);

    const auto plan = enhancement_phase(iteration, chunk, st);

    // QoE: participating vehicle count (active receivers + the FRV) and the
    // aggregate reconstruction score across the team
    double aggregate_rs = 0.0;
    for (double v : st.rs) aggregate_rs += v;
    const int participating = plan.active_count() + 1;
    const bool chunk_ok = participating >= cfg_.thresholds.qoe_min_active &&
                          aggregate_rs >= cfg_.thresholds.qoe_min_rs;

    MetricsRecord rec;
    rec.iteration = iteration;
    rec.chunk = chunk;
    rec.frv_id = vehicles_[static_cast<std::size_t>(st.frv_rank)].id;
    rec.consensus_rounds = st.consensus_rounds;
    rec.objective = plan.objective;
    rec.active_count = participating;
    rec.satisfied = chunk_ok;
    rec.sim_time_s = clock_;
    rec.rs_values = st.rs;
    rec.active_flags.assign(static_cast<std::size_t>(n_), 0);
    rec.assigned_rate_bps.assign(static_cast<std::size_t>(n_), 0.0);
    rec.layer_counts.assign(static_cast<std::size_t>(n_), 1);
    rec.active_flags[static_cast<std::size_t>(st.frv_rank)] = 1;
    rec.layer_counts[static_cast<std::size_t>(st.frv_rank)] = ladder_.levels();
    int slot = 0;
    for (int i = 0; i < n_; ++i) {
      if (i == st.frv_rank) continue;
      rec.active_flags[static_cast<std::size_t>(i)] = plan.active_flags[static_cast<std::size_t>(slot)];
      rec.assigned_rate_bps[static_cast<std::size_t>(i)] =
          plan.assigned_rate_bps[static_cast<std::size_t>(slot)];
      rec.layer_counts[static_cast<std::size_t>(i)] =
          plan.layer_selection[static_cast<std::size_t>(slot)].count();
      ++slot;
    }
    metrics_.push_back(rec);

    result.frv_id = rec.frv_id;
    result.final_plan = plan;
    return chunk_ok;
  }

  [[noreturn]] void throw_with_status(SimResult&, SimStatus status, const std::string& what) {
    if (status == SimStatus::NonConvergence) throw NonConvergenceSignal{what};
    throw std::runtime_error(what);
  }

  struct NonConvergenceSignal {
    std::string what;
  };

 public:
  // run() needs to catch the signal; kept public-adjacent via run() only.
 private:

  /// Base-layer sharing window: every vehicle broadcasts its base layer at
  /// the rate solved from its broadcast problem. Receivers whose outage floor
  /// is unreachable are excluded from that transmitter's audience for the
  /// chunk rather than aborting the run.
  void base_phase(int iteration, int chunk, ChunkState& st) {
    struct PlannedTx {
      int tx = -1;
      BroadcastProblem prob;
      BroadcastSolution sol;
      double airtime = 0.0;
      bool skip = false;
    };
    std::vector<PlannedTx> txs(static_cast<std::size_t>(n_));
    double max_airtime = 0.0;
    for (int j = 0; j < n_; ++j) {
      auto& planned = txs[static_cast<std::size_t>(j)];
      planned.tx = j;
      planned.prob = broadcast_problem(j, iteration, chunk);
      if (planned.prob.receivers.empty()) {
        planned.skip = true;
        continue;
      }
      const std::uint64_t solve_seed =
          mix64(cfg_.seed ^ (static_cast<std::uint64_t>(iteration) << 40) ^
                (static_cast<std::uint64_t>(chunk) << 20) ^ static_cast<std::uint64_t>(j));
      for (;;) {
        try {
          planned.sol = solve_broadcast(planned.prob, cfg_.solver.n_mc, solve_seed);
          break;
        } catch (const OutageInfeasibleError& e) {
          // base unreachable on that link this chunk: drop the receiver
          for (auto& r : planned.prob.receivers) {
            if (r.rx_id == e.rx_id()) r.active = 0;
          }
          log_event(clock_, EventKind::Timeout, j, chunk,
                    "base outage, dropping rx=" + std::to_string(e.rx_id()));
        } catch (const EmptyActiveSetError&) {
          planned.skip = true;
          break;
        }
      }
      if (planned.skip) continue;
      double min_rate = 0.0;
      for (std::size_t i = 0; i < planned.prob.receivers.size(); ++i) {
        if (!planned.prob.receivers[i].active) continue;
        const double r = planned.sol.assigned_rate_bps[i];
        min_rate = min_rate == 0.0 ? r : std::min(min_rate, r);
      }
      if (min_rate <= 0.0) {
        planned.skip = true;
        continue;
      }
      planned.airtime = ladder_.base_rate_bps() * cfg_.chunk_duration_s / min_rate;
      max_airtime = std::max(max_airtime, planned.airtime);
    }

    double slot_len = max_airtime + max_delay_s_ * 1.1;
    slot_len = std::max(slot_len, cfg_.mac.slot_len_s);
    if (slot_len <= 0.0) slot_len = std::max(cfg_.mac.slot_len_s, 1.0);

    // transmission order: TDMA rank order, or tone-contention winners
    std::vector<int> order = transmission_order(iteration, chunk, 0);

    const double window_start = clock_;
    const auto schedule = tdma_schedule(n_, slot_len);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const int j = order[k];
      const auto& planned = txs[static_cast<std::size_t>(j)];
      const double t_slot = window_start + schedule.slot_start_s(static_cast<int>(k));
      log_event(t_slot, EventKind::SlotBoundary, j, chunk,
                "base slot " + std::to_string(k));
      if (planned.skip) continue;

      SimMessage msg;
      msg.payload = PayloadKind::Base;
      msg.sender = j;
      msg.bits = ladder_.base_rate_bps() * cfg_.chunk_duration_s;
      msg.layer_lo = 0;
      msg.layer_hi = 0;
      msg.chunk = chunk;
      double min_rate = 1e300;
      for (std::size_t i = 0; i < planned.prob.receivers.size(); ++i) {
        if (!planned.prob.receivers[i].active) continue;
        msg.recipients.push_back(rank_of(planned.prob.receivers[i].rx_id));
        min_rate = std::min(min_rate, planned.sol.assigned_rate_bps[i]);
      }
      if (msg.recipients.empty()) continue;
      msg.tx_rate_bps = min_rate;
      transmit(t_slot, msg);
      // remember each receiver's own decodable rate from this transmitter
      for (std::size_t i = 0; i < planned.prob.receivers.size(); ++i) {
        if (!planned.prob.receivers[i].active) continue;
        pending_rate_[{j, rank_of(planned.prob.receivers[i].rx_id)}] =
            planned.sol.assigned_rate_bps[i];
      }
    }

    const double window_len =
        std::max(cfg_.mac.tau_b_s, schedule.slot_start_s(n_) + max_delay_s_ * 1.2);
    drain_until(window_start + window_len, chunk, st);
    clock_ = window_start + window_len;
    pending_rate_.clear();
  }

  std::vector<int> transmission_order(int iteration, int chunk, int phase) {
    std::vector<int> order;
    if (cfg_.mac.scheme == "tdma") {
      for (int i = 0; i < n_; ++i) order.push_back(i);
      return order;
    }
    // unsynchronized contention: winners leave the idle pool one by one
    std::vector<int> idle;
    for (int i = 0; i < n_; ++i) idle.push_back(vehicles_[static_cast<std::size_t>(i)].id);
    int round = 0;
    while (!idle.empty()) {
      const auto outcome = tone_contention(
          idle, max_delay_s_,
          mix64(cfg_.seed ^ 0xT0 + static_cast<std::uint64_t>(iteration * 8191 + chunk * 131 +
                                                              phase * 17 + round)),
          cfg_.mac.contention_window, cfg_.mac.max_retries);
      log_event(clock_, EventKind::ToneContend, rank_of(outcome.winner_id), chunk,
                "contention winner after " + std::to_string(outcome.rounds) + " round(s)");
      order.push_back(rank_of(outcome.winner_id));
      idle.erase(std::find(idle.begin(), idle.end(), outcome.winner_id));
      ++round;
    }
    return order;
  }

  void scoring_phase(int chunk, ChunkState& st) {
    for (int i = 0; i < n_; ++i) {
      std::vector<double> overlap_row;
      std::vector<double> rates;
      for (int j = 0; j < n_; ++j) {
        if (j == i) continue;
        overlap_row.push_back(overlap_.available(static_cast<std::size_t>(i),
                                                 static_cast<std::size_t>(j))
                                  ? overlap_.prob(static_cast<std::size_t>(i),
                                                  static_cast<std::size_t>(j))
                                  : 0.0);
        rates.push_back(st.received_rate[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      }
      st.rs[static_cast<std::size_t>(i)] =
          reconstruction_score(vehicles_[static_cast<std::size_t>(i)].id, overlap_row, rates,
                               ladder_)
              .rs;
      st.y[static_cast<std::size_t>(i)] = st.rs[static_cast<std::size_t>(i)];
    }
  }

  /// Max-consensus over the broadcast graph, one control packet per vehicle
  /// per round, until values agree or the round cap is hit.
  bool consensus_phase(int iteration, int chunk, ChunkState& st) {
    const int max_rounds = cfg_.solver.consensus_max_rounds > 0
                               ? cfg_.solver.consensus_max_rounds
                               : n_;
    const double control_rate = ladder_.base_rate_bps();
    const double control_airtime = cfg_.mac.control_bits / control_rate;
    const double step = control_airtime + max_delay_s_ * 1.1;

    for (int round = 0; round < max_rounds; ++round) {
      std::vector<int> order;
      if (cfg_.solver.consensus_schedule == "random") {
        Rng rng = Rng::child(cfg_.seed, 'S',
                             static_cast<std::uint64_t>(iteration) * 4096 +
                                 static_cast<std::uint64_t>(chunk),
                             static_cast<std::uint64_t>(round));
        for (int i = 0; i < n_; ++i) order.push_back(i);
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[rng.below(i)]);
        }
      } else {
        for (int i = 0; i < n_; ++i) order.push_back(i);
      }

      for (int v : order) {
        SimMessage msg;
        msg.payload = PayloadKind::Consensus;
        msg.sender = v;
        msg.bits = cfg_.mac.control_bits;
        msg.tx_rate_bps = control_rate;
        msg.chunk = chunk;
        msg.value = st.y[static_cast<std::size_t>(v)];
        for (int w = 0; w < n_; ++w) {
          if (in_range(v, w)) msg.recipients.push_back(w);
        }
        transmit(clock_, msg);
        drain_until(clock_ + step, chunk, st);
        clock_ += step;
      }
      st.consensus_rounds = round + 1;
      bool all_equal = true;
      for (int i = 1; i < n_; ++i) all_equal &= (st.y[static_cast<std::size_t>(i)] == st.y[0]);
      if (all_equal) return true;
    }
    return false;
  }

  /// Intent/ack election with loss-aware re-broadcast. Every claimant whose
  /// own RS equals its consensus value announces; hearing a better claim (or
  /// an equal one from a lower id) withdraws the listener.
  void election_phase(int iteration, int chunk, ChunkState& st) {
    (void)iteration;
    const double timeout = cfg_.solver.election_timeout_s > 0.0
                               ? cfg_.solver.election_timeout_s
                               : 3.0 * max_delay_s_;
    const double control_rate = ladder_.base_rate_bps();

    std::vector<int> claimants;
    for (int i = 0; i < n_; ++i) {
      if (st.rs[static_cast<std::size_t>(i)] == st.y[static_cast<std::size_t>(i)]) {
        claimants.push_back(i);
      }
    }
    election_claimants_ = claimants;

    double t = clock_;
    for (int c : claimants) {
      if (st.withdrawn[static_cast<std::size_t>(c)]) continue;
      send_intent(t, chunk, c, st, timeout, control_rate, 0);
      t += cfg_.mac.control_bits / control_rate + 2.0 * max_delay_s_ + timeout;
    }
    drain_until(t + timeout + 4.0 * max_delay_s_, chunk, st);
    clock_ = t + timeout;

    // the surviving claimant with the lowest id is the FRV
    st.frv_rank = -1;
    for (int c : claimants) {
      if (!st.withdrawn[static_cast<std::size_t>(c)]) {
        st.frv_rank = c;
        break;
      }
    }
    if (st.frv_rank < 0) st.frv_rank = claimants.empty() ? 0 : claimants.front();

    // cross-check against the pure election on the converged values
    std::vector<ConsensusNode> nodes(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      nodes[static_cast<std::size_t>(i)].id = vehicles_[static_cast<std::size_t>(i)].id;
      nodes[static_cast<std::size_t>(i)].value = st.y[static_cast<std::size_t>(i)];
    }
    const auto election = elect_frv(nodes, st.rs, timeout, clock_);
    if (election.frv_id != vehicles_[static_cast<std::size_t>(st.frv_rank)].id) {
      throw ContractError("election: event-driven outcome diverged from the protocol rule");
    }
  }

  void send_intent(double t, int chunk, int claimant, ChunkState& st, double timeout,
                   double control_rate, int attempt) {
    SimMessage msg;
    msg.payload = PayloadKind::Intent;
    msg.sender = claimant;
    msg.bits = cfg_.mac.control_bits;
    msg.tx_rate_bps = control_rate;
    msg.chunk = chunk;
    msg.value = st.rs[static_cast<std::size_t>(claimant)];
    for (int w = 0; w < n_; ++w) {
      if (in_range(claimant, w)) msg.recipients.push_back(w);
    }
    st.acks_pending[static_cast<std::size_t>(claimant)] =
        static_cast<int>(msg.recipients.size());
    const double t_end = transmit(t, msg);

    SimEvent timeout_ev;
    timeout_ev.time_s = t_end + timeout;
    timeout_ev.kind = EventKind::Timeout;
    timeout_ev.sender = claimant;
    timeout_ev.tag = attempt;
    timeout_ev.msg = msg;
    push_event(timeout_ev);
  }

  /// Enhancement window: plan the shutdown set on the FRV's links, then let
  /// every active non-FRV vehicle multicast its enhancement prefix.
  MulticastPlan enhancement_phase(int iteration, int chunk, ChunkState& st) {
    ShutdownProblem prob;
    prob.broadcast = broadcast_problem(st.frv_rank, iteration, chunk);
    prob.ladder = ladder_;
    prob.n_mc = cfg_.solver.n_mc;
    prob.seed = mix64(cfg_.seed ^ 0x9e1ec7ULL ^
                      (static_cast<std::uint64_t>(iteration) << 24) ^
                      static_cast<std::uint64_t>(chunk));
    prob.qos_threshold =
        cfg_.thresholds.qos_per_layer.at(cfg_.thresholds.qos_target_layers);
    prob.distortion_threshold = cfg_.thresholds.distortion_max;
    prob.overlap_threshold = cfg_.thresholds.overlap_min;

    // overlap sub-matrix over the problem's receivers, in receiver order
    std::vector<int> rx_ranks;
    for (const auto& r : prob.broadcast.receivers) rx_ranks.push_back(rank_of(r.rx_id));
    OverlapMatrix sub(rx_ranks.size());
    for (std::size_t a = 0; a < rx_ranks.size(); ++a) {
      for (std::size_t b = a + 1; b < rx_ranks.size(); ++b) {
        const auto ia = static_cast<std::size_t>(rx_ranks[a]);
        const auto ib = static_cast<std::size_t>(rx_ranks[b]);
        if (overlap_.available(ia, ib)) sub.set(a, b, overlap_.stat(ia, ib));
      }
    }
    prob.overlap = std::move(sub);

    MulticastPlan plan = cfg_.solver.planner == "greedy" ? plan_greedy(prob)
                                                         : plan_exhaustive(prob);
    plan = assign_layers(plan, ladder_);

    // active non-FRV vehicles multicast their enhancement prefix in slots
    double max_airtime = 0.0;
    std::vector<double> airtimes(prob.broadcast.receivers.size(), 0.0);
    for (std::size_t i = 0; i < prob.broadcast.receivers.size(); ++i) {
      if (!plan.active_flags[i]) continue;
      const int top = plan.layer_selection[i].highest_layer();
      if (top < 1) continue;
      const double bits =
          (ladder_.cumulative_rate_bps(top) - ladder_.base_rate_bps()) * cfg_.chunk_duration_s;
      airtimes[i] = bits / plan.assigned_rate_bps[i];
      max_airtime = std::max(max_airtime, airtimes[i]);
    }
    double slot_len = max_airtime + max_delay_s_ * 1.1;
    if (slot_len <= 0.0) slot_len = 1.0;

    const double window_start = clock_;
    int slot = 0;
    for (std::size_t i = 0; i < prob.broadcast.receivers.size(); ++i) {
      if (!plan.active_flags[i]) continue;
      const int sender_rank = rx_ranks[i];
      const int top = plan.layer_selection[i].highest_layer();
      const double t_slot = window_start + slot * slot_len;
      log_event(t_slot, EventKind::SlotBoundary, sender_rank, chunk,
                "enhancement slot " + std::to_string(slot));
      ++slot;
      if (top < 1) continue;
      SimMessage msg;
      msg.payload = PayloadKind::Enhancement;
      msg.sender = sender_rank;
      msg.bits =
          (ladder_.cumulative_rate_bps(top) - ladder_.base_rate_bps()) * cfg_.chunk_duration_s;
      msg.layer_lo = 1;
      msg.layer_hi = top;
      msg.chunk = chunk;
      msg.tx_rate_bps = plan.assigned_rate_bps[i];
      msg.recipients.push_back(st.frv_rank);
      for (std::size_t k = 0; k < prob.broadcast.receivers.size(); ++k) {
        if (k != i && plan.active_flags[k]) msg.recipients.push_back(rx_ranks[k]);
      }
      transmit(t_slot, msg);
    }
    const double window_len =
        std::max(cfg_.mac.tau_l_s, slot * slot_len + max_delay_s_ * 1.2);
    drain_until(window_start + window_len, chunk, st);
    clock_ = window_start + window_len;
    return plan;
  }

  // ---- event loop -------------------------------------------------------------

  /// Applies events in causal order up to the barrier time.
  void drain_until(double barrier_s, int chunk, ChunkState& st) {
    while (!queue_.empty()) {
      // peek
      const SimEvent* head = &queue_.front();
      if (head->time_s > barrier_s) break;
      SimEvent ev = pop_event();
      handle_event(ev, chunk, st);
    }
  }

  void handle_event(const SimEvent& ev, int chunk, ChunkState& st) {
    switch (ev.kind) {
      case EventKind::TxStart: {
        log_event(ev.time_s, EventKind::TxStart, ev.sender, chunk, describe_tx(ev.msg));
        break;
      }
      case EventKind::RxComplete: {
        on_rx(ev, chunk, st);
        break;
      }
      case EventKind::Timeout: {
        on_election_timeout(ev, chunk, st);
        break;
      }
      default: {
        log_event(ev.time_s, ev.kind, ev.sender, chunk, "");
        break;
      }
    }
  }

  std::string describe_tx(const SimMessage& msg) {
    std::string out;
    switch (msg.payload) {
      case PayloadKind::Base: out = "base"; break;
      case PayloadKind::Enhancement:
        out = "enh layers " + std::to_string(msg.layer_lo) + "-" + std::to_string(msg.layer_hi);
        break;
      case PayloadKind::Consensus: out = "consensus y=" + detail::format_double(msg.value); break;
      case PayloadKind::Intent: out = "intent rs=" + detail::format_double(msg.value); break;
      case PayloadKind::Ack: out = "ack"; break;
    }
    out += " rate=" + detail::format_double(msg.tx_rate_bps);
    out += " bits=" + detail::format_double(msg.bits);
    return out;
  }

  void on_rx(const SimEvent& ev, int chunk, ChunkState& st) {
    const auto& msg = ev.msg;
    const int me = ev.recipient;
    log_event(ev.time_s, EventKind::RxComplete, ev.sender, chunk,
              "to=" + std::to_string(vehicles_[static_cast<std::size_t>(me)].id) + " " +
                  describe_tx(msg));
    switch (msg.payload) {
      case PayloadKind::Base: {
        const auto it = pending_rate_.find({msg.sender, me});
        st.received_rate[static_cast<std::size_t>(me)][static_cast<std::size_t>(msg.sender)] =
            it != pending_rate_.end() ? it->second : msg.tx_rate_bps;
        break;
      }
      case PayloadKind::Consensus: {
        auto& y = st.y[static_cast<std::size_t>(me)];
        y = std::max(y, msg.value);
        break;
      }
      case PayloadKind::Intent: {
        // ack the claim, withdraw if the claim beats mine
        const double mine = st.rs[static_cast<std::size_t>(me)];
        const int my_id = vehicles_[static_cast<std::size_t>(me)].id;
        const int claimant_id = vehicles_[static_cast<std::size_t>(msg.sender)].id;
        if (msg.value > mine || (msg.value == mine && claimant_id < my_id)) {
          st.withdrawn[static_cast<std::size_t>(me)] = true;
        }
        SimMessage ack;
        ack.payload = PayloadKind::Ack;
        ack.sender = me;
        ack.recipients = {msg.sender};
        ack.bits = cfg_.mac.control_bits / 4.0;
        ack.tx_rate_bps = msg.tx_rate_bps;
        ack.chunk = chunk;
        ack.value = msg.value;
        transmit(ev.time_s, ack);
        break;
      }
      case PayloadKind::Ack: {
        auto& pending = st.acks_pending[static_cast<std::size_t>(me)];
        if (pending > 0) --pending;
        break;
      }
      case PayloadKind::Enhancement: {
        break;  // reception recorded at plan level
      }
    }
  }

  void on_election_timeout(const SimEvent& ev, int chunk, ChunkState& st) {
    const int claimant = ev.sender;
    log_event(ev.time_s, EventKind::Timeout, claimant, chunk,
              "election timeout, pending acks=" +
                  std::to_string(st.acks_pending[static_cast<std::size_t>(claimant)]));
    if (st.withdrawn[static_cast<std::size_t>(claimant)]) return;
    if (st.acks_pending[static_cast<std::size_t>(claimant)] <= 0) return;  // confirmed
    auto& tries = st.retries[static_cast<std::size_t>(claimant)];
    if (tries >= std::min(cfg_.mac.max_retries, 8)) return;  // declare despite silence
    ++tries;
    const double control_rate = ladder_.base_rate_bps();
    const double timeout = cfg_.solver.election_timeout_s > 0.0
                               ? cfg_.solver.election_timeout_s
                               : 3.0 * max_delay_s_;
    send_intent(ev.time_s, chunk, claimant, st, timeout, control_rate, ev.tag + 1);
  }

  // ---- members -------------------------------------------------------------

  ScenarioConfig cfg_;
  DropFilter drop_filter_;
  SvcLadder ladder_;
  std::vector<VehicleConfig> vehicles_;
  int n_ = 0;

  OverlapMatrix overlap_{1};
  std::vector<double> noise_curve_;
  double noise_power_ = 1.0;
  double source_factor_ = 1.0;
  std::vector<double> distance_;
  std::vector<double> delay_;
  std::vector<double> mean_gain_;
  std::vector<std::vector<double>> gain_curve_;
  double max_delay_s_ = 0.0;

  double clock_ = 0.0;
  std::vector<SimEvent> queue_;  // heap
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_msg_seq_ = 0;
  EventLog log_;
  std::vector<MetricsRecord> metrics_;
  std::map<std::pair<int, int>, double> pending_rate_;
  std::vector<int> election_claimants_;
};

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

inline SimResult run_algorithm1(const ScenarioConfig& cfg, DropFilter drop_filter = {}) {
  SimEngine engine(cfg, std::move(drop_filter));
  return engine.run();
}

/// Average/min broadcast rate as receivers are shut down weakest-first, per
/// power profile. Drives the rate-vs-shutdown plot data.
struct SweepRow {
  std::string profile;
  int shutdowns = 0;
  double avg_rate_bps = 0.0;
  double min_rate_bps = 0.0;
};

inline std::vector<SweepRow> sweep_rate_vs_shutdown(const ScenarioConfig& cfg,
                                                    int max_shutdowns) {
  SimEngine engine(cfg);
  std::vector<PowerProfile> profiles = cfg.power_profiles;
  if (profiles.empty()) {
    profiles.push_back(PowerProfile{"default", cfg.vehicles.front().p_th_w,
                                    cfg.vehicles.front().p_max_w});
  }
  std::vector<SweepRow> rows;
  for (const auto& profile : profiles) {
    auto prob = engine.broadcast_problem(0, 0, 0, profile);
    auto order = sort_receivers_by_gain(prob.receivers);
    const int cap = std::min<int>(max_shutdowns, static_cast<int>(order.size()) - 1);
    for (int shut = 0; shut <= cap; ++shut) {
      for (auto& r : prob.receivers) {
        r.active = 1;
        for (int k = 0; k < shut; ++k) {
          if (order[static_cast<std::size_t>(k)].rx_id == r.rx_id) r.active = 0;
        }
        r.outage_floor_bps = 0.0;  // the sweep explores rates, not feasibility
      }
      const auto sol = solve_broadcast(prob, cfg.solver.n_mc,
                                       mix64(cfg.seed ^ 0x5eedULL));
      double sum = 0.0;
      double min_rate = 0.0;
      int active = 0;
      for (std::size_t i = 0; i < prob.receivers.size(); ++i) {
        if (!prob.receivers[i].active) continue;
        sum += sol.assigned_rate_bps[i];
        min_rate = active == 0 ? sol.assigned_rate_bps[i]
                               : std::min(min_rate, sol.assigned_rate_bps[i]);
        ++active;
      }
      rows.push_back(SweepRow{profile.name, shut, active > 0 ? sum / active : 0.0, min_rate});
    }
  }
  return rows;
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "profile,shutdowns,avg_rate_bps,min_rate_bps\n";
  for (const auto& r : rows) {
    out += r.profile;
    out += ',';
    out += std::to_string(r.shutdowns);
    out += ',';
    out += detail::format_double(r.avg_rate_bps);
    out += ',';
    out += detail::format_double(r.min_rate_bps);
    out += '\n';
  }
  return out;
}

}  // namespace uwsvc

#endif  // UWSVC_MAC_HPP
