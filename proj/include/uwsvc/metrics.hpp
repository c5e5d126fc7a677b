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

#ifndef UWSVC_METRICS_HPP
#define UWSVC_METRICS_HPP

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsvc/common.hpp"

namespace uwsvc {

// ---------------------------------------------------------------------------
// Event log
// ---------------------------------------------------------------------------

/// Simulation event kinds. The enum order is the tie-break rank for events
/// that share a timestamp.
enum class EventKind : int {
  RxComplete = 0,
  SlotBoundary = 1,
  TxStart = 2,
  ToneContend = 3,
  Timeout = 4,
  ChunkBoundary = 5,
};

inline const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::RxComplete: return "rx_complete";
    case EventKind::SlotBoundary: return "slot_boundary";
    case EventKind::TxStart: return "tx_start";
    case EventKind::ToneContend: return "tone_contend";
    case EventKind::Timeout: return "timeout";
    case EventKind::ChunkBoundary: return "chunk_boundary";
  }
  return "unknown";
}

/// One line of the structured event log.
struct LogEvent {
  double time_s = 0.0;
  EventKind kind = EventKind::ChunkBoundary;
  int sender = -1;
  int chunk = -1;
  std::string detail;
};

using EventLog = std::vector<LogEvent>;

/// Line-delimited JSON rendering with a fixed key order, so identical runs
/// produce byte-identical logs.
inline std::string to_jsonl(const EventLog& log) {
  std::string out;
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["t"] = e.time_s;
    j["kind"] = event_kind_name(e.kind);
    j["sender"] = e.sender;
    j["chunk"] = e.chunk;
    j["detail"] = e.detail;
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-chunk metrics
// ---------------------------------------------------------------------------

/// One record per chunk per iteration. Per-vehicle columns are emitted as
/// '|'-joined vectors in vehicle-id order; the clock column is the virtual
/// simulation clock so records stay reproducible.
struct MetricsRecord {
  int iteration = 0;
  int chunk = 0;
  int frv_id = -1;
  int consensus_rounds = 0;
  double objective = 0.0;
  int active_count = 0;
  bool satisfied = false;
  double sim_time_s = 0.0;
  std::vector<int> active_flags;
  std::vector<double> assigned_rate_bps;
  std::vector<int> layer_counts;
  std::vector<double> rs_values;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

template <typename T, typename Fn>
std::string join_piped(const std::vector<T>& xs, Fn&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += '|';
    out += fmt(xs[i]);
  }
  return out;
}

}  // namespace detail

inline std::string metrics_csv_header() {
  return "iteration,chunk,frv_id,consensus_rounds,objective,active_count,satisfied,"
         "sim_time_s,active_flags,assigned_rate_bps,layer_counts,rs_values";
}

inline std::string metrics_csv_row(const MetricsRecord& r) {
  std::string out;
  out += std::to_string(r.iteration);
  out += ',';
  out += std::to_string(r.chunk);
  out += ',';
  out += std::to_string(r.frv_id);
  out += ',';
  out += std::to_string(r.consensus_rounds);
  out += ',';
  out += detail::format_double(r.objective);
  out += ',';
  out += std::to_string(r.active_count);
  out += ',';
  out += r.satisfied ? "1" : "0";
  out += ',';
  out += detail::format_double(r.sim_time_s);
  out += ',';
  out += detail::join_piped(r.active_flags, [](int v) { return std::to_string(v); });
  out += ',';
  out += detail::join_piped(r.assigned_rate_bps, detail::format_double);
  out += ',';
  out += detail::join_piped(r.layer_counts, [](int v) { return std::to_string(v); });
  out += ',';
  out += detail::join_piped(r.rs_values, detail::format_double);
  return out;
}

inline std::string metrics_to_csv(const std::vector<MetricsRecord>& records) {
  std::string out = metrics_csv_header();
  out += '\n';
  for (const auto& r : records) {
    out += metrics_csv_row(r);
    out += '\n';
  }
  return out;
}

}  // namespace uwsvc

#endif  // UWSVC_METRICS_HPP
