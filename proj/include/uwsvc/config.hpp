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

#ifndef UWSVC_CONFIG_HPP
#define UWSVC_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsvc/channel.hpp"
#include "uwsvc/svc.hpp"

namespace uwsvc {

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

struct VehicleConfig {
  int id = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  double fov_radius_m = 1.0;
  double fov_offset_rad = 0.0;
  double position_sigma_m = 0.1;
  double p_th_w = 1e-6;
  double p_max_w = 1e-4;
};

struct ChannelConfig {
  double spreading_exponent = 1.5;
  bool absorption = true;
  double sound_speed_mps = 1500.0;
  double source_level_db_w = 170.8;  // acoustic source level per watt at 1 m
  NoiseParams noise;
  FrequencyGrid grid{50e3, 150e3, 256};
};

struct LadderConfig {
  std::vector<double> cumulative_rates_bps;
  std::vector<double> frame_rates_fps;
  std::vector<double> psnrs_db;
  std::optional<RdParams> rd_params;  // fitted from PSNR points when absent
};

struct ThresholdsConfig {
  std::map<int, double> qos_per_layer;  // target layer count -> QoS threshold
  int qos_target_layers = 1;
  double distortion_max = 1e9;
  double overlap_min = 0.5;
  int qoe_min_active = 1;     // participating vehicles, FRV included
  double qoe_min_rs = 0.0;    // aggregate RS floor
};

struct MacConfig {
  std::string scheme = "tdma";  // "tdma" or "tlohi"
  double slot_len_s = 0.0;      // 0 = sized to fit the widest transmission
  double tau_b_s = 0.0;         // minimum base-sharing window, 0 = auto
  double tau_l_s = 0.0;         // minimum enhancement window, 0 = auto
  int contention_window = 16;
  int max_retries = 64;
  double control_bits = 256.0;
};

struct SolverConfig {
  int n_mc = 1024;
  std::string planner = "exhaustive";  // or "greedy"
  int max_iterations = 3;
  int consensus_max_rounds = 0;  // 0 = vehicle count
  std::string consensus_schedule = "round_robin";  // or "random"
  double election_timeout_s = 0.0;  // 0 = 3x max propagation delay
};

struct ConfidenceConfig {
  double gamma = 0.05;
  int n_position_samples = 8;
  int overlap_n_mc = 20000;
};

struct PowerProfile {
  std::string name;
  double p_th_w = 0.0;
  double p_max_w = 0.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  int chunks = 1;
  double chunk_duration_s = 5.0;
  double comm_range_m = 0.0;      // 0 = unlimited
  double loss_probability = 0.0;
  double outage_floor_bps = 0.0;  // 0 = ladder base rate
  ChannelConfig channel;
  std::optional<LadderConfig> ladder;
  ThresholdsConfig thresholds;
  MacConfig mac;
  SolverConfig solver;
  ConfidenceConfig confidence;
  std::vector<VehicleConfig> vehicles;
  std::vector<PowerProfile> power_profiles;

  SvcLadder build_ladder() const {
    if (!ladder) return default_ladder();
    RdParams rd;
    if (ladder->rd_params) {
      rd = *ladder->rd_params;
    } else {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t i = 0; i < ladder->cumulative_rates_bps.size(); ++i) {
        pts.emplace_back(ladder->cumulative_rates_bps[i],
                         psnr_to_distortion(ladder->psnrs_db.at(i)));
      }
      rd = fit_rd_params(pts);
    }
    return make_ladder(ladder->cumulative_rates_bps, ladder->frame_rates_fps,
                       ladder->psnrs_db, rd);
  }
};

// ---------------------------------------------------------------------------
// Strict JSON reading
// ---------------------------------------------------------------------------

namespace detail {

/// Wraps a JSON object, tracks consumed keys, and rejects unknown ones, so
/// config typos fail loudly instead of silently falling back to defaults.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path, std::vector<std::string>* errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) {
      errors_->push_back(path_ + ": expected an object");
      bad_ = true;
    }
  }

  ~StrictObject() {
    if (bad_) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) errors_->push_back(path_ + "." + key + ": unknown field");
    }
  }

  StrictObject(const StrictObject&) = delete;
  StrictObject& operator=(const StrictObject&) = delete;

  bool has(const std::string& key) {
    return !bad_ && j_.contains(key);
  }

  template <typename T>
  void require(const std::string& key, T& out) {
    if (bad_) return;
    seen_.insert(key);
    if (!j_.contains(key)) {
      errors_->push_back(path_ + "." + key + ": missing required field");
      return;
    }
    read(key, out);
  }

  template <typename T>
  void optional(const std::string& key, T& out) {
    if (bad_) return;
    seen_.insert(key);
    if (j_.contains(key)) read(key, out);
  }

  const nlohmann::json* child(const std::string& key) {
    if (bad_) return nullptr;
    seen_.insert(key);
    if (!j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  std::string path() const { return path_; }
  std::vector<std::string>* errors() { return errors_; }

 private:
  template <typename T>
  void read(const std::string& key, T& out) {
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      errors_->push_back(path_ + "." + key + ": " + e.what());
    }
  }

  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string>* errors_;
  std::set<std::string> seen_;
  bool bad_ = false;
};

inline void check(bool ok, const std::string& message, std::vector<std::string>* errors) {
  if (!ok) errors->push_back(message);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parse / serialize
// ---------------------------------------------------------------------------

inline ScenarioConfig parse_config(const nlohmann::json& j) {
  std::vector<std::string> errors;
  ScenarioConfig cfg;
  {
    detail::StrictObject root(j, "config", &errors);
    root.require("seed", cfg.seed);
    root.require("chunks", cfg.chunks);
    root.require("chunk_duration_s", cfg.chunk_duration_s);
    root.optional("comm_range_m", cfg.comm_range_m);
    root.optional("loss_probability", cfg.loss_probability);
    root.optional("outage_floor_bps", cfg.outage_floor_bps);

    if (const auto* jc = root.child("channel")) {
      detail::StrictObject c(*jc, "config.channel", &errors);
      c.optional("spreading_exponent", cfg.channel.spreading_exponent);
      c.optional("absorption", cfg.channel.absorption);
      c.optional("sound_speed_mps", cfg.channel.sound_speed_mps);
      c.optional("source_level_db_w", cfg.channel.source_level_db_w);
      if (const auto* jn = c.child("noise")) {
        detail::StrictObject n(*jn, "config.channel.noise", &errors);
        n.optional("shipping", cfg.channel.noise.shipping);
        n.optional("wind_mps", cfg.channel.noise.wind_mps);
        n.optional("scale", cfg.channel.noise.scale);
      }
      if (const auto* jg = c.child("grid")) {
        detail::StrictObject g(*jg, "config.channel.grid", &errors);
        g.require("f_lo_hz", cfg.channel.grid.f_lo_hz);
        g.require("f_hi_hz", cfg.channel.grid.f_hi_hz);
        g.require("n_points", cfg.channel.grid.n_points);
      }
    }

    if (const auto* jl = root.child("ladder")) {
      LadderConfig lc;
      detail::StrictObject l(*jl, "config.ladder", &errors);
      l.require("cumulative_rates_bps", lc.cumulative_rates_bps);
      l.optional("frame_rates_fps", lc.frame_rates_fps);
      l.optional("psnrs_db", lc.psnrs_db);
      if (const auto* jr = l.child("rd_params")) {
        RdParams rd;
        detail::StrictObject r(*jr, "config.ladder.rd_params", &errors);
        r.require("theta", rd.theta);
        r.require("r0_bps", rd.r0_bps);
        r.require("d0", rd.d0);
        lc.rd_params = rd;
      }
      cfg.ladder = std::move(lc);
    }

    if (const auto* jt = root.child("thresholds")) {
      detail::StrictObject t(*jt, "config.thresholds", &errors);
      std::map<std::string, double> qos;
      t.optional("qos_per_layer", qos);
      for (const auto& [key, value] : qos) {
        try {
          cfg.thresholds.qos_per_layer[std::stoi(key)] = value;
        } catch (const std::exception&) {
          errors.push_back("config.thresholds.qos_per_layer: non-integer key '" + key + "'");
        }
      }
      t.optional("qos_target_layers", cfg.thresholds.qos_target_layers);
      t.optional("distortion_max", cfg.thresholds.distortion_max);
      t.optional("overlap_min", cfg.thresholds.overlap_min);
      t.optional("qoe_min_active", cfg.thresholds.qoe_min_active);
      t.optional("qoe_min_rs", cfg.thresholds.qoe_min_rs);
    }

    if (const auto* jm = root.child("mac")) {
      detail::StrictObject m(*jm, "config.mac", &errors);
      m.optional("scheme", cfg.mac.scheme);
      m.optional("slot_len_s", cfg.mac.slot_len_s);
      m.optional("tau_b_s", cfg.mac.tau_b_s);
      m.optional("tau_l_s", cfg.mac.tau_l_s);
      m.optional("contention_window", cfg.mac.contention_window);
      m.optional("max_retries", cfg.mac.max_retries);
      m.optional("control_bits", cfg.mac.control_bits);
    }

    if (const auto* js = root.child("solver")) {
      detail::StrictObject s(*js, "config.solver", &errors);
      s.optional("n_mc", cfg.solver.n_mc);
      s.optional("planner", cfg.solver.planner);
      s.optional("max_iterations", cfg.solver.max_iterations);
      s.optional("consensus_max_rounds", cfg.solver.consensus_max_rounds);
      s.optional("consensus_schedule", cfg.solver.consensus_schedule);
      s.optional("election_timeout_s", cfg.solver.election_timeout_s);
    }

    if (const auto* jf = root.child("confidence")) {
      detail::StrictObject f(*jf, "config.confidence", &errors);
      f.optional("gamma", cfg.confidence.gamma);
      f.optional("n_position_samples", cfg.confidence.n_position_samples);
      f.optional("overlap_n_mc", cfg.confidence.overlap_n_mc);
    }

    if (const auto* jv = root.child("vehicles")) {
      if (!jv->is_array()) {
        errors.push_back("config.vehicles: expected an array");
      } else {
        int index = 0;
        for (const auto& item : *jv) {
          VehicleConfig v;
          detail::StrictObject o(item, "config.vehicles[" + std::to_string(index) + "]",
                                 &errors);
          o.require("id", v.id);
          o.require("x_m", v.x_m);
          o.require("y_m", v.y_m);
          o.require("fov_radius_m", v.fov_radius_m);
          o.optional("fov_offset_rad", v.fov_offset_rad);
          o.require("position_sigma_m", v.position_sigma_m);
          o.require("p_th_w", v.p_th_w);
          o.require("p_max_w", v.p_max_w);
          cfg.vehicles.push_back(v);
          ++index;
        }
      }
    } else {
      errors.push_back("config.vehicles: missing required field");
    }

    if (const auto* jp = root.child("power_profiles")) {
      if (!jp->is_array()) {
        errors.push_back("config.power_profiles: expected an array");
      } else {
        int index = 0;
        for (const auto& item : *jp) {
          PowerProfile p;
          detail::StrictObject o(item,
                                 "config.power_profiles[" + std::to_string(index) + "]",
                                 &errors);
          o.require("name", p.name);
          o.require("p_th_w", p.p_th_w);
          o.require("p_max_w", p.p_max_w);
          cfg.power_profiles.push_back(p);
          ++index;
        }
      }
    }
  }

  // ---- cross-field validation, all violations reported together ----
  using detail::check;
  check(cfg.chunks >= 1, "config.chunks: must be >= 1", &errors);
  check(cfg.chunk_duration_s > 0.0, "config.chunk_duration_s: must be > 0", &errors);
  check(cfg.comm_range_m >= 0.0, "config.comm_range_m: must be >= 0", &errors);
  check(cfg.loss_probability >= 0.0 && cfg.loss_probability < 1.0,
        "config.loss_probability: must lie in [0,1)", &errors);
  check(cfg.outage_floor_bps >= 0.0, "config.outage_floor_bps: must be >= 0", &errors);
  check(cfg.channel.spreading_exponent > 0.0,
        "config.channel.spreading_exponent: must be > 0", &errors);
  check(cfg.channel.sound_speed_mps > 0.0, "config.channel.sound_speed_mps: must be > 0",
        &errors);
  check(cfg.channel.noise.scale > 0.0, "config.channel.noise.scale: must be > 0", &errors);
  check(cfg.channel.grid.f_lo_hz > 0.0, "config.channel.grid.f_lo_hz: must be > 0", &errors);
  check(cfg.channel.grid.f_hi_hz > cfg.channel.grid.f_lo_hz,
        "config.channel.grid.f_hi_hz: must exceed f_lo_hz", &errors);
  check(cfg.channel.grid.n_points >= 2, "config.channel.grid.n_points: must be >= 2",
        &errors);
  check(cfg.mac.scheme == "tdma" || cfg.mac.scheme == "tlohi",
        "config.mac.scheme: must be 'tdma' or 'tlohi'", &errors);
  check(cfg.mac.contention_window >= 1, "config.mac.contention_window: must be >= 1",
        &errors);
  check(cfg.mac.max_retries >= 0, "config.mac.max_retries: must be >= 0", &errors);
  check(cfg.mac.control_bits > 0.0, "config.mac.control_bits: must be > 0", &errors);
  check(cfg.mac.slot_len_s >= 0.0, "config.mac.slot_len_s: must be >= 0", &errors);
  check(cfg.solver.n_mc >= 1, "config.solver.n_mc: must be >= 1", &errors);
  check(cfg.solver.planner == "exhaustive" || cfg.solver.planner == "greedy",
        "config.solver.planner: must be 'exhaustive' or 'greedy'", &errors);
  check(cfg.solver.max_iterations >= 1, "config.solver.max_iterations: must be >= 1",
        &errors);
  check(cfg.solver.consensus_schedule == "round_robin" ||
            cfg.solver.consensus_schedule == "random",
        "config.solver.consensus_schedule: must be 'round_robin' or 'random'", &errors);
  check(cfg.confidence.gamma > 0.0 && cfg.confidence.gamma < 1.0,
        "config.confidence.gamma: must lie in (0,1)", &errors);
  check(cfg.confidence.n_position_samples >= 2,
        "config.confidence.n_position_samples: must be >= 2", &errors);
  check(cfg.confidence.overlap_n_mc >= 1, "config.confidence.overlap_n_mc: must be >= 1",
        &errors);
  check(!cfg.vehicles.empty(), "config.vehicles: at least one vehicle required", &errors);
  check(cfg.vehicles.size() <= 17, "config.vehicles: at most 17 vehicles supported",
        &errors);

  std::set<int> ids;
  for (std::size_t i = 0; i < cfg.vehicles.size(); ++i) {
    const auto& v = cfg.vehicles[i];
    const std::string where = "config.vehicles[" + std::to_string(i) + "]";
    check(ids.insert(v.id).second, where + ".id: duplicate id", &errors);
    check(v.fov_radius_m > 0.0, where + ".fov_radius_m: must be > 0", &errors);
    check(v.position_sigma_m >= 0.0, where + ".position_sigma_m: must be >= 0", &errors);
    check(v.p_th_w > 0.0, where + ".p_th_w: must be > 0", &errors);
    check(v.p_max_w >= v.p_th_w, where + ".p_max_w: must be >= p_th_w", &errors);
    check(std::hypot(v.x_m, v.y_m) > 0.0, where + ": vehicle may not sit on the target",
          &errors);
  }
  for (std::size_t i = 0; i < cfg.power_profiles.size(); ++i) {
    const auto& p = cfg.power_profiles[i];
    const std::string where = "config.power_profiles[" + std::to_string(i) + "]";
    check(p.p_th_w > 0.0, where + ".p_th_w: must be > 0", &errors);
    check(p.p_max_w >= p.p_th_w, where + ".p_max_w: must be >= p_th_w", &errors);
  }
  if (cfg.ladder) {
    check(cfg.ladder->cumulative_rates_bps.size() >= 1,
          "config.ladder.cumulative_rates_bps: at least the base layer required", &errors);
    if (!cfg.ladder->rd_params) {
      check(cfg.ladder->psnrs_db.size() == cfg.ladder->cumulative_rates_bps.size(),
            "config.ladder.psnrs_db: required (same length as rates) when rd_params absent",
            &errors);
    }
  }
  check(cfg.thresholds.qos_per_layer.count(cfg.thresholds.qos_target_layers) == 1,
        "config.thresholds.qos_per_layer: missing entry for qos_target_layers", &errors);
  check(cfg.thresholds.qoe_min_active >= 0, "config.thresholds.qoe_min_active: must be >= 0",
        &errors);

  if (!errors.empty()) {
    std::string what = "invalid scenario config:";
    for (const auto& e : errors) {
      what += "\n  - ";
      what += e;
    }
    throw ConfigError(what);
  }
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);  // parse errors carry line/column
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

inline nlohmann::ordered_json save_config(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["chunks"] = cfg.chunks;
  j["chunk_duration_s"] = cfg.chunk_duration_s;
  j["comm_range_m"] = cfg.comm_range_m;
  j["loss_probability"] = cfg.loss_probability;
  j["outage_floor_bps"] = cfg.outage_floor_bps;
  j["channel"] = {
      {"spreading_exponent", cfg.channel.spreading_exponent},
      {"absorption", cfg.channel.absorption},
      {"sound_speed_mps", cfg.channel.sound_speed_mps},
      {"source_level_db_w", cfg.channel.source_level_db_w},
      {"noise",
       {{"shipping", cfg.channel.noise.shipping},
        {"wind_mps", cfg.channel.noise.wind_mps},
        {"scale", cfg.channel.noise.scale}}},
      {"grid",
       {{"f_lo_hz", cfg.channel.grid.f_lo_hz},
        {"f_hi_hz", cfg.channel.grid.f_hi_hz},
        {"n_points", cfg.channel.grid.n_points}}}};
  if (cfg.ladder) {
    nlohmann::ordered_json l;
    l["cumulative_rates_bps"] = cfg.ladder->cumulative_rates_bps;
    l["frame_rates_fps"] = cfg.ladder->frame_rates_fps;
    l["psnrs_db"] = cfg.ladder->psnrs_db;
    if (cfg.ladder->rd_params) {
      l["rd_params"] = {{"theta", cfg.ladder->rd_params->theta},
                        {"r0_bps", cfg.ladder->rd_params->r0_bps},
                        {"d0", cfg.ladder->rd_params->d0}};
    }
    j["ladder"] = l;
  }
  nlohmann::ordered_json qos = nlohmann::ordered_json::object();
  for (const auto& [layers, threshold] : cfg.thresholds.qos_per_layer) {
    qos[std::to_string(layers)] = threshold;
  }
  j["thresholds"] = {{"qos_per_layer", qos},
                     {"qos_target_layers", cfg.thresholds.qos_target_layers},
                     {"distortion_max", cfg.thresholds.distortion_max},
                     {"overlap_min", cfg.thresholds.overlap_min},
                     {"qoe_min_active", cfg.thresholds.qoe_min_active},
                     {"qoe_min_rs", cfg.thresholds.qoe_min_rs}};
  j["mac"] = {{"scheme", cfg.mac.scheme},
              {"slot_len_s", cfg.mac.slot_len_s},
              {"tau_b_s", cfg.mac.tau_b_s},
              {"tau_l_s", cfg.mac.tau_l_s},
              {"contention_window", cfg.mac.contention_window},
              {"max_retries", cfg.mac.max_retries},
              {"control_bits", cfg.mac.control_bits}};
  j["solver"] = {{"n_mc", cfg.solver.n_mc},
                 {"planner", cfg.solver.planner},
                 {"max_iterations", cfg.solver.max_iterations},
                 {"consensus_max_rounds", cfg.solver.consensus_max_rounds},
                 {"consensus_schedule", cfg.solver.consensus_schedule},
                 {"election_timeout_s", cfg.solver.election_timeout_s}};
  j["confidence"] = {{"gamma", cfg.confidence.gamma},
                     {"n_position_samples", cfg.confidence.n_position_samples},
                     {"overlap_n_mc", cfg.confidence.overlap_n_mc}};
  j["vehicles"] = nlohmann::ordered_json::array();
  for (const auto& v : cfg.vehicles) {
    j["vehicles"].push_back({{"id", v.id},
                             {"x_m", v.x_m},
                             {"y_m", v.y_m},
                             {"fov_radius_m", v.fov_radius_m},
                             {"fov_offset_rad", v.fov_offset_rad},
                             {"position_sigma_m", v.position_sigma_m},
                             {"p_th_w", v.p_th_w},
                             {"p_max_w", v.p_max_w}});
  }
  if (!cfg.power_profiles.empty()) {
    j["power_profiles"] = nlohmann::ordered_json::array();
    for (const auto& p : cfg.power_profiles) {
      j["power_profiles"].push_back(
          {{"name", p.name}, {"p_th_w", p.p_th_w}, {"p_max_w", p.p_max_w}});
    }
  }
  return j;
}

}  // namespace uwsvc

#endif  // UWSVC_CONFIG_HPP
