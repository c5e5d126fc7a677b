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

#ifndef UWSVC_GEOMETRY_HPP
#define UWSVC_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "uwsvc/common.hpp"

namespace uwsvc {

inline constexpr double kTwoPi = 6.283185307179586476925287;

// ---------------------------------------------------------------------------
// Field-of-view model
// ---------------------------------------------------------------------------

/// Camera footprint after 2-D projection. The target sits at the origin, so a
/// vehicle at loc has camera depth d = |loc| and sensing direction
/// theta = atan2(-y, -x). The offset angle is carried for completeness but
/// enters no disparity formula.
struct FovModel {
  double x_m = 0.0;
  double y_m = 0.0;
  double radius_m = 1.0;     // sensing radius r
  double direction_rad = 0.0;  // theta in [0, 2pi)
  double offset_rad = 0.0;     // beta
  double depth_m = 1.0;        // d, camera-to-target distance

  static FovModel looking_at_origin(double x_m, double y_m, double radius_m,
                                    double offset_rad = 0.0) {
    FovModel f;
    f.x_m = x_m;
    f.y_m = y_m;
    f.radius_m = radius_m;
    f.offset_rad = offset_rad;
    f.depth_m = std::hypot(x_m, y_m);
    double theta = std::atan2(-y_m, -x_m);
    if (theta < 0.0) theta += kTwoPi;
    f.direction_rad = theta;
    f.validate();
    return f;
  }

  void validate() const {
    if (!(radius_m > 0.0)) throw DomainError("FovModel: sensing radius must be > 0");
    if (!(depth_m > 0.0)) throw DomainError("FovModel: camera depth must be > 0");
    if (!(direction_rad >= 0.0 && direction_rad < kTwoPi))
      throw DomainError("FovModel: direction must lie in [0, 2pi)");
  }
};

/// Position fixes used to build the pose confidence region.
struct PositionSamples {
  std::vector<std::array<double, 2>> samples;
  double gamma = 0.05;  // confidence degree

  void validate() const {
    if (samples.size() < 2)
      throw InsufficientSamplesError("PositionSamples: need at least 2 samples");
    if (!(gamma > 0.0 && gamma < 1.0))
      throw DomainError("PositionSamples: gamma must lie in (0,1)");
  }
};

struct OverlapStat {
  double mu = 0.0;
  double sigma = 0.0;
  double prob = 0.0;
};

// ---------------------------------------------------------------------------
// Disparity
// ---------------------------------------------------------------------------

namespace detail {
inline void check_denominator(double v) {
  if (std::abs(v) < 1e-9) throw SingularityError("disparity: denominator too close to 0");
}

/// The four projection terms shared by the single- and pairwise disparity
/// expressions.
inline std::array<double, 4> disparity_terms(double d, double r, double theta) {
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  check_denominator(d + c);
  check_denominator(d - c);
  check_denominator(d + s);
  check_denominator(d - s);
  return {(-d * s - r * c) / (d + c), (d * s + r * c) / (d - c),
          (d * c - r * s) / (d + s), (-d * c + r * s) / (d - s)};
}
}  // namespace detail

/// Single-camera disparity: 0 when the view axis is along x (theta = 0),
/// 1 when it is orthogonal (theta = pi/2).
inline double disparity_single(double depth_m, double theta_rad) {
  const double d = depth_m;
  const double s = std::sin(theta_rad);
  const double c = std::cos(theta_rad);
  detail::check_denominator(d + c);
  detail::check_denominator(d - c);
  detail::check_denominator(d + s);
  detail::check_denominator(d - s);
  return 0.25 * (std::abs(d * s / (d + c)) + std::abs(d * s / (d - c)) +
                 std::abs(d * c / (d + s) - 1.0) + std::abs(-d * c / (d - s) + 1.0));
}

/// Pairwise disparity between two camera footprints; symmetric in its
/// arguments and zero for identical views.
inline double disparity_pair(const FovModel& a, const FovModel& b) {
  const auto ta = detail::disparity_terms(a.depth_m, a.radius_m, a.direction_rad);
  const auto tb = detail::disparity_terms(b.depth_m, b.radius_m, b.direction_rad);
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) acc += std::abs(ta[i] - tb[i]);
  return 0.25 * acc;
}

/// View correlation eta = 1 - delta, clamped to [-1, 1].
inline double correlation_pair(const FovModel& a, const FovModel& b) {
  return std::clamp(1.0 - disparity_pair(a, b), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Position uncertainty
// ---------------------------------------------------------------------------

struct ConfidenceInterval {
  double lower = 0.0;
  double mean = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

struct ConfidenceRegion {
  ConfidenceInterval x;
  ConfidenceInterval y;
};

/// Studentized confidence interval per coordinate:
/// mean -+ T_(N-1, gamma/2) * sigma' / sqrt(N) with sigma' the unbiased
/// sample standard deviation.
inline ConfidenceRegion confidence_interval(const PositionSamples& ps) {
  ps.validate();
  const auto n = ps.samples.size();
  const boost::math::students_t_distribution<double> dist(static_cast<double>(n - 1));
  const double t_crit = boost::math::quantile(dist, 1.0 - ps.gamma / 2.0);

  ConfidenceRegion region;
  for (int coord = 0; coord < 2; ++coord) {
    double mean = 0.0;
    for (const auto& s : ps.samples) mean += s[static_cast<std::size_t>(coord)];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& s : ps.samples) {
      const double e = s[static_cast<std::size_t>(coord)] - mean;
      var += e * e;
    }
    var /= static_cast<double>(n - 1);
    const double half = t_crit * std::sqrt(var) / std::sqrt(static_cast<double>(n));
    ConfidenceInterval ci{mean - half, mean, mean + half};
    (coord == 0 ? region.x : region.y) = ci;
  }
  return region;
}

/// Pr(eta > 0) = Phi(mu / sigma) for normally modelled view correlation.
inline double overlap_probability(double mu, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("overlap_probability: sigma must be > 0");
  return normal_cdf(mu / sigma);
}

// ---------------------------------------------------------------------------
// Pairwise overlap matrix
// ---------------------------------------------------------------------------

/// Symmetric matrix of overlap probabilities with unit diagonal. Pairs whose
/// disparity is singular for every perturbation draw are flagged unavailable
/// rather than failing the whole build.
class OverlapMatrix {
 public:
  explicit OverlapMatrix(std::size_t n)
      : n_(n), prob_(n * n, 0.0), stat_(n * n), ok_(n * n, false) {
    for (std::size_t i = 0; i < n; ++i) {
      prob_[i * n + i] = 1.0;
      ok_[i * n + i] = true;
      stat_[i * n + i] = OverlapStat{1.0, 0.0, 1.0};
    }
  }

  std::size_t size() const { return n_; }
  double prob(std::size_t i, std::size_t j) const { return prob_[i * n_ + j]; }
  const OverlapStat& stat(std::size_t i, std::size_t j) const { return stat_[i * n_ + j]; }
  bool available(std::size_t i, std::size_t j) const { return ok_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, const OverlapStat& s) {
    stat_[i * n_ + j] = s;
    stat_[j * n_ + i] = s;
    prob_[i * n_ + j] = s.prob;
    prob_[j * n_ + i] = s.prob;
    ok_[i * n_ + j] = true;
    ok_[j * n_ + i] = true;
  }

 private:
  std::size_t n_;
  std::vector<double> prob_;
  std::vector<OverlapStat> stat_;
  std::vector<bool> ok_;
};

inline constexpr double kOverlapSigmaFloor = 1e-6;

/// Propagates pose uncertainty through the correlation eta = 1 - delta by
/// Monte-Carlo: both poses are drawn uniformly inside their per-coordinate
/// confidence boxes, the camera depth/direction re-derived for each draw
/// (target at the origin), and Pr = Phi(mean/std) with a floored std.
inline OverlapMatrix pairwise_overlap_matrix(
    const std::vector<std::pair<FovModel, PositionSamples>>& vehicles, int n_mc,
    std::uint64_t seed) {
  if (vehicles.size() < 2)
    throw ContractError("pairwise_overlap_matrix: need at least 2 vehicles");
  if (n_mc < 1) throw ContractError("pairwise_overlap_matrix: n_mc must be >= 1");

  std::vector<ConfidenceRegion> regions;
  regions.reserve(vehicles.size());
  for (const auto& [fov, ps] : vehicles) {
    fov.validate();
    regions.push_back(confidence_interval(ps));
  }

  OverlapMatrix matrix(vehicles.size());
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    for (std::size_t j = i + 1; j < vehicles.size(); ++j) {
      Rng rng = Rng::child(seed, 0x0e1a, i, j);
      double sum = 0.0;
      double sum_sq = 0.0;
      int valid = 0;
      for (int k = 0; k < n_mc; ++k) {
        FovModel a = vehicles[i].first;
        FovModel b = vehicles[j].first;
        const double ax = rng.uniform(regions[i].x.lower, regions[i].x.upper);
        const double ay = rng.uniform(regions[i].y.lower, regions[i].y.upper);
        const double bx = rng.uniform(regions[j].x.lower, regions[j].x.upper);
        const double by = rng.uniform(regions[j].y.lower, regions[j].y.upper);
        try {
          a = FovModel::looking_at_origin(ax, ay, a.radius_m, a.offset_rad);
          b = FovModel::looking_at_origin(bx, by, b.radius_m, b.offset_rad);
          const double eta = correlation_pair(a, b);
          sum += eta;
          sum_sq += eta * eta;
          ++valid;
        } catch (const DomainError&) {
          // singular draw: skipped, pair stays available if any draw works
        }
      }
      if (valid == 0) continue;  // pair marked unavailable
      const double mu = sum / valid;
      double sigma = 0.0;
      if (valid > 1) {
        sigma = std::sqrt(std::max(0.0, (sum_sq - sum * sum / valid) / (valid - 1)));
      }
      sigma = std::max(sigma, kOverlapSigmaFloor);
      matrix.set(i, j, OverlapStat{mu, sigma, overlap_probability(mu, sigma)});
    }
  }
  return matrix;
}

}  // namespace uwsvc

#endif  // UWSVC_GEOMETRY_HPP
