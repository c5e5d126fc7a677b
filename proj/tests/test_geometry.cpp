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

#include "uwsvc/geometry.hpp"

#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

using namespace uwsvc;

namespace {

PositionSamples samples_of(std::vector<std::array<double, 2>> pts, double gamma = 0.05) {
  PositionSamples ps;
  ps.samples = std::move(pts);
  ps.gamma = gamma;
  return ps;
}

}  // namespace

TEST_CASE("single-camera disparity closed forms") {
  for (double d : {2.0, 5.0, 10.0, 100.0}) {
    CHECK(std::abs(disparity_single(d, 0.0)) <= 1e-12);
    CHECK(std::abs(disparity_single(d, 1.5707963267948966) - 1.0) <= 1e-12);
  }
  // at theta = pi/4 the four terms telescope to exactly 2
  CHECK(disparity_single(5.0, 0.7853981633974483) == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("disparity singularities are rejected") {
  // d = cos(theta) makes the second denominator vanish
  CHECK_THROWS_AS(disparity_single(1.0, 0.0), SingularityError);
  FovModel a = FovModel::looking_at_origin(-1.0, 0.0, 0.5);
  FovModel b = FovModel::looking_at_origin(-5.0, 0.0, 0.5);
  CHECK_THROWS_AS(disparity_pair(a, b), SingularityError);
}

TEST_CASE("pairwise disparity is symmetric, non-negative, zero on identical views") {
  FovModel a = FovModel::looking_at_origin(-5.0, 0.0, 1.0);
  CHECK(disparity_pair(a, a) == 0.0);

  FovModel b;
  b.depth_m = 5.0;
  b.radius_m = 1.0;
  b.direction_rad = 0.5235987755982988;  // pi/6
  FovModel a2;
  a2.depth_m = 5.0;
  a2.radius_m = 1.0;
  a2.direction_rad = 0.0;
  // frozen from a direct evaluation of the four-difference formula
  CHECK(disparity_pair(a2, b) == Catch::Approx(0.3559647444956854).epsilon(1e-12));
  CHECK(disparity_pair(b, a2) == disparity_pair(a2, b));

  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    FovModel u, v;
    u.depth_m = rng.uniform(2.0, 50.0);
    v.depth_m = rng.uniform(2.0, 50.0);
    u.radius_m = rng.uniform(0.2, 3.0);
    v.radius_m = rng.uniform(0.2, 3.0);
    u.direction_rad = rng.uniform(0.0, kTwoPi);
    v.direction_rad = rng.uniform(0.0, kTwoPi);
    const double dij = disparity_pair(u, v);
    CHECK(dij >= 0.0);
    CHECK(disparity_pair(v, u) == dij);
  }
}

TEST_CASE("looking_at_origin derives depth and direction from the pose") {
  const auto f = FovModel::looking_at_origin(-3.0, -4.0, 1.0);
  CHECK(f.depth_m == Catch::Approx(5.0));
  CHECK(f.direction_rad == Catch::Approx(std::atan2(4.0, 3.0)));
  CHECK_THROWS_AS(FovModel::looking_at_origin(0.0, 0.0, 1.0), DomainError);
}

TEST_CASE("confidence interval collapses on identical samples") {
  const auto region = confidence_interval(
      samples_of({{2.0, 3.0}, {2.0, 3.0}, {2.0, 3.0}, {2.0, 3.0}}));
  CHECK(region.x.lower == Catch::Approx(2.0));
  CHECK(region.x.upper == Catch::Approx(2.0));
  CHECK(region.y.lower == Catch::Approx(3.0));
  CHECK(region.y.upper == Catch::Approx(3.0));
}

TEST_CASE("confidence interval requires two samples") {
  CHECK_THROWS_AS(confidence_interval(samples_of({{1.0, 1.0}})), InsufficientSamplesError);
}

TEST_CASE("confidence interval width follows T/sqrt(N) exactly") {
  // sample sets engineered to an unbiased variance of exactly 1
  auto build = [](int n) {
    std::vector<std::array<double, 2>> pts(static_cast<std::size_t>(n), {0.0, 0.0});
    const double a = std::sqrt((n - 1) / 2.0);
    pts[0] = {a, a};
    pts[1] = {-a, -a};
    return samples_of(pts);
  };
  std::vector<int> sizes = {5, 10, 20, 40};
  // T_(n-1, 0.975) reference values
  std::vector<double> t_table = {2.7764451051977987, 2.2621571628540993,
                                 2.093024054408263, 2.0226909200367604};
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const auto region = confidence_interval(build(sizes[k]));
    const boost::math::students_t_distribution<double> dist(sizes[k] - 1.0);
    const double t_crit = boost::math::quantile(dist, 0.975);
    CHECK(t_crit == Catch::Approx(t_table[k]).epsilon(1e-9));
    const double expect = 2.0 * t_crit / std::sqrt(static_cast<double>(sizes[k]));
    CHECK(region.x.width() == Catch::Approx(expect).epsilon(1e-12));
    CHECK(region.y.width() == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("confidence interval width shrinks as 1/sqrt(N) on sampled data") {
  Rng rng(6021);
  auto mean_width = [&](int n, int reps) {
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) {
      std::vector<std::array<double, 2>> pts;
      for (int i = 0; i < n; ++i) pts.push_back({rng.normal(), rng.normal()});
      acc += confidence_interval(samples_of(pts)).x.width();
    }
    return acc / reps;
  };
  const double w100 = mean_width(100, 400);
  const double w400 = mean_width(400, 400);
  // T ratio is ~1 at these sizes; widths should scale by ~1/2 within 5%
  CHECK(w100 / w400 == Catch::Approx(2.0).epsilon(0.05));
}

TEST_CASE("confidence interval covers the true mean at the nominal level") {
  Rng rng(909);
  int covered = 0;
  const int reps = 10'000;
  for (int r = 0; r < reps; ++r) {
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i < 10; ++i) {
      pts.push_back({1.5 + 0.7 * rng.normal(), -2.0 + 1.3 * rng.normal()});
    }
    const auto region = confidence_interval(samples_of(pts, 0.05));
    if (region.x.lower <= 1.5 && 1.5 <= region.x.upper) ++covered;
  }
  const double coverage = static_cast<double>(covered) / reps;
  CHECK(coverage >= 0.93);
  CHECK(coverage <= 0.97);
}

TEST_CASE("overlap probability is the standard normal CDF of mu/sigma") {
  CHECK(overlap_probability(0.0, 1.0) == 0.5);
  CHECK(overlap_probability(1.96, 1.0) == Catch::Approx(0.975).margin(1e-3));
  CHECK(overlap_probability(1.96, 1.0) == Catch::Approx(0.9750021048517795).epsilon(1e-12));
  CHECK_THROWS_AS(overlap_probability(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(overlap_probability(1.0, -2.0), DomainError);

  // strict monotonicity away from the CDF's double-precision saturation
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double p = overlap_probability(0.05 * i, 1.0);
    CHECK(p > prev);
    prev = p;
  }
  prev = 1.0;
  for (int i = 1; i <= 100; ++i) {
    const double p = overlap_probability(1.0, 0.2 + 0.1 * i);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("degenerate overlap matrix entries saturate at 1") {
  // zero position variance, identical views: eta = 1 every draw, sigma floors
  const auto fov = FovModel::looking_at_origin(-6.0, 0.5, 1.0);
  const auto ps = samples_of({{-6.0, 0.5}, {-6.0, 0.5}, {-6.0, 0.5}});
  const auto matrix = pairwise_overlap_matrix({{fov, ps}, {fov, ps}}, 500, 42);
  CHECK(matrix.available(0, 1));
  CHECK(matrix.stat(0, 1).mu == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(matrix.stat(0, 1).sigma == kOverlapSigmaFloor);
  CHECK(matrix.prob(0, 1) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(matrix.prob(0, 0) == 1.0);
  CHECK(matrix.prob(1, 1) == 1.0);
}

TEST_CASE("overlap matrix matches the high-sample Monte-Carlo oracle") {
  // three vehicles with +-0.2/0.3 m position scatter; oracle values frozen
  // from a 1e5-draw evaluation of the same perturbation scheme
  std::vector<std::pair<FovModel, PositionSamples>> vehicles;
  vehicles.push_back({FovModel::looking_at_origin(-8.0, 0.0, 1.0),
                      samples_of({{-8.3, 0.2}, {-7.7, -0.2}, {-8.1, -0.1}, {-7.9, 0.1}})});
  vehicles.push_back({FovModel::looking_at_origin(0.0, -9.0, 1.2),
                      samples_of({{0.2, -9.3}, {-0.2, -8.7}, {0.1, -9.1}, {-0.1, -8.9}})});
  vehicles.push_back({FovModel::looking_at_origin(6.0, 6.0, 0.9),
                      samples_of({{6.2, 6.3}, {5.8, 5.7}, {6.1, 5.9}, {5.9, 6.1}})});

  const auto matrix = pairwise_overlap_matrix(vehicles, 100'000, 7);
  REQUIRE(matrix.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(matrix.prob(i, i) == 1.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(matrix.prob(i, j) == matrix.prob(j, i));
  }
  CHECK(matrix.stat(0, 1).mu == Catch::Approx(-0.0038581600238772815).margin(5e-4));
  CHECK(matrix.stat(0, 2).mu == Catch::Approx(-0.2752710924797609).margin(5e-4));
  CHECK(matrix.stat(1, 2).mu == Catch::Approx(-0.14426294227542005).margin(5e-4));
  CHECK(matrix.stat(0, 1).sigma == Catch::Approx(0.014741336168232937).epsilon(0.10));
  CHECK(matrix.prob(0, 1) == Catch::Approx(0.39676715574592003).margin(0.05));
  CHECK(matrix.prob(0, 2) < 1e-20);
  CHECK(matrix.prob(1, 2) < 1e-20);
}
