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

#include "uwsvc/svc.hpp"

#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

using namespace uwsvc;

namespace {

/// Independent oracle: enumerate every 0/1 flag vector obeying the decode
/// chain and the budget, maximize total selected rate.
LayerSelection knapsack_by_enumeration(const SvcLadder& ladder, double r_max) {
  const int levels = ladder.levels();
  LayerSelection best;
  best.selected.assign(static_cast<std::size_t>(levels), false);
  best.selected[0] = true;
  best.base_fits_budget = ladder.base_rate_bps() <= r_max;
  double best_rate = -1.0;
  for (unsigned mask = 1; mask < (1u << levels); ++mask) {
    if (!(mask & 1u)) continue;  // base flag is pinned to 1
    bool chain_ok = true;
    for (int l = 1; l < levels; ++l) {
      if ((mask >> l & 1u) && !(mask >> (l - 1) & 1u)) chain_ok = false;
    }
    if (!chain_ok) continue;
    double rate = 0.0;
    for (int l = 0; l < levels; ++l) {
      if (mask >> l & 1u) rate += ladder.layers[static_cast<std::size_t>(l)].incremental_rate_bps;
    }
    // budget holds on the cumulative (== summed incremental) rate of the
    // enhancement prefix; the base is always kept
    double enh_rate = rate - ladder.base_rate_bps();
    if (ladder.base_rate_bps() + enh_rate > r_max && mask != 1u) continue;
    if (rate > best_rate) {
      best_rate = rate;
      for (int l = 0; l < levels; ++l) best.selected[static_cast<std::size_t>(l)] = (mask >> l & 1u);
    }
  }
  return best;
}

SvcLadder random_ladder(Rng& rng, int levels) {
  std::vector<double> cum;
  double acc = 0.0;
  for (int l = 0; l < levels; ++l) {
    acc += rng.uniform(10e3, 200e3);
    cum.push_back(acc);
  }
  return make_ladder(cum, {}, {}, RdParams{1e6, -1.0, 0.1});
}

}  // namespace

TEST_CASE("default ladder carries the five-level rate/fps/psnr triples") {
  const auto ladder = default_ladder();
  REQUIRE(ladder.levels() == 5);
  const double rates[] = {100.9e3, 179.4e3, 293.3e3, 415.3e3, 517.5e3};
  const double fps[] = {1.875, 3.75, 7.5, 15.0, 30.0};
  const double psnr[] = {45.1, 44.14, 43.31, 42.68, 42.19};
  for (int l = 0; l < 5; ++l) {
    CHECK(ladder.layers[static_cast<std::size_t>(l)].cumulative_rate_bps == rates[l]);
    CHECK(ladder.layers[static_cast<std::size_t>(l)].frame_rate_fps == fps[l]);
    CHECK(ladder.layers[static_cast<std::size_t>(l)].psnr_db.value() == psnr[l]);
  }
  CHECK(ladder.layers[1].incremental_rate_bps == Catch::Approx(78.5e3).epsilon(1e-12));
  CHECK(ladder.layers[0].index == 0);
}

TEST_CASE("distortion evaluates the hyperbolic model") {
  SvcLadder ladder = make_ladder({2.0}, {}, {}, RdParams{1.0, 0.0, 0.0});
  CHECK(distortion(ladder, 2.0) == Catch::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(distortion(ladder, 0.0), DomainError);
  CHECK_THROWS_AS(distortion(ladder, -1.0), DomainError);
}

TEST_CASE("distortion approaches its floor at high rate") {
  SvcLadder ladder = make_ladder({1e5}, {}, {}, RdParams{1e6, 0.0, 2.0});
  const double far = 0.0 + 1e6 * 1e6 / 2.0;  // R0 + 1e6*theta/D0
  const double d = distortion(ladder, far);
  CHECK(d > 2.0);
  CHECK(d - 2.0 < 1e-6 * 1e6);
  CHECK(distortion(ladder, 2 * far) < d);
}

TEST_CASE("fit recovers exact-model parameters") {
  std::vector<std::pair<double, double>> pts;
  for (double r : {1e5, 2e5, 3e5, 4e5, 5e5}) {
    pts.emplace_back(r, 5e6 / (r - 5e4) + 2.0);
  }
  const auto fit = fit_rd_params(pts);
  CHECK(fit.theta == Catch::Approx(5e6).epsilon(1e-6));
  CHECK(fit.r0_bps == Catch::Approx(5e4).epsilon(1e-6));
  CHECK(fit.d0 == Catch::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("fit rejects degenerate inputs") {
  CHECK_THROWS_AS(fit_rd_params({{1e5, 2.0}, {2e5, 1.5}}), FitError);
  CHECK_THROWS_AS(fit_rd_params({{1e5, 2.0}, {1e5, 2.0}, {2e5, 1.5}}), FitError);
}

TEST_CASE("fit of the default ladder reproduces its distortions") {
  const auto ladder = default_ladder();
  const double rates[] = {100.9e3, 179.4e3, 293.3e3, 415.3e3, 517.5e3};
  const double psnr[] = {45.1, 44.14, 43.31, 42.68, 42.19};
  double mean_d = 0.0;
  double sse = 0.0;
  for (int l = 0; l < 5; ++l) {
    const double d = psnr_to_distortion(psnr[l]);
    mean_d += d / 5.0;
    const double e = distortion(ladder, rates[l]) - d;
    sse += e * e;
  }
  const double rms = std::sqrt(sse / 5.0);
  CHECK(rms <= 0.10 * mean_d);
  // independent nonlinear-least-squares fit of the same points reaches rms
  // 0.0237820; the profile fit must land in the same basin
  CHECK(rms <= 1.2 * 0.023782034369741658);
  // layer-2 distortion reproduced within the residual band
  CHECK(std::abs(distortion(ladder, 293.3e3) - psnr_to_distortion(43.31)) < 0.1);
}

TEST_CASE("knapsack picks the longest affordable prefix") {
  const auto ladder = default_ladder();
  const auto at_300k = knapsack_layers(ladder, 300e3);
  CHECK(at_300k.count() == 3);
  CHECK(at_300k.base_fits_budget);
  CHECK(at_300k.selected == std::vector<bool>{true, true, true, false, false});

  const auto empty_budget = knapsack_layers(ladder, 0.0);
  CHECK(empty_budget.count() == 1);
  CHECK_FALSE(empty_budget.base_fits_budget);

  CHECK(knapsack_layers(ladder, 517.5e3).count() == 5);
  CHECK(knapsack_layers(ladder, 1e9).count() == 5);
}

TEST_CASE("knapsack equals chain-constrained enumeration on random ladders") {
  Rng rng(4242);
  for (int rep = 0; rep < 300; ++rep) {
    const int levels = 1 + static_cast<int>(rng.below(10));
    const auto ladder = random_ladder(rng, levels);
    const double budget = rng.uniform(0.0, ladder.top_rate_bps() * 1.2);
    const auto fast = knapsack_layers(ladder, budget);
    const auto slow = knapsack_by_enumeration(ladder, budget);
    CHECK(fast.selected == slow.selected);
  }
}

TEST_CASE("knapsack selection grows monotonically with the budget") {
  Rng rng(77);
  for (int rep = 0; rep < 50; ++rep) {
    const auto ladder = random_ladder(rng, 1 + static_cast<int>(rng.below(8)));
    const double b1 = rng.uniform(0.0, ladder.top_rate_bps());
    const double b2 = b1 + rng.uniform(0.0, ladder.top_rate_bps());
    const auto s1 = knapsack_layers(ladder, b1);
    const auto s2 = knapsack_layers(ladder, b2);
    for (std::size_t l = 0; l < s1.selected.size(); ++l) {
      if (s1.selected[l]) CHECK(s2.selected[l]);
    }
  }
}

TEST_CASE("fitted distortion decreases along the ladder when theta is positive") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int levels = 3 + static_cast<int>(rng.below(5));
    std::vector<double> cum;
    double acc = rng.uniform(5e4, 1e5);
    for (int l = 0; l < levels; ++l) {
      cum.push_back(acc);
      acc += rng.uniform(2e4, 1e5);
    }
    const RdParams truth{rng.uniform(1e5, 1e7), rng.uniform(-1e4, cum.front() * 0.5),
                         rng.uniform(0.0, 3.0)};
    std::vector<std::pair<double, double>> pts;
    for (double r : cum) pts.emplace_back(r, truth.theta / (r - truth.r0_bps) + truth.d0);
    const auto ladder = make_ladder(cum, {}, {}, fit_rd_params(pts));
    REQUIRE(ladder.rd_params.theta > 0.0);
    for (int l = 1; l < levels; ++l) {
      CHECK(distortion(ladder, cum[static_cast<std::size_t>(l)]) <
            distortion(ladder, cum[static_cast<std::size_t>(l - 1)]));
    }
  }
}

TEST_CASE("ladder invariants are enforced") {
  CHECK_THROWS_AS(make_ladder({}, {}, {}, RdParams{}), ContractError);
  CHECK_THROWS_AS(make_ladder({2e5, 1e5}, {}, {}, RdParams{1.0, 0.0, 0.0}), ContractError);
  // pole above the base rate is rejected
  CHECK_THROWS_AS(make_ladder({1e5, 2e5}, {}, {}, RdParams{1.0, 1.5e5, 0.0}), ContractError);
}
