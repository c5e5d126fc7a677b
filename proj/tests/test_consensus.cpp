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

#include "uwsvc/consensus.hpp"

#include <algorithm>
#include <queue>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

using namespace uwsvc;

namespace {

std::vector<ConsensusNode> make_nodes(const std::vector<double>& values,
                                      const std::vector<std::pair<int, int>>& edges) {
  std::vector<ConsensusNode> nodes;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ConsensusNode n;
    n.id = static_cast<int>(i);
    n.value = values[i];
    nodes.push_back(n);
  }
  for (auto [a, b] : edges) {
    nodes[static_cast<std::size_t>(a)].neighbors.insert(b);
    nodes[static_cast<std::size_t>(b)].neighbors.insert(a);
  }
  return nodes;
}

/// Random connected graph: a random spanning tree plus extra edges.
std::vector<std::pair<int, int>> random_connected_edges(Rng& rng, int n) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    edges.emplace_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(v))), v);
  }
  const int extra = static_cast<int>(rng.below(static_cast<std::uint64_t>(n) + 1));
  for (int e = 0; e < extra; ++e) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (a != b) edges.emplace_back(a, b);
  }
  return edges;
}

int graph_diameter(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (auto [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  int diameter = 0;
  for (int s = 0; s < n; ++s) {
    std::vector<int> dist(static_cast<std::size_t>(n), -1);
    std::queue<int> q;
    q.push(s);
    dist[static_cast<std::size_t>(s)] = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push(v);
        }
      }
    }
    for (int d : dist) diameter = std::max(diameter, d);
  }
  return diameter;
}

SvcLadder score_ladder() {
  return make_ladder({1e5, 2e5, 3e5}, {}, {}, RdParams{5e6, 5e4, 0.5});
}

}  // namespace

TEST_CASE("reconstruction score of an isolated vehicle is zero") {
  const auto score = reconstruction_score(0, {}, {}, score_ladder());
  CHECK(score.rs == 0.0);
}

TEST_CASE("reconstruction score of one perfect neighbor approaches one") {
  SvcLadder ladder = make_ladder({1e5}, {}, {}, RdParams{1e6, 0.0, 0.0});
  const auto score = reconstruction_score(0, {1.0}, {1e18}, ladder);
  CHECK(score.rs == Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("reconstruction score matches the direct four-neighbor evaluation") {
  // frozen: sum of Pr * 1/(1+D) with D = 5e6/(rate-5e4)+0.5; the silent
  // neighbor contributes nothing
  const auto score = reconstruction_score(2, {0.9, 0.7, 0.5, 0.2},
                                          {150e3, 300e3, 450e3, 0.0}, score_ladder());
  CHECK(score.rs == Catch::Approx(0.08574815340450924).epsilon(1e-12));
}

TEST_CASE("reconstruction score is monotone in rate and overlap") {
  const auto ladder = score_ladder();
  const auto base = reconstruction_score(0, {0.5, 0.5}, {2e5, 3e5}, ladder);
  CHECK(reconstruction_score(0, {0.5, 0.5}, {2.5e5, 3e5}, ladder).rs > base.rs);
  CHECK(reconstruction_score(0, {0.6, 0.5}, {2e5, 3e5}, ladder).rs > base.rs);
}

TEST_CASE("a broadcast updates exactly the neighbors") {
  auto nodes = make_nodes({3, 7, 5}, {{0, 1}, {1, 2}, {0, 2}});
  max_consensus_step(1, nodes);
  CHECK(nodes[0].value == 7);
  CHECK(nodes[1].value == 7);
  CHECK(nodes[2].value == 7);

  auto lonely = make_nodes({4, 9}, {});
  max_consensus_step(1, lonely);
  CHECK(lonely[0].value == 4);
  CHECK(lonely[1].value == 9);
}

TEST_CASE("line graph propagates the maximum hop by hop") {
  auto nodes = make_nodes({9, 0, 0}, {{0, 1}, {1, 2}});
  max_consensus_step(0, nodes);
  CHECK(nodes[1].value == 9);
  CHECK(nodes[2].value == 0);
  max_consensus_step(1, nodes);
  CHECK(nodes[2].value == 9);
}

TEST_CASE("consensus on a connected graph reaches the maximum within diameter rounds") {
  auto nodes = make_nodes({1, 5, 3, 2}, {{0, 1}, {1, 2}, {2, 3}});
  const auto result = run_consensus(nodes, {0, 1, 2, 3}, 10);
  CHECK(result.converged);
  CHECK(result.rounds_used <= 3);  // diameter of the path graph
  for (double v : result.values) CHECK(v == 5);
}

TEST_CASE("disconnected components keep their own maxima") {
  auto nodes = make_nodes({1, 5, 7, 2}, {{0, 1}, {2, 3}});
  const auto result = run_consensus(nodes, {0, 1, 2, 3}, 5);
  CHECK_FALSE(result.converged);
  CHECK(result.values == std::vector<double>{5, 5, 7, 7});
}

TEST_CASE("consensus equals the global maximum on random graphs") {
  Rng rng(1337);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(11));
    const auto edges = random_connected_edges(rng, n);
    std::vector<double> values;
    for (int i = 0; i < n; ++i) values.push_back(rng.uniform(0.0, 100.0));
    auto nodes = make_nodes(values, edges);

    std::vector<int> schedule;
    for (int i = 0; i < n; ++i) schedule.push_back(i);
    // random full-coverage schedule
    for (std::size_t i = schedule.size(); i > 1; --i) {
      std::swap(schedule[i - 1], schedule[rng.below(i)]);
    }
    const auto result = run_consensus(nodes, schedule, n);
    const double truth = *std::max_element(values.begin(), values.end());
    CHECK(result.converged);
    CHECK(result.rounds_used <= std::max(1, graph_diameter(n, edges)));
    for (double v : result.values) CHECK(v == truth);
  }
}

TEST_CASE("per-node values never decrease and the global maximum is preserved") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(9));
    auto nodes = make_nodes({}, {});
    nodes.clear();
    std::vector<double> values;
    for (int i = 0; i < n; ++i) values.push_back(rng.uniform(0.0, 10.0));
    nodes = make_nodes(values, random_connected_edges(rng, n));
    const double global_max = *std::max_element(values.begin(), values.end());
    auto prev = nodes;
    for (int step = 0; step < 3 * n; ++step) {
      const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      max_consensus_step(b, nodes);
      double current_max = nodes[0].value;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        CHECK(nodes[i].value >= prev[i].value);
        current_max = std::max(current_max, nodes[i].value);
      }
      CHECK(current_max == global_max);
      prev = nodes;
    }
  }
}

TEST_CASE("the consensus maximum holder becomes the FRV") {
  auto nodes = make_nodes({2, 8, 5}, {{0, 1}, {1, 2}});
  auto result = run_consensus(nodes, {0, 1, 2}, 5);
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i].value = result.values[i];
  const auto election = elect_frv(nodes, {2, 8, 5}, 1.5, 10.0);
  CHECK(election.frv_id == 1);
  CHECK(election.frv_score == 8);
  CHECK(election.decided_at_s == Catch::Approx(11.5));
}

TEST_CASE("score ties resolve to the lowest id") {
  auto nodes = make_nodes({8, 8, 3}, {{0, 1}, {1, 2}});
  auto result = run_consensus(nodes, {0, 1, 2}, 5);
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i].value = result.values[i];
  const auto election = elect_frv(nodes, {8, 8, 3}, 1.0, 0.0);
  CHECK(election.frv_id == 0);
}

TEST_CASE("the elected FRV does not depend on the schedule") {
  Rng rng(2026);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 3 + static_cast<int>(rng.below(10));
    const auto edges = random_connected_edges(rng, n);
    std::vector<double> rs;
    for (int i = 0; i < n; ++i) rs.push_back(rng.uniform(0.0, 50.0));

    int elected = -1;
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<int> schedule;
      for (int i = 0; i < n; ++i) schedule.push_back(i);
      for (std::size_t i = schedule.size(); i > 1; --i) {
        std::swap(schedule[i - 1], schedule[rng.below(i)]);
      }
      auto nodes = make_nodes(rs, edges);
      const auto result = run_consensus(nodes, schedule, n);
      REQUIRE(result.converged);
      for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i].value = result.values[i];
      const auto election = elect_frv(nodes, rs, 1.0, 0.0);
      if (trial == 0) {
        elected = election.frv_id;
      } else {
        CHECK(election.frv_id == elected);
      }
    }
  }
}

TEST_CASE("duplicate claimant ids are state corruption") {
  std::vector<ConsensusNode> nodes(2);
  nodes[0].id = 4;
  nodes[0].value = 9;
  nodes[1].id = 4;
  nodes[1].value = 9;
  CHECK_THROWS_AS(elect_frv(nodes, {9, 9}, 1.0, 0.0), ElectionCollisionError);
}
