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

#ifndef UWSVC_CONSENSUS_HPP
#define UWSVC_CONSENSUS_HPP

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "uwsvc/svc.hpp"

namespace uwsvc {

// ---------------------------------------------------------------------------
// Reconstruction score
// ---------------------------------------------------------------------------

/// A vehicle's value as the final reconstructor: overlap-weighted decode
/// quality of the base-layer videos it received. Stands in for the paper's
/// feature-match count, which needs actual imagery.
struct ReconstructionScore {
  int vehicle_id = -1;
  double rs = 0.0;
  double overlap_term = 0.0;  // sum of overlap probabilities that contributed
  double quality_term = 0.0;  // sum of 1/(1+D) factors that contributed
};

/// RS = sum over neighbors of Pr(overlap) * 1/(1 + distortion at the received
/// rate). Neighbors whose base layer never arrived (rate <= 0 or below the
/// distortion model's pole) contribute nothing. Distortion is floored at 0 so
/// the quality factor stays in (0, 1].
inline ReconstructionScore reconstruction_score(int vehicle_id,
                                                const std::vector<double>& overlap_row,
                                                const std::vector<double>& received_rate_bps,
                                                const SvcLadder& ladder) {
  if (overlap_row.size() != received_rate_bps.size())
    throw ContractError("reconstruction_score: overlap row and rates differ in size");
  ReconstructionScore score;
  score.vehicle_id = vehicle_id;
  for (std::size_t j = 0; j < overlap_row.size(); ++j) {
    const double rate = received_rate_bps[j];
    if (!(rate > 0.0) || !(rate > ladder.rd_params.r0_bps)) continue;
    const double d = std::max(0.0, distortion(ladder, rate));
    const double quality = 1.0 / (1.0 + d);
    score.rs += overlap_row[j] * quality;
    score.overlap_term += overlap_row[j];
    score.quality_term += quality;
  }
  return score;
}

// ---------------------------------------------------------------------------
// Max-consensus
// ---------------------------------------------------------------------------

struct ConsensusNode {
  int id = 0;
  double value = 0.0;          // y, monotone non-decreasing over a run
  std::set<int> neighbors;
  int rounds_heard = 0;
};

/// One asynchronous broadcast: the broadcaster's neighbors keep the max of
/// their own value and the broadcast one; everyone else, including the
/// broadcaster, is untouched.
inline void max_consensus_step(int broadcaster_id, std::vector<ConsensusNode>& nodes) {
  const ConsensusNode* broadcaster = nullptr;
  for (const auto& n : nodes) {
    if (n.id == broadcaster_id) {
      broadcaster = &n;
      break;
    }
  }
  if (broadcaster == nullptr)
    throw ContractError("max_consensus_step: unknown broadcaster id");
  const double y = broadcaster->value;
  for (auto& n : nodes) {
    if (broadcaster->neighbors.count(n.id)) {
      n.value = std::max(n.value, y);
      ++n.rounds_heard;
    }
  }
}

struct ConsensusResult {
  std::vector<double> values;  // final y per node, in node order
  int rounds_used = 0;
  bool converged = false;
};

/// Runs rounds of the broadcast schedule until every value agrees or the
/// round cap is hit. On a connected graph with a schedule covering every node
/// per round, convergence takes at most diameter rounds.
inline ConsensusResult run_consensus(std::vector<ConsensusNode> nodes,
                                     const std::vector<int>& schedule_per_round,
                                     int max_rounds) {
  if (nodes.empty()) throw ContractError("run_consensus: no nodes");
  ConsensusResult result;
  for (int round = 0; round < max_rounds; ++round) {
    for (int id : schedule_per_round) max_consensus_step(id, nodes);
    result.rounds_used = round + 1;
    const double first = nodes.front().value;
    bool all_equal = true;
    for (const auto& n : nodes) all_equal &= (n.value == first);
    if (all_equal) {
      result.converged = true;
      break;
    }
  }
  if (max_rounds == 0) {
    const double first = nodes.front().value;
    result.converged = std::all_of(nodes.begin(), nodes.end(),
                                   [&](const ConsensusNode& n) { return n.value == first; });
  }
  result.values.reserve(nodes.size());
  for (const auto& n : nodes) result.values.push_back(n.value);
  return result;
}

// ---------------------------------------------------------------------------
// FRV election
// ---------------------------------------------------------------------------

struct Election {
  int frv_id = -1;
  double frv_score = 0.0;
  double decided_at_s = 0.0;
};

/// Resolves the election after consensus: every node whose own RS equals the
/// consensus maximum announces intent; the lowest id among them wins once the
/// reply timeout passes. Duplicate (score, id) intents indicate corrupted
/// state and are rejected.
inline Election elect_frv(const std::vector<ConsensusNode>& nodes,
                          const std::vector<double>& own_rs, double timeout_s,
                          double now_s) {
  if (nodes.size() != own_rs.size())
    throw ContractError("elect_frv: node and score counts differ");
  if (nodes.empty()) throw ContractError("elect_frv: no nodes");

  Election election;
  election.decided_at_s = now_s + timeout_s;
  std::set<int> seen_ids;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    // a node announces intent when its own RS matches the consensus maximum
    // it holds
    if (own_rs[i] != nodes[i].value) continue;
    if (!seen_ids.insert(nodes[i].id).second) {
      throw ElectionCollisionError("elect_frv: duplicate intent for id " +
                                   std::to_string(nodes[i].id));
    }
    if (election.frv_id < 0 || nodes[i].id < election.frv_id) {
      election.frv_id = nodes[i].id;
      election.frv_score = own_rs[i];
    }
  }
  if (election.frv_id < 0)
    throw ContractError("elect_frv: no node holds the consensus maximum");
  return election;
}

}  // namespace uwsvc

#endif  // UWSVC_CONSENSUS_HPP
